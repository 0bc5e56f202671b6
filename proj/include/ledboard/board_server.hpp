#pragma once

// The simulated board behind a transport endpoint. Every received octet is
// put on the line as a UART frame and decoded by the device, so the whole
// bit-level path runs for each byte.

#include <functional>
#include <mutex>
#include <span>
#include <stop_token>

#include "ledboard/device.hpp"
#include "ledboard/transport.hpp"

namespace ledboard {

class BoardServer {
 public:
  explicit BoardServer(uart::FrameConfig link = uart::FrameConfig::t2400());

  /// Called once per decoded frame, in order, with the new state.
  using Observer = std::function<void(const DeviceState&)>;
  void set_observer(Observer fn);

  void consume(std::span<const std::uint8_t> bytes);
  DeviceState snapshot() const;

  /// Reads from `ep` until it closes or stop is requested.
  void pump(transport::Endpoint& ep, std::stop_token stop);
  /// Accept loop; each connection is pumped on its own thread. Returns when
  /// stop is requested.
  void serve(transport::TcpListener& listener, std::stop_token stop);

 private:
  mutable std::mutex mu_;
  Device device_;
  Observer observer_;
};

}  // namespace ledboard
