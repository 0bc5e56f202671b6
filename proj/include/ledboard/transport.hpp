#pragma once

// Byte-stream channels between the host and the board.
//
// Every channel carries raw octets in order, with no framing and no
// handshake. Bit-level line behaviour lives in uart, not here.

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ledboard/uart.hpp"

namespace ledboard::transport {

enum class ErrorKind {
  ConnectFailed,
  PortUnavailable,
  ChannelClosed,
  BindFailed,
  QueryFailed,
  ConfigFailed,
};

const char* to_string(ErrorKind k) noexcept;

class TransportError : public std::runtime_error {
 public:
  TransportError(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct FaultProfile {
  double bit_flip_probability = 0.0;  // per bit
  double drop_probability = 0.0;      // per byte
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless both probabilities are in [0, 1].
  void validate() const;
};

/// Stateful form of inject_faults; successive apply() calls continue the
/// same random sequence.
class FaultInjector {
 public:
  explicit FaultInjector(const FaultProfile& p);
  std::vector<std::uint8_t> apply(std::span<const std::uint8_t> bs);

 private:
  bool chance(double p);

  FaultProfile profile_;
  std::mt19937_64 rng_;
};

/// Pure function of (bs, p): same inputs, same output.
std::vector<std::uint8_t> inject_faults(std::span<const std::uint8_t> bs,
                                        const FaultProfile& p);

enum class ChannelKind { Loopback, Tcp, SerialPassthrough };

struct ChannelSpec {
  ChannelKind kind = ChannelKind::Loopback;
  std::string address;  // "host:port" for tcp, device path for serial
  std::chrono::milliseconds latency{0};
  std::optional<FaultProfile> faults;

  /// Accepts "loopback", "tcp://host:port" and "serial:/dev/ttyS0".
  /// Throws std::invalid_argument.
  static ChannelSpec parse(const std::string& text);
  std::string to_string() const;
};

struct LineSettings {
  int baud = 2400;
  int data_bits = 8;
  uart::Parity parity = uart::Parity::None;
  int stop_bits = 1;

  friend bool operator==(const LineSettings&, const LineSettings&) = default;
};

/// One end of a channel. One concurrent reader and one concurrent writer.
class Endpoint {
 public:
  virtual ~Endpoint() = default;

  /// Returns the number of bytes accepted. Throws ChannelClosed.
  virtual std::size_t send(std::span<const std::uint8_t> bs) = 0;
  /// Up to max_bytes; empty on timeout. Throws ChannelClosed once the
  /// channel is closed and drained.
  virtual std::vector<std::uint8_t> receive(std::size_t max_bytes,
                                            std::chrono::milliseconds timeout) = 0;
  virtual void close() = 0;
  virtual bool is_open() const = 0;

  /// Throws QueryFailed.
  virtual LineSettings query_line() = 0;
  /// Throws ConfigFailed for settings the channel cannot carry.
  virtual void configure_line(const LineSettings& s) = 0;
};

struct ChannelHandle {
  std::shared_ptr<Endpoint> host;
  std::shared_ptr<Endpoint> device;  // only for loopback; remote otherwise
};

ChannelHandle open_channel(const ChannelSpec& spec);

/// In-memory pair; a write on one end is readable on the other.
std::pair<std::shared_ptr<Endpoint>, std::shared_ptr<Endpoint>> make_loopback_pair();

/// Wraps an endpoint so outgoing bytes pass through a FaultInjector.
std::shared_ptr<Endpoint> with_faults(std::shared_ptr<Endpoint> inner,
                                      const FaultProfile& p);
/// Wraps an endpoint so every send is delayed by `latency`.
std::shared_ptr<Endpoint> with_latency(std::shared_ptr<Endpoint> inner,
                                       std::chrono::milliseconds latency);

/// Throws ConfigFailed for settings a virtual 8N1-style UART would reject.
void check_virtual_line(const LineSettings& s);

// TCP bridge -----------------------------------------------------------------

struct HostPort {
  std::string host;
  std::uint16_t port = 0;

  /// "127.0.0.1:2400". Throws std::invalid_argument.
  static HostPort parse(const std::string& text);
  std::string to_string() const;
};

/// Throws ConnectFailed.
std::shared_ptr<Endpoint> tcp_connect(const HostPort& addr,
                                      std::chrono::milliseconds timeout = std::chrono::seconds(2));

class TcpListener {
 public:
  /// Throws BindFailed. Port 0 picks a free port.
  explicit TcpListener(const HostPort& addr);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  HostPort local_address() const;
  /// nullptr on timeout.
  std::shared_ptr<Endpoint> accept(std::chrono::milliseconds timeout);
  void close();

 private:
  int fd_ = -1;
  HostPort bound_;
};

// Serial passthrough ---------------------------------------------------------

/// Opens a real serial device (termios). Throws PortUnavailable.
std::shared_ptr<Endpoint> open_serial(const std::string& path);

}  // namespace ledboard::transport
