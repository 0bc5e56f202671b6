#pragma once

// HTTP service over a HostSession.
//
//   GET  /state                     -> state record
//   POST /led/{n}  {"action": "on"|"off"|"toggle"}
//   POST /byte     {"value": 0-255}
//   GET  /events                    -> text/event-stream of state records
//
// A state record is {"byte": 0-255, "leds": [bool x8], "sequence": n} plus
// "frames_received"/"framing_errors" when the board runs in-process.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "ledboard/device.hpp"
#include "ledboard/host.hpp"
#include "ledboard/transport.hpp"

namespace httplib {
class Server;
}

namespace ledboard::api {

struct StateRecord {
  std::uint8_t byte = 0;
  LedState leds;
  std::uint64_t sequence = 0;
  std::optional<std::uint64_t> frames_received;
  std::optional<std::uint64_t> framing_errors;

  friend bool operator==(const StateRecord&, const StateRecord&) = default;
};

std::string to_json(const StateRecord& r);
/// Throws std::runtime_error on a malformed record or inconsistent leds.
StateRecord parse_record(const std::string& json);

using DeviceProbe = std::function<std::optional<DeviceState>()>;

class ApiServer {
 public:
  explicit ApiServer(HostSession& host, DeviceProbe probe = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Throws TransportError(BindFailed). Port 0 picks a free port.
  void bind(const transport::HostPort& addr);
  std::uint16_t port() const noexcept { return port_; }

  /// Serves on a background thread until stop().
  void start();
  void stop();

 private:
  struct Hub;

  StateRecord record_for(const StateEvent& ev) const;
  void install_routes();

  HostSession& host_;
  DeviceProbe probe_;
  std::unique_ptr<httplib::Server> http_;
  std::shared_ptr<Hub> hub_;
  int listener_id_ = 0;
  std::uint16_t port_ = 0;
  std::thread thread_;
};

enum class ClientErrorKind { ConnectFailed, BadRequest, ServerError };

class ClientError : public std::runtime_error {
 public:
  ClientError(ClientErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ClientErrorKind kind() const noexcept { return kind_; }

 private:
  ClientErrorKind kind_;
};

class ApiClient {
 public:
  explicit ApiClient(transport::HostPort addr);

  StateRecord state();
  StateRecord led(int n, LedAction action);
  StateRecord write_byte(int value);

  /// Streams /events, calling `on_event` per record until it returns false.
  void events(const std::function<bool(const StateRecord&)>& on_event,
              std::optional<std::uint64_t> last_event_id = std::nullopt);

 private:
  transport::HostPort addr_;
};

}  // namespace ledboard::api
