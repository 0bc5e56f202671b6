#pragma once

// Control-console core. The link to the board is one-directional, so the
// session keeps the last byte it sent and treats that cache as the board
// state.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "ledboard/protocol.hpp"
#include "ledboard/transport.hpp"

namespace ledboard {

// OpenFailed, QueryFailed and ConfigFailed are the three ways bringing up a
// COM port fails: opening the port, reading its settings, applying them.
enum class HostErrorKind { OpenFailed, QueryFailed, ConfigFailed, NotConnected, ChannelClosed };

const char* to_string(HostErrorKind k) noexcept;

class HostError : public std::runtime_error {
 public:
  HostError(HostErrorKind kind, const std::string& what);
  HostErrorKind kind() const noexcept { return kind_; }

 private:
  HostErrorKind kind_;
};

struct SessionConfig {
  transport::ChannelSpec endpoint;
  int baud = 2400;
  int data_bits = 8;
  uart::Parity parity = uart::Parity::None;
  int stop_bits = 1;

  transport::LineSettings line() const;
};

struct StateEvent {
  std::uint64_t sequence = 0;
  std::uint8_t byte = 0;
};

enum class LedAction { On, Off, Toggle };

/// Parses "on" / "off" / "toggle". Throws std::invalid_argument.
LedAction parse_action(const std::string& s);
const char* to_string(LedAction a) noexcept;

/// All mutations are serialized; listeners run inside that critical section
/// in sequence order and must not call back into the session.
class HostSession {
 public:
  /// Reads and applies the line settings. Throws HostError (QueryFailed,
  /// ConfigFailed).
  HostSession(std::shared_ptr<transport::Endpoint> channel, SessionConfig cfg);
  ~HostSession();
  HostSession(const HostSession&) = delete;
  HostSession& operator=(const HostSession&) = delete;

  std::uint8_t cached_byte() const;
  bool connected() const;
  /// Sequence number of the most recent state event; 0 right after connect.
  std::uint64_t sequence() const;
  StateEvent current() const;
  const SessionConfig& config() const noexcept { return cfg_; }

  /// Writes exactly one byte. Throws HostError (NotConnected, ChannelClosed).
  void send_state(std::uint8_t b);

  std::uint8_t command(LedIndex n, LedAction action);
  std::uint8_t command_set(LedIndex n) { return command(n, LedAction::On); }
  std::uint8_t command_clear(LedIndex n) { return command(n, LedAction::Off); }
  std::uint8_t command_toggle(LedIndex n) { return command(n, LedAction::Toggle); }

  void disconnect();

  using Listener = std::function<void(const StateEvent&)>;
  int subscribe(Listener fn);
  void unsubscribe(int id);

 private:
  void send_locked(std::uint8_t b);

  std::shared_ptr<transport::Endpoint> channel_;
  SessionConfig cfg_;

  mutable std::mutex mu_;
  std::uint8_t cached_ = 0;
  bool connected_ = true;
  std::uint64_t sequence_ = 0;
  int next_listener_ = 1;
  std::map<int, Listener> listeners_;
};

struct OpenSession {
  std::unique_ptr<HostSession> host;
  // Board end of a loopback channel; null for remote boards.
  std::shared_ptr<transport::Endpoint> device;
};

/// Opens the channel named in cfg.endpoint and configures it. Throws
/// HostError: OpenFailed, QueryFailed or ConfigFailed.
OpenSession open_session(const SessionConfig& cfg);

}  // namespace ledboard
