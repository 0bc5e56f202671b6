#include "ledboard/host.hpp"

namespace ledboard {

const char* to_string(HostErrorKind k) noexcept {
  switch (k) {
    case HostErrorKind::OpenFailed: return "open-failed";
    case HostErrorKind::QueryFailed: return "query-failed";
    case HostErrorKind::ConfigFailed: return "config-failed";
    case HostErrorKind::NotConnected: return "not-connected";
    case HostErrorKind::ChannelClosed: return "channel-closed";
  }
  return "unknown";
}

HostError::HostError(HostErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

transport::LineSettings SessionConfig::line() const {
  return {baud, data_bits, parity, stop_bits};
}

LedAction parse_action(const std::string& s) {
  if (s == "on") return LedAction::On;
  if (s == "off") return LedAction::Off;
  if (s == "toggle") return LedAction::Toggle;
  throw std::invalid_argument("action must be on, off or toggle");
}

const char* to_string(LedAction a) noexcept {
  switch (a) {
    case LedAction::On: return "on";
    case LedAction::Off: return "off";
    case LedAction::Toggle: return "toggle";
  }
  return "?";
}

HostSession::HostSession(std::shared_ptr<transport::Endpoint> channel, SessionConfig cfg)
    : channel_(std::move(channel)), cfg_(std::move(cfg)) {
  try {
    channel_->query_line();
  } catch (const transport::TransportError& e) {
    throw HostError(HostErrorKind::QueryFailed, e.what());
  }
  try {
    channel_->configure_line(cfg_.line());
  } catch (const transport::TransportError& e) {
    throw HostError(HostErrorKind::ConfigFailed, e.what());
  }
}

HostSession::~HostSession() = default;

std::uint8_t HostSession::cached_byte() const {
  std::lock_guard lock(mu_);
  return cached_;
}

bool HostSession::connected() const {
  std::lock_guard lock(mu_);
  return connected_;
}

std::uint64_t HostSession::sequence() const {
  std::lock_guard lock(mu_);
  return sequence_;
}

StateEvent HostSession::current() const {
  std::lock_guard lock(mu_);
  return {sequence_, cached_};
}

void HostSession::send_state(std::uint8_t b) {
  std::lock_guard lock(mu_);
  send_locked(b);
}

std::uint8_t HostSession::command(LedIndex n, LedAction action) {
  std::lock_guard lock(mu_);
  std::uint8_t next = cached_;
  switch (action) {
    case LedAction::On: next = set_led(cached_, n); break;
    case LedAction::Off: next = clear_led(cached_, n); break;
    case LedAction::Toggle: next = toggle_led(cached_, n); break;
  }
  send_locked(next);
  return next;
}

void HostSession::send_locked(std::uint8_t b) {
  if (!connected_) throw HostError(HostErrorKind::NotConnected, "session is not connected");
  const std::uint8_t wire[1] = {b};
  try {
    channel_->send(wire);
  } catch (const transport::TransportError& e) {
    connected_ = false;
    throw HostError(HostErrorKind::ChannelClosed, e.what());
  }
  cached_ = b;
  const StateEvent ev{++sequence_, cached_};
  for (auto& [id, fn] : listeners_) fn(ev);
}

void HostSession::disconnect() {
  std::lock_guard lock(mu_);
  if (!connected_) return;
  connected_ = false;
  channel_->close();
}

int HostSession::subscribe(Listener fn) {
  std::lock_guard lock(mu_);
  const int id = next_listener_++;
  listeners_.emplace(id, std::move(fn));
  return id;
}

void HostSession::unsubscribe(int id) {
  std::lock_guard lock(mu_);
  listeners_.erase(id);
}

OpenSession open_session(const SessionConfig& cfg) {
  transport::ChannelHandle ch;
  try {
    ch = transport::open_channel(cfg.endpoint);
  } catch (const transport::TransportError& e) {
    throw HostError(HostErrorKind::OpenFailed, e.what());
  } catch (const std::invalid_argument& e) {
    throw HostError(HostErrorKind::OpenFailed, e.what());
  }
  OpenSession s;
  s.host = std::make_unique<HostSession>(ch.host, cfg);
  s.device = std::move(ch.device);
  return s;
}

}  // namespace ledboard
