#include "ledboard/transport.hpp"

#include <algorithm>
#include <array>
#include <condition_variable>
#include <deque>
#include <thread>

namespace ledboard::transport {

const char* to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::ConnectFailed: return "connect-failed";
    case ErrorKind::PortUnavailable: return "port-unavailable";
    case ErrorKind::ChannelClosed: return "channel-closed";
    case ErrorKind::BindFailed: return "bind-failed";
    case ErrorKind::QueryFailed: return "query-failed";
    case ErrorKind::ConfigFailed: return "config-failed";
  }
  return "unknown";
}

TransportError::TransportError(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

ChannelSpec ChannelSpec::parse(const std::string& text) {
  ChannelSpec spec;
  if (text == "loopback") {
    spec.kind = ChannelKind::Loopback;
  } else if (text.rfind("tcp://", 0) == 0) {
    spec.kind = ChannelKind::Tcp;
    spec.address = text.substr(6);
    HostPort::parse(spec.address);
  } else if (text.rfind("serial:", 0) == 0) {
    spec.kind = ChannelKind::SerialPassthrough;
    spec.address = text.substr(7);
    if (spec.address.empty()) throw std::invalid_argument("serial spec needs a device path");
  } else {
    throw std::invalid_argument("unrecognised channel spec '" + text + "'");
  }
  return spec;
}

std::string ChannelSpec::to_string() const {
  switch (kind) {
    case ChannelKind::Loopback: return "loopback";
    case ChannelKind::Tcp: return "tcp://" + address;
    case ChannelKind::SerialPassthrough: return "serial:" + address;
  }
  return {};
}

HostPort HostPort::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw std::invalid_argument("expected host:port, got '" + text + "'");
  HostPort hp;
  hp.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  if (!std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
      port.size() > 5)
    throw std::invalid_argument("bad port in '" + text + "'");
  const int value = std::stoi(port);
  if (value > 65535) throw std::invalid_argument("bad port in '" + text + "'");
  hp.port = static_cast<std::uint16_t>(value);
  return hp;
}

std::string HostPort::to_string() const { return host + ":" + std::to_string(port); }

void check_virtual_line(const LineSettings& s) {
  static constexpr std::array kRates{300, 600, 1200, 2400, 4800, 9600, 19200, 38400, 57600, 115200};
  if (std::find(kRates.begin(), kRates.end(), s.baud) == kRates.end())
    throw TransportError(ErrorKind::ConfigFailed, "unsupported baud " + std::to_string(s.baud));
  if (s.data_bits < 5 || s.data_bits > 8)
    throw TransportError(ErrorKind::ConfigFailed,
                         "unsupported data bits " + std::to_string(s.data_bits));
  if (s.stop_bits < 1 || s.stop_bits > 2)
    throw TransportError(ErrorKind::ConfigFailed,
                         "unsupported stop bits " + std::to_string(s.stop_bits));
  if (s.parity != uart::Parity::None)
    throw TransportError(ErrorKind::ConfigFailed, "parity is not supported");
}

namespace {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> data;
  bool closed = false;

  void close() {
    {
      std::lock_guard lock(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

class LoopbackEndpoint final : public Endpoint {
 public:
  LoopbackEndpoint(std::shared_ptr<Pipe> out, std::shared_ptr<Pipe> in)
      : out_(std::move(out)), in_(std::move(in)) {}
  ~LoopbackEndpoint() override { close(); }

  std::size_t send(std::span<const std::uint8_t> bs) override {
    {
      std::lock_guard lock(out_->mu);
      if (out_->closed) throw TransportError(ErrorKind::ChannelClosed, "loopback closed");
      out_->data.insert(out_->data.end(), bs.begin(), bs.end());
    }
    out_->cv.notify_all();
    return bs.size();
  }

  std::vector<std::uint8_t> receive(std::size_t max_bytes,
                                    std::chrono::milliseconds timeout) override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait_for(lock, timeout, [&] { return !in_->data.empty() || in_->closed; });
    if (in_->data.empty()) {
      if (in_->closed) throw TransportError(ErrorKind::ChannelClosed, "loopback closed");
      return {};
    }
    const auto n = std::min(max_bytes, in_->data.size());
    std::vector<std::uint8_t> out(in_->data.begin(), in_->data.begin() + static_cast<long>(n));
    in_->data.erase(in_->data.begin(), in_->data.begin() + static_cast<long>(n));
    return out;
  }

  void close() override {
    out_->close();
    in_->close();
  }

  bool is_open() const override {
    std::lock_guard lock(out_->mu);
    return !out_->closed;
  }

  LineSettings query_line() override {
    std::lock_guard lock(line_mu_);
    return line_;
  }

  void configure_line(const LineSettings& s) override {
    check_virtual_line(s);
    std::lock_guard lock(line_mu_);
    line_ = s;
  }

 private:
  std::shared_ptr<Pipe> out_;
  std::shared_ptr<Pipe> in_;
  std::mutex line_mu_;
  LineSettings line_;
};

class FaultyEndpoint final : public Endpoint {
 public:
  FaultyEndpoint(std::shared_ptr<Endpoint> inner, const FaultProfile& p)
      : inner_(std::move(inner)), injector_(p) {}

  std::size_t send(std::span<const std::uint8_t> bs) override {
    std::vector<std::uint8_t> wire;
    {
      std::lock_guard lock(mu_);
      wire = injector_.apply(bs);
    }
    inner_->send(wire);
    return bs.size();
  }
  std::vector<std::uint8_t> receive(std::size_t max_bytes,
                                    std::chrono::milliseconds timeout) override {
    return inner_->receive(max_bytes, timeout);
  }
  void close() override { inner_->close(); }
  bool is_open() const override { return inner_->is_open(); }
  LineSettings query_line() override { return inner_->query_line(); }
  void configure_line(const LineSettings& s) override { inner_->configure_line(s); }

 private:
  std::shared_ptr<Endpoint> inner_;
  std::mutex mu_;
  FaultInjector injector_;
};

class DelayedEndpoint final : public Endpoint {
 public:
  DelayedEndpoint(std::shared_ptr<Endpoint> inner, std::chrono::milliseconds latency)
      : inner_(std::move(inner)), latency_(latency) {}

  std::size_t send(std::span<const std::uint8_t> bs) override {
    if (!inner_->is_open()) throw TransportError(ErrorKind::ChannelClosed, "channel closed");
    std::this_thread::sleep_for(latency_);
    return inner_->send(bs);
  }
  std::vector<std::uint8_t> receive(std::size_t max_bytes,
                                    std::chrono::milliseconds timeout) override {
    return inner_->receive(max_bytes, timeout);
  }
  void close() override { inner_->close(); }
  bool is_open() const override { return inner_->is_open(); }
  LineSettings query_line() override { return inner_->query_line(); }
  void configure_line(const LineSettings& s) override { inner_->configure_line(s); }

 private:
  std::shared_ptr<Endpoint> inner_;
  std::chrono::milliseconds latency_;
};

}  // namespace

std::pair<std::shared_ptr<Endpoint>, std::shared_ptr<Endpoint>> make_loopback_pair() {
  auto a_to_b = std::make_shared<Pipe>();
  auto b_to_a = std::make_shared<Pipe>();
  return {std::make_shared<LoopbackEndpoint>(a_to_b, b_to_a),
          std::make_shared<LoopbackEndpoint>(b_to_a, a_to_b)};
}

std::shared_ptr<Endpoint> with_faults(std::shared_ptr<Endpoint> inner, const FaultProfile& p) {
  return std::make_shared<FaultyEndpoint>(std::move(inner), p);
}

std::shared_ptr<Endpoint> with_latency(std::shared_ptr<Endpoint> inner,
                                       std::chrono::milliseconds latency) {
  return std::make_shared<DelayedEndpoint>(std::move(inner), latency);
}

ChannelHandle open_channel(const ChannelSpec& spec) {
  if (spec.faults) spec.faults->validate();
  ChannelHandle h;
  switch (spec.kind) {
    case ChannelKind::Loopback: {
      auto [host, device] = make_loopback_pair();
      h.host = std::move(host);
      h.device = std::move(device);
      break;
    }
    case ChannelKind::Tcp:
      h.host = tcp_connect(HostPort::parse(spec.address));
      break;
    case ChannelKind::SerialPassthrough:
      h.host = open_serial(spec.address);
      break;
  }
  // Faults apply on the host-to-board direction, the only one the board uses.
  if (spec.faults) h.host = with_faults(std::move(h.host), *spec.faults);
  if (spec.latency.count() > 0) h.host = with_latency(std::move(h.host), spec.latency);
  return h;
}

}  // namespace ledboard::transport
