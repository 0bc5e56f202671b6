#include "ledboard/api.hpp"

#include <sys/socket.h>

#include <chrono>
#include <mutex>

#include "httplib.h"
#include "json.hpp"

namespace ledboard::api {

using json = nlohmann::json;
using namespace std::chrono_literals;

namespace {

constexpr std::size_t kEventLogCapacity = 4096;

json record_json(const StateRecord& r) {
  json j;
  j["byte"] = r.byte;
  j["leds"] = r.leds.leds;
  j["sequence"] = r.sequence;
  if (r.frames_received) j["frames_received"] = *r.frames_received;
  if (r.framing_errors) j["framing_errors"] = *r.framing_errors;
  return j;
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply_json(res, status, json{{"error", message}});
}

std::string sse_frame(const StateRecord& r) {
  return "id: " + std::to_string(r.sequence) + "\nevent: state\ndata: " + to_json(r) + "\n\n";
}

}  // namespace

std::string to_json(const StateRecord& r) { return record_json(r).dump(); }

StateRecord parse_record(const std::string& text) {
  try {
    const auto j = json::parse(text);
    StateRecord r;
    const int b = j.at("byte").get<int>();
    if (b < 0 || b > 255) throw std::runtime_error("byte out of range");
    r.byte = static_cast<std::uint8_t>(b);
    const auto leds = j.at("leds").get<std::vector<bool>>();
    if (leds.size() != static_cast<std::size_t>(kLedCount))
      throw std::runtime_error("leds must have 8 entries");
    for (std::size_t i = 0; i < leds.size(); ++i) r.leds.leds[i] = leds[i];
    if (r.leds != byte_to_state(r.byte)) throw std::runtime_error("leds disagree with byte");
    if (j.contains("sequence")) r.sequence = j["sequence"].get<std::uint64_t>();
    if (j.contains("frames_received")) r.frames_received = j["frames_received"].get<std::uint64_t>();
    if (j.contains("framing_errors")) r.framing_errors = j["framing_errors"].get<std::uint64_t>();
    return r;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad state record: ") + e.what());
  }
}

// Ordered log of state events shared with the streaming handlers.
struct ApiServer::Hub {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<StateEvent> log;
  bool stopping = false;

  void push(const StateEvent& ev) {
    {
      std::lock_guard lock(mu);
      log.push_back(ev);
      if (log.size() > kEventLogCapacity) log.pop_front();
    }
    cv.notify_all();
  }

  void stop() {
    {
      std::lock_guard lock(mu);
      stopping = true;
    }
    cv.notify_all();
  }
};

ApiServer::ApiServer(HostSession& host, DeviceProbe probe)
    : host_(host),
      probe_(std::move(probe)),
      http_(std::make_unique<httplib::Server>()),
      hub_(std::make_shared<Hub>()) {
  // httplib defaults to SO_REUSEPORT, which would let a second server share
  // the port silently.
  http_->set_socket_options([](socket_t sock) {
    int one = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  });
  http_->new_task_queue = [] { return new httplib::ThreadPool(32); };
  listener_id_ = host_.subscribe([hub = hub_](const StateEvent& ev) { hub->push(ev); });
  install_routes();
}

ApiServer::~ApiServer() {
  stop();
  host_.unsubscribe(listener_id_);
}

StateRecord ApiServer::record_for(const StateEvent& ev) const {
  StateRecord r;
  r.byte = ev.byte;
  r.leds = byte_to_state(ev.byte);
  r.sequence = ev.sequence;
  return r;
}

void ApiServer::install_routes() {
  auto with_device = [this](StateRecord r) {
    if (probe_) {
      if (auto d = probe_()) {
        r.frames_received = d->frames_received;
        r.framing_errors = d->framing_errors;
      }
    }
    return r;
  };

  auto run_command = [this, with_device](httplib::Response& res, auto&& fn) {
    try {
      fn();
      reply_json(res, 200, record_json(with_device(record_for(host_.current()))));
    } catch (const IndexOutOfRange& e) {
      reply_error(res, 400, e.what());
    } catch (const HostError& e) {
      reply_error(res, 503, e.what());
    }
  };

  http_->Get("/state", [this, with_device](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, record_json(with_device(record_for(host_.current()))));
  });

  http_->Post(R"(/led/([^/]+))", [run_command, this](const httplib::Request& req,
                                               httplib::Response& res) {
    int n = 0;
    LedAction action{};
    try {
      std::size_t used = 0;
      const std::string raw = req.matches[1];
      n = std::stoi(raw, &used);
      if (used != raw.size()) throw std::invalid_argument("n");
    } catch (const std::exception&) {
      return reply_error(res, 400, "LED index must be an integer 1..8");
    }
    try {
      const auto body = json::parse(req.body);
      action = parse_action(body.at("action").get<std::string>());
    } catch (const std::exception&) {
      return reply_error(res, 400, R"(body must be {"action": "on"|"off"|"toggle"})");
    }
    run_command(res, [&] { host_.command(LedIndex(n), action); });
  });

  http_->Post("/byte", [run_command, this](const httplib::Request& req, httplib::Response& res) {
    int value = -1;
    try {
      const auto body = json::parse(req.body);
      const auto& v = body.at("value");
      if (!v.is_number_integer()) throw std::invalid_argument("value");
      value = v.get<int>();
    } catch (const std::exception&) {
      return reply_error(res, 400, R"(body must be {"value": 0-255})");
    }
    if (value < 0 || value > 255) return reply_error(res, 400, "value must be in 0..255");
    run_command(res, [&] { host_.send_state(static_cast<std::uint8_t>(value)); });
  });

  http_->Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::uint64_t> resume;
    if (req.has_header("Last-Event-ID")) {
      try {
        resume = std::stoull(req.get_header_value("Last-Event-ID"));
      } catch (const std::exception&) {
      }
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [this, hub = hub_, resume, cursor = std::uint64_t{0}, started = false](
            std::size_t, httplib::DataSink& sink) mutable {
          std::string out;
          // Host lock before hub lock, the same order the listener uses.
          const auto now = started ? StateEvent{} : host_.current();
          std::unique_lock lock(hub->mu);
          if (!started) {
            started = true;
            const bool replay =
                resume && *resume <= now.sequence &&
                (*resume == now.sequence ||
                 (!hub->log.empty() && hub->log.front().sequence <= *resume + 1));
            if (replay) {
              cursor = *resume;
            } else {
              out += sse_frame(record_for(now));
              cursor = now.sequence;
            }
          }
          if (out.empty()) {
            hub->cv.wait_for(lock, 1s, [&] {
              return hub->stopping || (!hub->log.empty() && hub->log.back().sequence > cursor);
            });
          }
          if (hub->stopping) return false;
          for (const auto& ev : hub->log) {
            if (ev.sequence <= cursor) continue;
            out += sse_frame(record_for(ev));
            cursor = ev.sequence;
          }
          lock.unlock();
          if (out.empty()) out = ": keep-alive\n\n";
          return sink.write(out.data(), out.size());
        });
  });
}

void ApiServer::bind(const transport::HostPort& addr) {
  if (addr.port == 0) {
    const int port = http_->bind_to_any_port(addr.host);
    if (port <= 0)
      throw transport::TransportError(transport::ErrorKind::BindFailed, addr.to_string());
    port_ = static_cast<std::uint16_t>(port);
  } else {
    if (!http_->bind_to_port(addr.host, addr.port))
      throw transport::TransportError(transport::ErrorKind::BindFailed, addr.to_string());
    port_ = addr.port;
  }
}

void ApiServer::start() {
  if (thread_.joinable()) return;
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
}

void ApiServer::stop() {
  hub_->stop();
  http_->stop();
  if (thread_.joinable()) thread_.join();
}

ApiClient::ApiClient(transport::HostPort addr) : addr_(std::move(addr)) {}

namespace {

StateRecord expect_record(const httplib::Result& res, const transport::HostPort& addr) {
  if (!res)
    throw ClientError(ClientErrorKind::ConnectFailed,
                      "cannot reach " + addr.to_string() + ": " + httplib::to_string(res.error()));
  if (res->status == 400) {
    std::string msg = res->body;
    try {
      msg = json::parse(res->body).at("error").get<std::string>();
    } catch (const std::exception&) {
    }
    throw ClientError(ClientErrorKind::BadRequest, msg);
  }
  if (res->status != 200)
    throw ClientError(ClientErrorKind::ServerError,
                      "HTTP " + std::to_string(res->status) + ": " + res->body);
  try {
    return parse_record(res->body);
  } catch (const std::runtime_error& e) {
    throw ClientError(ClientErrorKind::ServerError, e.what());
  }
}

httplib::Client make_client(const transport::HostPort& addr) {
  httplib::Client cli(addr.host, addr.port);
  cli.set_connection_timeout(2s);
  cli.set_read_timeout(5s);
  return cli;
}

}  // namespace

StateRecord ApiClient::state() {
  auto cli = make_client(addr_);
  return expect_record(cli.Get("/state"), addr_);
}

StateRecord ApiClient::led(int n, LedAction action) {
  auto cli = make_client(addr_);
  const json body{{"action", to_string(action)}};
  return expect_record(
      cli.Post("/led/" + std::to_string(n), body.dump(), "application/json"), addr_);
}

StateRecord ApiClient::write_byte(int value) {
  auto cli = make_client(addr_);
  const json body{{"value", value}};
  return expect_record(cli.Post("/byte", body.dump(), "application/json"), addr_);
}

void ApiClient::events(const std::function<bool(const StateRecord&)>& on_event,
                       std::optional<std::uint64_t> last_event_id) {
  auto cli = make_client(addr_);
  httplib::Headers headers;
  if (last_event_id) headers.emplace("Last-Event-ID", std::to_string(*last_event_id));
  std::string buffer;
  bool stopped = false;
  auto res = cli.Get("/events", headers, [&](const char* data, std::size_t len) {
    buffer.append(data, len);
    for (auto end = buffer.find("\n\n"); end != std::string::npos; end = buffer.find("\n\n")) {
      const std::string block = buffer.substr(0, end);
      buffer.erase(0, end + 2);
      const auto at = block.find("data: ");
      if (at == std::string::npos) continue;
      const auto line_end = block.find('\n', at);
      if (!on_event(parse_record(block.substr(at + 6, line_end == std::string::npos
                                                          ? std::string::npos
                                                          : line_end - at - 6)))) {
        stopped = true;
        return false;
      }
    }
    return true;
  });
  if (!res && !stopped)
    throw ClientError(ClientErrorKind::ConnectFailed,
                      "event stream from " + addr_.to_string() + ": " +
                          httplib::to_string(res.error()));
}

}  // namespace ledboard::api
