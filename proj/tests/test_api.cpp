#include <future>
#include <random>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "ledboard/api.hpp"
#include "ledboard/board_server.hpp"

using namespace ledboard;
using namespace std::chrono_literals;

namespace {

struct Fixture {
  OpenSession session;
  BoardServer board;
  std::jthread pump;
  std::unique_ptr<api::ApiServer> server;

  Fixture() {
    SessionConfig cfg;
    cfg.endpoint = transport::ChannelSpec::parse("loopback");
    session = open_session(cfg);
    pump = std::jthread([this](std::stop_token st) { board.pump(*session.device, st); });
    server = std::make_unique<api::ApiServer>(
        *session.host, [this]() -> std::optional<DeviceState> { return board.snapshot(); });
    server->bind(transport::HostPort::parse("127.0.0.1:0"));
    server->start();
  }

  transport::HostPort address() const { return {"127.0.0.1", server->port()}; }
  api::ApiClient client() const { return api::ApiClient(address()); }

  httplib::Result post(const std::string& path, const std::string& body) const {
    httplib::Client c("127.0.0.1", server->port());
    return c.Post(path, body, "application/json");
  }

  // Collects `count` event records on a background thread.
  std::future<std::vector<api::StateRecord>> collect(
      std::size_t count, std::optional<std::uint64_t> resume = std::nullopt) const {
    auto ready = std::make_shared<std::promise<void>>();
    auto started = ready->get_future();
    auto fut = std::async(std::launch::async, [addr = address(), count, resume, ready] {
      std::vector<api::StateRecord> got;
      bool signalled = false;
      api::ApiClient(addr).events(
          [&](const api::StateRecord& r) {
            got.push_back(r);
            if (!signalled) {
              signalled = true;
              ready->set_value();
            }
            return got.size() < count;
          },
          resume);
      if (!signalled) ready->set_value();
      return got;
    });
    started.wait_for(3s);
    return fut;
  }

  void wait_for_frames(std::uint64_t n) const {
    const auto deadline = std::chrono::steady_clock::now() + 3s;
    while (board.snapshot().frames_received < n && std::chrono::steady_clock::now() < deadline)
      std::this_thread::sleep_for(5ms);
  }
};

}  // namespace

TEST_CASE("state record json") {
  api::StateRecord r;
  r.byte = 20;
  r.leds = byte_to_state(20);
  r.sequence = 3;
  const auto text = api::to_json(r);
  CHECK(text == R"({"byte":20,"leds":[false,false,true,false,true,false,false,false],"sequence":3})");
  CHECK(api::parse_record(text) == r);

  r.frames_received = 4;
  r.framing_errors = 1;
  CHECK(api::parse_record(api::to_json(r)) == r);

  CHECK_THROWS_AS(api::parse_record(R"({"byte":20,"leds":[true]})"), std::runtime_error);
  CHECK_THROWS_AS(api::parse_record(
                      R"({"byte":21,"leds":[false,false,true,false,true,false,false,false]})"),
                  std::runtime_error);
  CHECK_THROWS_AS(api::parse_record("not json"), std::runtime_error);
}

TEST_CASE("GET /state after connect") {
  Fixture f;
  const auto r = f.client().state();
  CHECK(r.byte == 0);
  CHECK(r.leds == LedState{});
  CHECK(r.sequence == 0);
  CHECK(r.frames_received == 0u);
  CHECK(r.framing_errors == 0u);
}

TEST_CASE("POST /byte and /led") {
  Fixture f;
  auto c = f.client();
  auto r = c.write_byte(255);
  CHECK(r.byte == 255);
  CHECK(r.leds.lit_count() == 8);

  c.write_byte(18);
  r = c.led(7, LedAction::Toggle);
  CHECK(r.byte == 82);
  r = c.led(7, LedAction::Off);
  CHECK(r.byte == 18);
  r = c.led(1, LedAction::On);
  CHECK(r.byte == 19);

  f.wait_for_frames(5);
  const auto s = c.state();
  CHECK(s.byte == 19);
  CHECK(s.frames_received == 5u);
  CHECK(f.board.snapshot().regs.portb == 19);
}

TEST_CASE("bad requests are rejected with 400 and change nothing") {
  Fixture f;
  f.client().write_byte(7);
  for (auto [path, body] : std::vector<std::pair<std::string, std::string>>{
           {"/led/9", R"({"action":"on"})"},
           {"/led/0", R"({"action":"toggle"})"},
           {"/led/x", R"({"action":"on"})"},
           {"/led/3", R"({"action":"blink"})"},
           {"/led/3", "garbage"},
           {"/byte", R"({"value":256})"},
           {"/byte", R"({"value":-1})"},
           {"/byte", R"({"value":"12"})"},
           {"/byte", R"({"value":1.5})"},
           {"/byte", R"({})"},
       }) {
    CAPTURE(path);
    CAPTURE(body);
    auto res = f.post(path, body);
    REQUIRE(res);
    CHECK(res->status == 400);
  }
  CHECK(f.client().state().byte == 7);
  CHECK(f.session.host->sequence() == 1);

  try {
    f.client().led(9, LedAction::On);
    FAIL("expected bad request");
  } catch (const api::ClientError& e) {
    CHECK(e.kind() == api::ClientErrorKind::BadRequest);
  }
}

TEST_CASE("event stream") {
  Fixture f;

  SUBCASE("toggle emits the new state") {
    f.client().write_byte(18);
    auto fut = f.collect(2);
    f.client().led(7, LedAction::Toggle);
    const auto got = fut.get();
    REQUIRE(got.size() == 2);
    CHECK(got[0].byte == 18);  // snapshot on subscribe
    CHECK(got[1].byte == 82);
    CHECK(got[1].sequence == got[0].sequence + 1);
  }

  SUBCASE("raw 255 lights everything") {
    auto fut = f.collect(2);
    f.client().write_byte(255);
    const auto got = fut.get();
    REQUIRE(got.size() == 2);
    CHECK(got[1].leds.lit_count() == 8);
  }

  SUBCASE("gap-free ordered stream reconstructs the cache") {
    constexpr std::size_t kCommands = 200;
    auto a = f.collect(kCommands + 1);
    auto b = f.collect(kCommands + 1);
    std::mt19937 rng(4);
    std::vector<std::thread> writers;
    for (int t = 0; t < 2; ++t)
      writers.emplace_back([&, seed = rng()] {
        std::mt19937 local(seed);
        auto c = f.client();
        for (std::size_t i = 0; i < kCommands / 2; ++i)
          c.led(1 + static_cast<int>(local() % 8), LedAction::Toggle);
      });
    for (auto& w : writers) w.join();
    for (auto* fut : {&a, &b}) {
      const auto got = fut->get();
      REQUIRE(got.size() == kCommands + 1);
      for (std::size_t i = 1; i < got.size(); ++i) {
        CHECK(got[i].sequence == got[i - 1].sequence + 1);
        CHECK(__builtin_popcount(static_cast<unsigned>(got[i].byte ^ got[i - 1].byte)) == 1);
      }
      CHECK(got.back().byte == f.session.host->cached_byte());
    }
  }

  SUBCASE("resume from Last-Event-ID replays what was missed") {
    auto c = f.client();
    c.write_byte(1);  // seq 1
    c.write_byte(2);  // seq 2
    c.write_byte(3);  // seq 3
    const auto got = f.collect(2, 1).get();
    REQUIRE(got.size() == 2);
    CHECK(got[0].sequence == 2);
    CHECK(got[0].byte == 2);
    CHECK(got[1].sequence == 3);
    CHECK(got[1].byte == 3);
  }

  SUBCASE("unknown Last-Event-ID falls back to a snapshot") {
    f.client().write_byte(9);
    const auto got = f.collect(1, 500).get();
    REQUIRE(got.size() == 1);
    CHECK(got[0].byte == 9);
    CHECK(got[0].sequence == 1);
  }
}

TEST_CASE("service reports channel loss") {
  Fixture f;
  f.session.device->close();
  auto res = f.post("/byte", R"({"value":3})");
  REQUIRE(res);
  CHECK(res->status == 503);
}

TEST_CASE("bind conflicts") {
  Fixture f;
  SessionConfig cfg;
  cfg.endpoint = transport::ChannelSpec::parse("loopback");
  auto other = open_session(cfg);
  api::ApiServer second(*other.host);
  try {
    second.bind(f.address());
    FAIL("expected bind-failed");
  } catch (const transport::TransportError& e) {
    CHECK(e.kind() == transport::ErrorKind::BindFailed);
  }
}

TEST_CASE("client against nothing") {
  transport::HostPort dead;
  {
    transport::TcpListener l(transport::HostPort::parse("127.0.0.1:0"));
    dead = l.local_address();
  }
  try {
    api::ApiClient(dead).state();
    FAIL("expected connect failure");
  } catch (const api::ClientError& e) {
    CHECK(e.kind() == api::ClientErrorKind::ConnectFailed);
  }
}
