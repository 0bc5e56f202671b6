// Acceptance suite. One line per criterion; exit status is the number of
// failed criteria.

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ledboard/board_server.hpp"
#include "ledboard/device.hpp"
#include "ledboard/host.hpp"
#include "ledboard/protocol.hpp"
#include "ledboard/uart.hpp"
#include "oracles.hpp"
#include "process.hpp"

using namespace ledboard;
using namespace std::chrono_literals;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<std::uint8_t> drain(transport::Endpoint& ep) {
  std::vector<std::uint8_t> out;
  for (;;) {
    auto chunk = ep.receive(256, 0ms);
    if (chunk.empty()) return out;
    out.insert(out.end(), chunk.begin(), chunk.end());
  }
}

OpenSession loopback_session() {
  SessionConfig cfg;
  cfg.endpoint = transport::ChannelSpec::parse("loopback");
  return open_session(cfg);
}

Outcome golden_values() {
  int bad = 0;
  const auto s20 = byte_to_state(20);
  for (int n = 1; n <= 8; ++n) bad += s20.lit(LedIndex(n)) != (n == 3 || n == 5);
  bad += (18 | (1 << 6)) != 82;
  bad += (82 ^ (1 << 6)) != 18;
  bad += set_led(18, LedIndex(7)) != 82;
  bad += toggle_led(82, LedIndex(7)) != 18;
  bad += byte_to_state(255).lit_count() != 8;
  bad += state_to_byte(s20) != 20;

  Device d;
  d.feed_byte(20);
  bad += d.state().leds != s20;
  d.feed_byte(255);
  bad += d.state().leds.lit_count() != 8;
  return {bad == 0, std::to_string(bad) + " mismatches"};
}

Outcome uart_round_trip() {
  int total = 0, ok = 0;
  for (int os : {4, 8, 16}) {
    for (auto pol : {uart::Polarity::True, uart::Polarity::Inverted}) {
      auto cfg = uart::FrameConfig::t2400(os);
      cfg.polarity = pol;
      for (int b = 0; b < 256; ++b) {
        const auto byte = static_cast<std::uint8_t>(b);
        const auto r = uart::decode(uart::encode_byte(byte, cfg), cfg);
        ++total;
        ok += r.bytes == std::vector<std::uint8_t>{byte} && r.errors.empty();
      }
    }
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " frames"};
}

Outcome framing_isolation() {
  const auto cfg = uart::FrameConfig::t2400();
  std::mt19937 rng(2024);
  std::vector<std::uint8_t> bs(100);
  for (auto& b : bs) b = static_cast<std::uint8_t>(rng());
  auto w = uart::encode_bytes(bs, 1, cfg);
  const std::size_t victim = 42;
  const auto stride = static_cast<std::size_t>(11 * cfg.oversample);
  const auto stop = victim * stride + static_cast<std::size_t>(9 * cfg.oversample);
  std::fill_n(w.samples.begin() + static_cast<long>(stop), cfg.oversample, uart::Level::Low);
  const auto r = uart::decode(w, cfg);
  auto expected = bs;
  expected.erase(expected.begin() + static_cast<long>(victim));
  const bool pass = r.bytes.size() == 99 && r.errors.size() == 1 && r.bytes == expected;
  return {pass, std::to_string(r.bytes.size()) + " bytes, " + std::to_string(r.errors.size()) +
                    " framing errors"};
}

Outcome skew_tolerance() {
  const auto cfg = uart::FrameConfig::t2400(16);
  auto run = [&](const uart::Waveform& w) { return uart::decode(w, cfg); };
  const auto first = oracle::sweep_skew(run, 16);
  const auto second = oracle::sweep_skew(run, 16);
  const bool stable = first.tolerance == second.tolerance && first.break_point == second.break_point;
  char buf[128];
  std::snprintf(buf, sizeof buf, "tolerance +-%.1f%%, break at %.1f%%, %s", first.tolerance * 100,
                first.break_point * 100, stable ? "stable" : "UNSTABLE");
  return {stable && first.tolerance >= 0.03, buf};
}

Outcome end_to_end() {
  auto s = loopback_session();
  BoardServer board;
  std::mt19937 rng(1000);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const LedIndex led(1 + static_cast<int>(rng() % 8));
    switch (rng() % 4) {
      case 0: s.host->command_set(led); break;
      case 1: s.host->command_clear(led); break;
      case 2: s.host->command_toggle(led); break;
      default: s.host->send_state(static_cast<std::uint8_t>(rng())); break;
    }
    board.consume(drain(*s.device));
    mismatches += board.snapshot().regs.portb != s.host->cached_byte();
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over 1000 commands"};
}

Outcome oracle_equivalence() {
  std::mt19937 rng(10000);
  int differing = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    auto s = loopback_session();
    std::vector<std::uint8_t> folded;
    std::uint8_t model = 0;
    const int n = 1 + static_cast<int>(rng() % 16);
    for (int i = 0; i < n; ++i) {
      const LedIndex led(1 + static_cast<int>(rng() % 8));
      switch (rng() % 4) {
        case 0: model = set_led(model, led); s.host->command_set(led); break;
        case 1: model = clear_led(model, led); s.host->command_clear(led); break;
        case 2: model = toggle_led(model, led); s.host->command_toggle(led); break;
        default:
          model = static_cast<std::uint8_t>(rng());
          s.host->send_state(model);
          break;
      }
      folded.push_back(model);
    }
    differing += drain(*s.device) != folded;
  }
  return {differing == 0, std::to_string(differing) + " of 10000 trials differ"};
}

Outcome electrical() {
  const auto nominal = led_current(ElectricalParams{});
  ElectricalParams hot;
  hot.vf_led = 0.0;
  hot.r_led = 100.0;
  const auto over = led_current(hot);
  const bool pass =
      std::abs(nominal.milliamps - 9.97) <= 0.01 && !nominal.over_limit && over.over_limit;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.4f mA (limit ok=%d), %.1f mA (over=%d)", nominal.milliamps,
                !nominal.over_limit, over.milliamps, over.over_limit);
  return {pass, buf};
}

std::string listen_address(testproc::Child& c) {
  auto line = c.read_line(5s);
  if (!line || line->rfind("LISTEN ", 0) != 0) throw std::runtime_error("no LISTEN line");
  return line->substr(7);
}

Outcome cli_contract() {
  const std::string exe = LEDBOARD_EXE;
  testproc::Child device(exe, {"device", "--bind", "127.0.0.1:0"});
  const auto dev = listen_address(device);
  testproc::Child serve(exe, {"serve", "--connect", "tcp://" + dev, "--bind", "127.0.0.1:0"});
  const auto svc = "http://" + listen_address(serve);

  std::mt19937 rng(32);
  std::vector<int> values{0, 20, 82, 255};
  while (values.size() < 32) values.push_back(static_cast<int>(rng() % 256));

  int failures = 0;
  for (int v : values) {
    const auto raw = testproc::run(exe, {"raw", std::to_string(v), "--connect", svc});
    const auto state = testproc::run(exe, {"state", "--connect", svc});
    const auto want = "BYTE=" + std::to_string(v) + " ";
    failures += raw.exit_code != 0 || state.exit_code != 0 || state.out.rfind(want, 0) != 0 ||
                !raw.err.empty() || !state.err.empty();
  }
  const auto bad = testproc::run(exe, {"set", "9", "--connect", svc});
  const bool usage = bad.exit_code == 2;
  serve.terminate();
  device.terminate();
  return {failures == 0 && usage, std::to_string(values.size() - static_cast<std::size_t>(failures)) +
                                      "/32 round trips, set 9 exit " + std::to_string(bad.exit_code)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"golden values", golden_values},
      {"exhaustive UART round trip", uart_round_trip},
      {"framing-error isolation", framing_isolation},
      {"skew tolerance", skew_tolerance},
      {"end-to-end coherence", end_to_end},
      {"oracle equivalence", oracle_equivalence},
      {"electrical check", electrical},
      {"CLI contract", cli_contract},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  }
  std::fflush(stdout);
  return failed;
}
