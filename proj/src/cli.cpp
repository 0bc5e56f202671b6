#include "ledboard/cli.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "ledboard/api.hpp"
#include "ledboard/board_server.hpp"
#include "ledboard/host.hpp"

namespace ledboard::cli {

using namespace std::chrono_literals;

namespace {

constexpr const char* kDefaultDeviceBind = "127.0.0.1:2400";
constexpr const char* kDefaultServeBind = "127.0.0.1:8080";
constexpr const char* kDefaultDevice = "tcp://127.0.0.1:2400";
constexpr const char* kDefaultService = "http://127.0.0.1:8080";

struct LinkOptions {
  int baud = 2400;
  int oversample = 16;
};

struct FaultOptions {
  std::optional<std::uint64_t> seed;
  double bit_flip = 0.0;
  double drop = 0.0;
};

void add_link_flags(CLI::App* app, LinkOptions& o) {
  app->add_option("--baud", o.baud, "Line rate in bits/s")->check(CLI::PositiveNumber);
  app->add_option("--oversample", o.oversample, "Samples per bit period")
      ->check(CLI::Range(4, 1024));
}

void add_fault_flags(CLI::App* app, FaultOptions& o) {
  app->add_option("--fault-seed", o.seed, "Enable fault injection with this RNG seed");
  app->add_option("--bit-flip", o.bit_flip, "Per-bit flip probability (with --fault-seed)")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--drop", o.drop, "Per-byte drop probability (with --fault-seed)")
      ->check(CLI::Range(0.0, 1.0));
}

uart::FrameConfig frame_config(const LinkOptions& o) {
  auto cfg = uart::FrameConfig::t2400(o.oversample);
  cfg.baud = o.baud;
  return cfg;
}

transport::ChannelSpec channel_spec(const std::string& text, const FaultOptions& f) {
  auto spec = transport::ChannelSpec::parse(text);
  if (f.seed) spec.faults = transport::FaultProfile{f.bit_flip, f.drop, *f.seed};
  return spec;
}

std::string state_text(std::uint8_t b) {
  return "BYTE=" + std::to_string(b) + " LEDS=" + led_string(byte_to_state(b));
}

bool is_service(const std::string& target) { return target.rfind("http://", 0) == 0; }

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const IndexOutOfRange& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidArgument;
  } catch (const api::ClientError& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == api::ClientErrorKind::BadRequest ? kInvalidArgument : kConnectionFailure;
  } catch (const HostError& e) {
    err << "error: " << e.what() << '\n';
    return kConnectionFailure;
  } catch (const transport::TransportError& e) {
    err << "error: " << e.what() << '\n';
    return kConnectionFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidArgument;
  }
}

void wait_for(const std::atomic<bool>& stop) {
  while (!stop) std::this_thread::sleep_for(50ms);
}

int run_device(const std::string& bind, const LinkOptions& link, std::ostream& out,
               const std::atomic<bool>& stop) {
  transport::TcpListener listener(transport::HostPort::parse(bind));
  BoardServer board(frame_config(link));
  std::mutex out_mu;
  board.set_observer([&](const DeviceState& s) {
    std::lock_guard lock(out_mu);
    out << state_line(s) << std::endl;
  });
  {
    std::lock_guard lock(out_mu);
    out << "LISTEN " << listener.local_address().to_string() << std::endl;
  }
  std::jthread server([&](std::stop_token st) { board.serve(listener, st); });
  wait_for(stop);
  server.request_stop();
  return kOk;
}

int run_serve(const std::string& connect, const std::string& bind, const LinkOptions& link,
              const FaultOptions& faults, std::ostream& out, const std::atomic<bool>& stop) {
  SessionConfig cfg;
  cfg.endpoint = channel_spec(connect, faults);
  cfg.baud = link.baud;
  auto session = open_session(cfg);

  // A loopback target means the board runs inside this process.
  std::optional<BoardServer> board;
  std::jthread pump;
  api::DeviceProbe probe;
  if (session.device) {
    board.emplace(frame_config(link));
    pump = std::jthread([&, ep = session.device](std::stop_token st) { board->pump(*ep, st); });
    probe = [&]() -> std::optional<DeviceState> { return board->snapshot(); };
  }

  api::ApiServer server(*session.host, probe);
  server.bind(transport::HostPort::parse(bind));
  server.start();
  const auto where = transport::HostPort::parse(bind);
  out << "LISTEN " << where.host << ':' << server.port() << std::endl;
  wait_for(stop);
  server.stop();
  return kOk;
}

struct CommandArgs {
  enum class Kind { Led, Raw, State } kind = Kind::State;
  int n = 0;
  LedAction action = LedAction::On;
  int value = 0;
};

int run_command(const std::string& connect, const CommandArgs& cmd, const LinkOptions& link,
                const FaultOptions& faults, std::ostream& out) {
  if (is_service(connect)) {
    api::ApiClient client(transport::HostPort::parse(connect.substr(7)));
    api::StateRecord r;
    switch (cmd.kind) {
      case CommandArgs::Kind::Led: r = client.led(cmd.n, cmd.action); break;
      case CommandArgs::Kind::Raw: r = client.write_byte(cmd.value); break;
      case CommandArgs::Kind::State: r = client.state(); break;
    }
    out << state_text(r.byte) << '\n';
    return kOk;
  }

  // Straight to the board: a fresh session, so the cache starts at 0.
  SessionConfig cfg;
  cfg.endpoint = channel_spec(connect, faults);
  cfg.baud = link.baud;
  auto session = open_session(cfg);
  std::optional<BoardServer> board;
  if (session.device) board.emplace(frame_config(link));

  auto& host = *session.host;
  switch (cmd.kind) {
    case CommandArgs::Kind::Led: host.command(LedIndex(cmd.n), cmd.action); break;
    case CommandArgs::Kind::Raw: host.send_state(static_cast<std::uint8_t>(cmd.value)); break;
    case CommandArgs::Kind::State: break;
  }
  if (board) {
    // Drain what was sent so the in-process board shows it.
    for (;;) {
      auto chunk = session.device->receive(256, 10ms);
      if (chunk.empty()) break;
      board->consume(chunk);
    }
    out << state_line(board->snapshot()) << '\n';
  }
  out << state_text(host.cached_byte()) << '\n';
  host.disconnect();
  return kOk;
}

int dump_waveform(int value, const LinkOptions& link, bool inverted, std::ostream& out) {
  auto cfg = frame_config(link);
  if (inverted) cfg.polarity = uart::Polarity::Inverted;
  uart::write_waveform(out, uart::encode_byte(static_cast<std::uint8_t>(value), cfg));
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>& stop) {
  CLI::App app{"Virtual RS-232 LED board and its control console"};
  app.name("ledboard");
  app.require_subcommand(1, 1);

  LinkOptions link;
  FaultOptions faults;
  std::string connect;
  std::string bind;
  CommandArgs cmd;
  bool inverted = false;

  auto* device = app.add_subcommand("device", "Run the virtual LED board on a TCP port");
  device->add_option("--bind", bind, "Listen address host:port")
      ->envname("LEDBOARD_DEVICE_BIND")
      ->default_val(kDefaultDeviceBind);
  add_link_flags(device, link);

  auto* serve = app.add_subcommand("serve", "Run the host control service");
  serve->add_option("--connect", connect, "Board channel: tcp://h:p, loopback or serial:/dev/..")
      ->envname("LEDBOARD_CONNECT")
      ->default_val(kDefaultDevice);
  serve->add_option("--bind", bind, "HTTP listen address host:port")
      ->envname("LEDBOARD_BIND")
      ->default_val(kDefaultServeBind);
  add_link_flags(serve, link);
  add_fault_flags(serve, faults);

  auto add_command = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--connect", connect,
                    "http://h:p for a running service, or a board channel spec")
        ->envname("LEDBOARD_CONNECT")
        ->default_val(kDefaultService);
    add_link_flags(sub, link);
    add_fault_flags(sub, faults);
    return sub;
  };

  auto* set = add_command("set", "Switch LED n on");
  auto* clear = add_command("clear", "Switch LED n off");
  auto* toggle = add_command("toggle", "Toggle LED n");
  for (auto* sub : {set, clear, toggle})
    sub->add_option("n", cmd.n, "LED number")->required()->check(CLI::Range(1, kLedCount));
  auto* raw = add_command("raw", "Send a whole board byte");
  raw->add_option("v", cmd.value, "Byte value")->required()->check(CLI::Range(0, 255));
  auto* state = add_command("state", "Print the host's cached board state");

  auto* dump = app.add_subcommand("dump-waveform", "Print the UART waveform for byte v");
  dump->add_option("v", cmd.value, "Byte value")->required()->check(CLI::Range(0, 255));
  dump->add_flag("--inverted", inverted, "RS-232 side polarity (idle low)");
  add_link_flags(dump, link);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kInvalidArgument;
  }

  return guarded(err, [&]() -> int {
    if (*device) return run_device(bind, link, out, stop);
    if (*serve) return run_serve(connect, bind, link, faults, out, stop);
    if (*dump) return dump_waveform(cmd.value, link, inverted, out);
    if (*raw) cmd.kind = CommandArgs::Kind::Raw;
    if (*state) cmd.kind = CommandArgs::Kind::State;
    if (*set || *clear || *toggle) {
      cmd.kind = CommandArgs::Kind::Led;
      cmd.action = *set ? LedAction::On : *clear ? LedAction::Off : LedAction::Toggle;
    }
    return run_command(connect, cmd, link, faults, out);
  });
}

}  // namespace ledboard::cli
