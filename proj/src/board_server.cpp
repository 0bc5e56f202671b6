#include "ledboard/board_server.hpp"

#include <atomic>
#include <list>
#include <memory>
#include <thread>

namespace ledboard {

using namespace std::chrono_literals;

BoardServer::BoardServer(uart::FrameConfig link) : device_(link) {}

void BoardServer::set_observer(Observer fn) {
  std::lock_guard lock(mu_);
  observer_ = std::move(fn);
}

void BoardServer::consume(std::span<const std::uint8_t> bytes) {
  std::lock_guard lock(mu_);
  for (auto b : bytes) {
    const auto before = device_.state().frames_received;
    device_.feed_waveform(uart::encode_byte(b, device_.link()));
    if (observer_ && device_.state().frames_received != before) observer_(device_.state());
  }
}

DeviceState BoardServer::snapshot() const {
  std::lock_guard lock(mu_);
  return device_.state();
}

void BoardServer::pump(transport::Endpoint& ep, std::stop_token stop) {
  while (!stop.stop_requested()) {
    std::vector<std::uint8_t> chunk;
    try {
      chunk = ep.receive(256, 50ms);
    } catch (const transport::TransportError&) {
      return;
    }
    if (!chunk.empty()) consume(chunk);
  }
}

void BoardServer::serve(transport::TcpListener& listener, std::stop_token stop) {
  struct Worker {
    std::shared_ptr<std::atomic<bool>> done = std::make_shared<std::atomic<bool>>(false);
    std::jthread thread;
  };
  std::list<Worker> workers;
  while (!stop.stop_requested()) {
    workers.remove_if([](const Worker& w) { return w.done->load(); });
    auto ep = listener.accept(100ms);
    if (!ep) continue;
    auto& w = workers.emplace_back();
    w.thread = std::jthread([this, ep, done = w.done](std::stop_token st) {
      pump(*ep, st);
      *done = true;
    });
  }
  for (auto& w : workers) w.thread.request_stop();
}

}  // namespace ledboard
