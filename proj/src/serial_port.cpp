#include <fcntl.h>
#include <poll.h>
#include <termios.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <utility>

#include "ledboard/transport.hpp"

namespace ledboard::transport {

namespace {

constexpr std::pair<int, speed_t> kSpeeds[] = {
    {300, B300},     {600, B600},     {1200, B1200},   {2400, B2400},   {4800, B4800},
    {9600, B9600},   {19200, B19200}, {38400, B38400}, {57600, B57600}, {115200, B115200},
};

class SerialEndpoint final : public Endpoint {
 public:
  SerialEndpoint(int fd, std::string path) : fd_(fd), path_(std::move(path)) {}
  ~SerialEndpoint() override { ::close(fd_); }

  std::size_t send(std::span<const std::uint8_t> bs) override {
    if (closed_) throw TransportError(ErrorKind::ChannelClosed, path_ + " closed");
    std::size_t sent = 0;
    while (sent < bs.size()) {
      const auto n = ::write(fd_, bs.data() + sent, bs.size() - sent);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN) {
          pollfd p{fd_, POLLOUT, 0};
          ::poll(&p, 1, 100);
          continue;
        }
        throw TransportError(ErrorKind::ChannelClosed, path_ + ": " + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
    return sent;
  }

  std::vector<std::uint8_t> receive(std::size_t max_bytes,
                                    std::chrono::milliseconds timeout) override {
    if (closed_) throw TransportError(ErrorKind::ChannelClosed, path_ + " closed");
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) return {};
    std::vector<std::uint8_t> buf(max_bytes);
    const auto n = ::read(fd_, buf.data(), buf.size());
    if (n <= 0) return {};
    buf.resize(static_cast<std::size_t>(n));
    return buf;
  }

  void close() override { closed_ = true; }
  bool is_open() const override { return !closed_; }

  LineSettings query_line() override {
    termios tio{};
    if (::tcgetattr(fd_, &tio) != 0)
      throw TransportError(ErrorKind::QueryFailed, path_ + ": " + std::strerror(errno));
    LineSettings s;
    const speed_t speed = ::cfgetospeed(&tio);
    s.baud = 0;
    for (auto [baud, code] : kSpeeds)
      if (code == speed) s.baud = baud;
    switch (tio.c_cflag & CSIZE) {
      case CS5: s.data_bits = 5; break;
      case CS6: s.data_bits = 6; break;
      case CS7: s.data_bits = 7; break;
      default: s.data_bits = 8; break;
    }
    s.parity = (tio.c_cflag & PARENB) == 0 ? uart::Parity::None
               : (tio.c_cflag & PARODD)    ? uart::Parity::Odd
                                           : uart::Parity::Even;
    s.stop_bits = (tio.c_cflag & CSTOPB) ? 2 : 1;
    return s;
  }

  void configure_line(const LineSettings& s) override {
    termios tio{};
    if (::tcgetattr(fd_, &tio) != 0)
      throw TransportError(ErrorKind::ConfigFailed, path_ + ": " + std::strerror(errno));
    speed_t speed = 0;
    bool found = false;
    for (auto [baud, code] : kSpeeds)
      if (baud == s.baud) {
        speed = code;
        found = true;
      }
    if (!found) throw TransportError(ErrorKind::ConfigFailed, "unsupported baud");
    if (s.parity != uart::Parity::None)
      throw TransportError(ErrorKind::ConfigFailed, "parity is not supported");

    ::cfmakeraw(&tio);
    ::cfsetispeed(&tio, speed);
    ::cfsetospeed(&tio, speed);
    tio.c_cflag &= ~static_cast<tcflag_t>(CSIZE | PARENB | CSTOPB | CRTSCTS);
    switch (s.data_bits) {
      case 5: tio.c_cflag |= CS5; break;
      case 6: tio.c_cflag |= CS6; break;
      case 7: tio.c_cflag |= CS7; break;
      case 8: tio.c_cflag |= CS8; break;
      default: throw TransportError(ErrorKind::ConfigFailed, "unsupported data bits");
    }
    if (s.stop_bits == 2) tio.c_cflag |= CSTOPB;
    else if (s.stop_bits != 1) throw TransportError(ErrorKind::ConfigFailed, "unsupported stop bits");
    tio.c_cflag |= CLOCAL | CREAD;
    if (::tcsetattr(fd_, TCSANOW, &tio) != 0)
      throw TransportError(ErrorKind::ConfigFailed, path_ + ": " + std::strerror(errno));
  }

 private:
  int fd_;
  std::string path_;
  std::atomic<bool> closed_{false};
};

}  // namespace

std::shared_ptr<Endpoint> open_serial(const std::string& path) {
  const int fd = ::open(path.c_str(), O_RDWR | O_NOCTTY | O_NONBLOCK | O_CLOEXEC);
  if (fd < 0)
    throw TransportError(ErrorKind::PortUnavailable, path + ": " + std::strerror(errno));
  return std::make_shared<SerialEndpoint>(fd, path);
}

}  // namespace ledboard::transport
