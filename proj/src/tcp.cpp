#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>

#include "ledboard/transport.hpp"

namespace ledboard::transport {

namespace {

std::string errno_text() { return std::strerror(errno); }

class TcpEndpoint final : public Endpoint {
 public:
  explicit TcpEndpoint(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpEndpoint() override {
    close();
    ::close(fd_);
  }

  std::size_t send(std::span<const std::uint8_t> bs) override {
    if (closed_) throw TransportError(ErrorKind::ChannelClosed, "socket closed");
    std::size_t sent = 0;
    while (sent < bs.size()) {
      const auto n = ::send(fd_, bs.data() + sent, bs.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        closed_ = true;
        throw TransportError(ErrorKind::ChannelClosed, errno_text());
      }
      sent += static_cast<std::size_t>(n);
    }
    return sent;
  }

  std::vector<std::uint8_t> receive(std::size_t max_bytes,
                                    std::chrono::milliseconds timeout) override {
    if (closed_) throw TransportError(ErrorKind::ChannelClosed, "socket closed");
    pollfd p{fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (r == 0 || (r < 0 && errno == EINTR)) return {};
    if (r < 0) throw TransportError(ErrorKind::ChannelClosed, errno_text());
    std::vector<std::uint8_t> buf(max_bytes);
    const auto n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n <= 0) {
      closed_ = true;
      throw TransportError(ErrorKind::ChannelClosed, n == 0 ? "peer closed" : errno_text());
    }
    buf.resize(static_cast<std::size_t>(n));
    return buf;
  }

  void close() override {
    if (!closed_.exchange(true)) ::shutdown(fd_, SHUT_RDWR);
  }
  bool is_open() const override { return !closed_; }

  // A TCP bridge has no line of its own; it mirrors whatever the virtual
  // UART on the far side accepts.
  LineSettings query_line() override {
    if (closed_) throw TransportError(ErrorKind::QueryFailed, "socket closed");
    return line_;
  }
  void configure_line(const LineSettings& s) override {
    check_virtual_line(s);
    line_ = s;
  }

 private:
  int fd_;
  std::atomic<bool> closed_{false};
  LineSettings line_;
};

addrinfo* resolve(const HostPort& addr, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const auto port = std::to_string(addr.port);
  if (::getaddrinfo(addr.host.c_str(), port.c_str(), &hints, &res) != 0) return nullptr;
  return res;
}

bool connect_with_timeout(int fd, const sockaddr* sa, socklen_t len,
                          std::chrono::milliseconds timeout) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int r = ::connect(fd, sa, len);
  if (r < 0 && errno == EINPROGRESS) {
    pollfd p{fd, POLLOUT, 0};
    r = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (r <= 0) return false;
    int err = 0;
    socklen_t elen = sizeof err;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &elen);
    if (err != 0) return false;
  } else if (r < 0) {
    return false;
  }
  ::fcntl(fd, F_SETFL, flags);
  return true;
}

}  // namespace

std::shared_ptr<Endpoint> tcp_connect(const HostPort& addr, std::chrono::milliseconds timeout) {
  addrinfo* res = resolve(addr, false);
  if (!res) throw TransportError(ErrorKind::ConnectFailed, "cannot resolve " + addr.to_string());
  for (auto* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (connect_with_timeout(fd, ai->ai_addr, ai->ai_addrlen, timeout)) {
      ::freeaddrinfo(res);
      return std::make_shared<TcpEndpoint>(fd);
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw TransportError(ErrorKind::ConnectFailed, "cannot connect to " + addr.to_string());
}

TcpListener::TcpListener(const HostPort& addr) {
  addrinfo* res = resolve(addr, true);
  if (!res) throw TransportError(ErrorKind::BindFailed, "cannot resolve " + addr.to_string());
  std::string why = "no usable address";
  for (auto* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 8) == 0) {
      fd_ = fd;
      break;
    }
    why = errno_text();
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw TransportError(ErrorKind::BindFailed, addr.to_string() + ": " + why);

  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&ss), &len);
  bound_.host = addr.host;
  bound_.port = ss.ss_family == AF_INET6
                    ? ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port)
                    : ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
}

TcpListener::~TcpListener() { close(); }

HostPort TcpListener::local_address() const { return bound_; }

std::shared_ptr<Endpoint> TcpListener::accept(std::chrono::milliseconds timeout) {
  if (fd_ < 0) throw TransportError(ErrorKind::ChannelClosed, "listener closed");
  pollfd p{fd_, POLLIN, 0};
  if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0) return nullptr;
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) return nullptr;
  return std::make_shared<TcpEndpoint>(fd);
}

void TcpListener::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

}  // namespace ledboard::transport
