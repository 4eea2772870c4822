#include "videoservice/net.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "videoservice/errors.h"

namespace videoservice::net {

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    Close();
    fd_ = other.Release();
  }
  return *this;
}

void Socket::Close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::Shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

bool Socket::SendAll(std::span<const uint8_t> bytes) {
  size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<size_t>(n);
  }
  return true;
}

bool Socket::SendAll(std::string_view text) {
  return SendAll(std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

long Socket::Receive(std::span<uint8_t> buffer) {
  for (;;) {
    const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (n < 0 && errno == EINTR) continue;
    return static_cast<long>(n);
  }
}

bool Socket::WaitReadable(std::chrono::milliseconds timeout) const {
  pollfd pfd{fd_, POLLIN, 0};
  for (;;) {
    const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc < 0 && errno == EINTR) continue;
    return rc > 0;
  }
}

bool Socket::PeerClosed() const {
  pollfd pfd{fd_, POLLRDHUP, 0};
  if (::poll(&pfd, 1, 0) <= 0) return false;
  return (pfd.revents & (POLLRDHUP | POLLHUP | POLLERR | POLLNVAL)) != 0;
}

void Socket::SetSendBuffer(int bytes) { ::setsockopt(fd_, SOL_SOCKET, SO_SNDBUF, &bytes, sizeof bytes); }

void Socket::SetReceiveBuffer(int bytes) { ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &bytes, sizeof bytes); }

void Socket::SetNoDelay() {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Socket Listen(const std::string& address, uint16_t port, int backlog) {
  const std::string where = address + ":" + std::to_string(port);
  Socket socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!socket.valid()) throw StartupError("socket() failed for " + where + ": " + std::strerror(errno));
  int one = 1;
  ::setsockopt(socket.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, address.c_str(), &addr.sin_addr) != 1)
    throw StartupError("invalid listen address '" + address + "'");
  if (::bind(socket.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    throw StartupError("cannot bind port " + std::to_string(port) + " (" + where + "): " + std::strerror(errno));
  if (::listen(socket.fd(), backlog) != 0)
    throw StartupError("cannot listen on port " + std::to_string(port) + ": " + std::strerror(errno));
  return socket;
}

uint16_t LocalPort(const Socket& socket) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(socket.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

std::optional<Socket> Accept(const Socket& listener, std::chrono::milliseconds timeout) {
  if (!listener.WaitReadable(timeout)) return std::nullopt;
  const int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) return std::nullopt;
  return Socket(fd);
}

Socket Connect(const std::string& host, uint16_t port, int receive_buffer) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &result) != 0 || result == nullptr)
    throw Error("cannot resolve " + host + ":" + service);

  Socket socket(::socket(result->ai_family, result->ai_socktype | SOCK_CLOEXEC, result->ai_protocol));
  if (receive_buffer > 0) socket.SetReceiveBuffer(receive_buffer);
  const int rc = ::connect(socket.fd(), result->ai_addr, result->ai_addrlen);
  const int err = errno;
  ::freeaddrinfo(result);
  if (rc != 0) throw Error("cannot connect to " + host + ":" + service + ": " + std::strerror(err));
  return socket;
}

std::pair<std::string, uint16_t> SplitHostPort(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw ConfigError("expected host:port, got '" + text + "'");
  int port = 0;
  try {
    port = std::stoi(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("invalid port in '" + text + "'");
  }
  if (port <= 0 || port > 65535) throw ConfigError("invalid port in '" + text + "'");
  return {text.substr(0, colon), static_cast<uint16_t>(port)};
}

}  // namespace videoservice::net
