#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace videoservice::net {

// Owning TCP socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { Close(); }

  Socket(Socket&& other) noexcept : fd_(other.Release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int Release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void Close();

  // Wakes any thread blocked in send/recv on this socket.
  void Shutdown();

  // Blocks until every byte is written. False on any socket error.
  bool SendAll(std::span<const uint8_t> bytes);
  bool SendAll(std::string_view text);

  // One recv(); 0 on orderly close, -1 on error.
  long Receive(std::span<uint8_t> buffer);

  // Waits for readability; false on timeout.
  bool WaitReadable(std::chrono::milliseconds timeout) const;

  // True when the peer has closed or reset the connection. Non-blocking.
  bool PeerClosed() const;

  void SetSendBuffer(int bytes);
  void SetReceiveBuffer(int bytes);
  void SetNoDelay();

 private:
  int fd_ = -1;
};

// Bound, listening socket. Port 0 picks an ephemeral port.
// Throws StartupError naming the port on failure.
Socket Listen(const std::string& address, uint16_t port, int backlog = 64);

uint16_t LocalPort(const Socket& socket);

// Accepts one connection, waiting at most `timeout`. Empty on timeout.
std::optional<Socket> Accept(const Socket& listener, std::chrono::milliseconds timeout);

// Throws Error with the host:port on failure. `receive_buffer` > 0 sets
// SO_RCVBUF before connecting.
Socket Connect(const std::string& host, uint16_t port, int receive_buffer = 0);

// "host:port" -> pair; throws ConfigError.
std::pair<std::string, uint16_t> SplitHostPort(const std::string& text);

}  // namespace videoservice::net
