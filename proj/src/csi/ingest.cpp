// SPDX-License-Identifier: Apache-2.0
#include "csiarm/csi/ingest.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <string>
#include <thread>
#include <utility>

#include "csiarm/error.hpp"

namespace csiarm {
namespace {

constexpr std::size_t kMaxDatagram = 65536;
constexpr int kPollSliceMs = 20;

}  // namespace

UdpIngestor::UdpIngestor(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) fail(ErrorCode::BindFailure, std::string("socket: ") + std::strerror(errno));
  int rcvbuf = 4 << 20;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof(rcvbuf));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    fail(ErrorCode::BindFailure, "port " + std::to_string(port) + ": " + std::strerror(err));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

UdpIngestor::~UdpIngestor() {
  if (fd_ >= 0) ::close(fd_);
}

UdpIngestor::UdpIngestor(UdpIngestor&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), port_(other.port_) {}

UdpIngestor& UdpIngestor::operator=(UdpIngestor&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    port_ = other.port_;
  }
  return *this;
}

IngestResult UdpIngestor::run(const StopCondition& stop, const DatagramLayout& layout,
                              const std::function<void(const CsiFrame&)>& on_frame) {
  using clock = std::chrono::steady_clock;
  IngestResult result;
  const auto start = clock::now();
  std::vector<std::byte> buf(kMaxDatagram);

  auto done = [&] {
    if (stop.max_frames && result.frames.size() >= *stop.max_frames) return true;
    if (stop.duration && clock::now() - start >= *stop.duration) return true;
    if (stop.stop_flag && stop.stop_flag->load()) return true;
    return false;
  };

  while (!done()) {
    int wait_ms = kPollSliceMs;
    if (stop.duration) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          *stop.duration - (clock::now() - start));
      wait_ms = static_cast<int>(std::max<long long>(0, std::min<long long>(left.count(), kPollSliceMs)));
    }
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, wait_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::Io, std::string("poll: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(ErrorCode::Io, std::string("recv: ") + std::strerror(errno));
    }
    try {
      CsiFrame frame = decode_sniffer_datagram(std::span(buf.data(), static_cast<std::size_t>(n)), layout);
      if (on_frame) on_frame(frame);
      result.frames.push_back(std::move(frame));
    } catch (const Error&) {
      ++result.dropped;
    }
  }
  return result;
}

IngestResult ingest_stream(std::uint16_t port, const StopCondition& stop, const DatagramLayout& layout) {
  UdpIngestor ingestor(port);
  return ingestor.run(stop, layout);
}

void send_datagrams(std::uint16_t port, const std::vector<std::vector<std::byte>>& datagrams,
                    std::chrono::microseconds gap) {
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) fail(ErrorCode::Io, std::string("socket: ") + std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  for (const auto& d : datagrams) {
    ::sendto(fd, d.data(), d.size(), 0, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    if (gap.count() > 0) std::this_thread::sleep_for(gap);
  }
  ::close(fd);
}

}  // namespace csiarm
