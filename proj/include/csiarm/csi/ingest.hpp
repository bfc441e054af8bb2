// SPDX-License-Identifier: Apache-2.0
//
// UDP ingestion of sniffer datagrams, one CSI frame per datagram.
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "csiarm/csi/datagram.hpp"

namespace csiarm {

inline constexpr std::uint16_t kDefaultIngestPort = 5500;

/// Ingestion stops when any configured condition holds.
struct StopCondition {
  std::optional<std::size_t> max_frames;
  std::optional<std::chrono::milliseconds> duration;
  const std::atomic<bool>* stop_flag = nullptr;  // e.g. set from a SIGINT handler
};

struct IngestResult {
  std::vector<CsiFrame> frames;  // arrival order
  std::size_t dropped = 0;       // datagrams that failed to decode
};

/// Owns one bound UDP socket. Single consumer: one listener per port.
class UdpIngestor {
 public:
  /// Binds 0.0.0.0:port; port 0 picks an ephemeral port. Throws BindFailure.
  explicit UdpIngestor(std::uint16_t port);
  ~UdpIngestor();
  UdpIngestor(const UdpIngestor&) = delete;
  UdpIngestor& operator=(const UdpIngestor&) = delete;
  UdpIngestor(UdpIngestor&& other) noexcept;
  UdpIngestor& operator=(UdpIngestor&& other) noexcept;

  std::uint16_t port() const { return port_; }

  /// Receives until the stop condition holds. `on_frame`, if set, sees each
  /// frame as it is decoded (for example to hand it to an ordered queue).
  IngestResult run(const StopCondition& stop, const DatagramLayout& layout,
                   const std::function<void(const CsiFrame&)>& on_frame = {});

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

IngestResult ingest_stream(std::uint16_t port, const StopCondition& stop,
                           const DatagramLayout& layout = DatagramLayout::standard());

/// Sends each datagram to 127.0.0.1:port, pausing `gap` between sends.
void send_datagrams(std::uint16_t port, const std::vector<std::vector<std::byte>>& datagrams,
                    std::chrono::microseconds gap = std::chrono::microseconds(50));

}  // namespace csiarm
