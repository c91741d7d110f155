#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hot/bounded_queue.hpp"
#include "hot/scene.hpp"

namespace hot {

inline constexpr std::size_t kSlmHeaderSize = 11;
inline constexpr std::size_t kSlmRecordSize = 27;
inline constexpr std::size_t kSlmMaxTraps = 100;
inline constexpr std::uint8_t kSlmVersion = 1;
inline constexpr std::uint16_t kSlmDefaultPort = 61556;

/// One trap as carried on the wire.
struct SlmRecord {
  std::uint16_t id = 0;
  TrapKind kind = TrapKind::point;
  float x = 0, y = 0, z = 0;
  /// annular: l, line: length, point: 0.
  float param1 = 0;
  /// line: angle, otherwise 0.
  float param2 = 0;
  float power = 0;

  friend bool operator==(const SlmRecord&, const SlmRecord&) = default;
};

struct SlmDatagram {
  std::uint32_t sequence = 0;
  std::vector<SlmRecord> records;

  friend bool operator==(const SlmDatagram&, const SlmDatagram&) = default;
};

/// Throws UsageError for ids beyond u16.
SlmRecord to_record(const Trap& trap);

/// "HOTS", version, sequence, count, then records; little-endian. Throws UsageError above 100 traps.
std::vector<std::uint8_t> encode(std::span<const Trap> traps, std::uint32_t sequence);
std::vector<std::uint8_t> encode(const SlmDatagram& datagram);

/// Throws ProtocolError with a distinct fault per failure.
SlmDatagram decode(std::span<const std::uint8_t> bytes);

/// Accepts strictly increasing sequence numbers.
class SequenceFilter {
 public:
  bool accept(std::uint32_t sequence);
  std::size_t rejected() const { return rejected_; }

 private:
  std::optional<std::uint32_t> last_;
  std::size_t rejected_ = 0;
};

class SlmSink {
 public:
  virtual ~SlmSink() = default;
  virtual void send(std::span<const std::uint8_t> datagram) = 0;
};

class MemorySink : public SlmSink {
 public:
  void send(std::span<const std::uint8_t> datagram) override { datagrams.emplace_back(datagram.begin(), datagram.end()); }
  std::vector<std::vector<std::uint8_t>> datagrams;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = kSlmDefaultPort;
};

/// Parses "host:port". Throws UsageError.
Endpoint parse_endpoint(const std::string& text);

/// Non-blocking UDP sender; send failures are counted, never raised.
class UdpSender : public SlmSink {
 public:
  explicit UdpSender(Endpoint dest = {});
  ~UdpSender() override;
  UdpSender(const UdpSender&) = delete;
  UdpSender& operator=(const UdpSender&) = delete;

  void send(std::span<const std::uint8_t> datagram) override;
  std::size_t sent() const { return sent_; }
  std::size_t failed() const { return failed_; }

 private:
  int fd_ = -1;
  std::vector<std::uint8_t> addr_;
  std::size_t sent_ = 0;
  std::size_t failed_ = 0;
};

/// Owns the sequence counter of one sender session.
class SlmPublisher {
 public:
  explicit SlmPublisher(SlmSink* sink) : sink_(sink) {}
  /// Encodes the full trap set and sends it; returns the sequence used.
  std::uint32_t publish(std::span<const Trap> traps);
  std::uint32_t last_sequence() const { return sequence_; }
  std::size_t published() const { return published_; }

 private:
  SlmSink* sink_;
  std::uint32_t sequence_ = 0;
  std::size_t published_ = 0;
};

/// Decodes datagrams arriving on a UDP port on its own thread.
class LoopbackReceiver {
 public:
  /// Port 0 binds an ephemeral port; see port().
  explicit LoopbackReceiver(std::uint16_t port = kSlmDefaultPort, std::size_t queue_depth = 64);
  ~LoopbackReceiver();
  LoopbackReceiver(const LoopbackReceiver&) = delete;
  LoopbackReceiver& operator=(const LoopbackReceiver&) = delete;

  std::uint16_t port() const { return port_; }
  BoundedQueue<SlmDatagram>& updates() { return queue_; }
  std::size_t malformed() const { return malformed_; }
  std::size_t out_of_order() const { return out_of_order_; }
  void stop();

 private:
  void loop();

  int fd_ = -1;
  std::uint16_t port_ = 0;
  BoundedQueue<SlmDatagram> queue_;
  std::atomic<bool> running_{true};
  std::atomic<std::size_t> malformed_{0};
  std::atomic<std::size_t> out_of_order_{0};
  std::thread thread_;
};

}  // namespace hot
