#include "hot/slm_link.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <charconv>
#include <cstring>

#include "hot/error.hpp"

namespace hot {

const char* to_string(ProtocolFault fault) {
  switch (fault) {
    case ProtocolFault::bad_magic: return "bad_magic";
    case ProtocolFault::bad_version: return "bad_version";
    case ProtocolFault::truncated: return "truncated";
    case ProtocolFault::length_mismatch: return "length_mismatch";
    case ProtocolFault::unknown_kind: return "unknown_kind";
    case ProtocolFault::too_many_traps: return "too_many_traps";
  }
  return "unknown";
}

namespace {

constexpr std::uint8_t kMagic[4] = {'H', 'O', 'T', 'S'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

}  // namespace

SlmRecord to_record(const Trap& trap) {
  if (trap.id < 0 || trap.id > 0xFFFF) throw UsageError("trap id " + std::to_string(trap.id) + " does not fit u16");
  SlmRecord r;
  r.id = static_cast<std::uint16_t>(trap.id);
  r.kind = trap.kind;
  r.x = static_cast<float>(trap.center.x);
  r.y = static_cast<float>(trap.center.y);
  r.power = static_cast<float>(trap.power_share);
  switch (trap.kind) {
    case TrapKind::annular:
      r.z = static_cast<float>(trap.z_offset);
      r.param1 = static_cast<float>(trap.topological_charge);
      break;
    case TrapKind::line:
      r.param1 = static_cast<float>(trap.length);
      r.param2 = static_cast<float>(trap.angle);
      break;
    case TrapKind::point:
      break;
  }
  return r;
}

std::vector<std::uint8_t> encode(const SlmDatagram& d) {
  if (d.records.size() > kSlmMaxTraps)
    throw UsageError("encode: " + std::to_string(d.records.size()) + " traps exceeds the limit of 100");
  std::vector<std::uint8_t> out;
  out.reserve(kSlmHeaderSize + kSlmRecordSize * d.records.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kSlmVersion);
  put_u32(out, d.sequence);
  put_u16(out, static_cast<std::uint16_t>(d.records.size()));
  for (const auto& r : d.records) {
    put_u16(out, r.id);
    out.push_back(static_cast<std::uint8_t>(r.kind));
    for (float v : {r.x, r.y, r.z, r.param1, r.param2, r.power}) put_f32(out, v);
  }
  return out;
}

std::vector<std::uint8_t> encode(std::span<const Trap> traps, std::uint32_t sequence) {
  if (traps.size() > kSlmMaxTraps)
    throw UsageError("encode: " + std::to_string(traps.size()) + " traps exceeds the limit of 100");
  SlmDatagram d{sequence, {}};
  d.records.reserve(traps.size());
  for (const auto& t : traps) d.records.push_back(to_record(t));
  return encode(d);
}

SlmDatagram decode(std::span<const std::uint8_t> bytes) {
  const std::size_t n = bytes.size();
  if (n < 4) throw ProtocolError(ProtocolFault::truncated, "datagram shorter than the magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ProtocolError(ProtocolFault::bad_magic, "magic is not HOTS");
  if (n < kSlmHeaderSize) throw ProtocolError(ProtocolFault::truncated, "datagram shorter than the header");
  if (bytes[4] != kSlmVersion)
    throw ProtocolError(ProtocolFault::bad_version, "unsupported version " + std::to_string(bytes[4]));
  SlmDatagram d;
  d.sequence = get_u32(bytes.data() + 5);
  const std::size_t count = get_u16(bytes.data() + 9);
  if (count > kSlmMaxTraps) throw ProtocolError(ProtocolFault::too_many_traps, "trap count above 100");
  const std::size_t expected = kSlmHeaderSize + kSlmRecordSize * count;
  if (n < expected) throw ProtocolError(ProtocolFault::truncated, "payload shorter than the trap count implies");
  if (n > expected) throw ProtocolError(ProtocolFault::length_mismatch, "trailing bytes after the last record");
  d.records.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* p = bytes.data() + kSlmHeaderSize + i * kSlmRecordSize;
    SlmRecord r;
    r.id = get_u16(p);
    if (p[2] > 2) throw ProtocolError(ProtocolFault::unknown_kind, "unknown trap kind " + std::to_string(p[2]));
    r.kind = static_cast<TrapKind>(p[2]);
    r.x = get_f32(p + 3);
    r.y = get_f32(p + 7);
    r.z = get_f32(p + 11);
    r.param1 = get_f32(p + 15);
    r.param2 = get_f32(p + 19);
    r.power = get_f32(p + 23);
    d.records.push_back(r);
  }
  return d;
}

bool SequenceFilter::accept(std::uint32_t sequence) {
  if (last_ && sequence <= *last_) {
    ++rejected_;
    return false;
  }
  last_ = sequence;
  return true;
}

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw UsageError("endpoint must be host:port, got '" + text + "'");
  unsigned port = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, port);
  if (res.ec != std::errc() || res.ptr != last || port == 0 || port > 65535)
    throw UsageError("invalid port in '" + text + "'");
  return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

UdpSender::UdpSender(Endpoint dest) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(dest.port);
  if (getaddrinfo(dest.host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
    throw UsageError("cannot resolve SLM host '" + dest.host + "'");
  addr_.assign(reinterpret_cast<const std::uint8_t*>(res->ai_addr),
               reinterpret_cast<const std::uint8_t*>(res->ai_addr) + res->ai_addrlen);
  freeaddrinfo(res);
  fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw IoError("cannot open UDP socket");
}

UdpSender::~UdpSender() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpSender::send(std::span<const std::uint8_t> datagram) {
  const auto rc = ::sendto(fd_, datagram.data(), datagram.size(), MSG_DONTWAIT,
                           reinterpret_cast<const sockaddr*>(addr_.data()), static_cast<socklen_t>(addr_.size()));
  if (rc == static_cast<ssize_t>(datagram.size()))
    ++sent_;
  else
    ++failed_;
}

std::uint32_t SlmPublisher::publish(std::span<const Trap> traps) {
  ++sequence_;
  const auto bytes = encode(traps, sequence_);
  if (sink_) sink_->send(bytes);
  ++published_;
  return sequence_;
}

LoopbackReceiver::LoopbackReceiver(std::uint16_t port, std::size_t queue_depth) : queue_(queue_depth) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw IoError("cannot open UDP socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd_);
    throw IoError("cannot bind UDP port " + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { loop(); });
}

LoopbackReceiver::~LoopbackReceiver() {
  stop();
  if (fd_ >= 0) ::close(fd_);
}

void LoopbackReceiver::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
  queue_.close();
}

void LoopbackReceiver::loop() {
  SequenceFilter filter;
  std::vector<std::uint8_t> buf(65536);
  while (running_) {
    pollfd pfd{fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 20) <= 0) continue;
    const auto n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) continue;
    try {
      SlmDatagram d = decode(std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(n)));
      if (!filter.accept(d.sequence)) {
        ++out_of_order_;
        continue;
      }
      queue_.push(std::move(d));
    } catch (const ProtocolError&) {
      ++malformed_;
    }
  }
}

}  // namespace hot
