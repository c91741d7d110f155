#include <chrono>
#include <thread>

#include "doctest.h"
#include "hot/error.hpp"
#include "hot/slm_link.hpp"
#include "support/support.hpp"

using namespace hot;
using namespace hot::testing;
using namespace std::chrono_literals;

namespace {

ProtocolFault fault_of(const std::vector<std::uint8_t>& bytes) {
  try {
    decode(bytes);
  } catch (const ProtocolError& e) {
    return e.fault();
  }
  FAIL("expected ProtocolError");
  throw std::logic_error("unreachable");
}

Trap point_trap(int id, Vec2 c, double power) {
  Trap t;
  t.id = id;
  t.center = c;
  t.power_share = power;
  return t;
}

std::optional<SlmDatagram> wait_for(LoopbackReceiver& rx, std::chrono::milliseconds timeout = 2000ms) {
  return rx.updates().pop_for(timeout);
}

}  // namespace

TEST_SUITE("slm_link") {

TEST_CASE("datagram sizes") {
  CHECK(encode(std::span<const Trap>{}, 0).size() == 11);
  const Trap t = point_trap(0, {1, 2}, 1);
  CHECK(encode(std::span<const Trap>(&t, 1), 0).size() == 38);
  std::vector<Trap> many(100, t);
  CHECK(encode(many, 5).size() == 11 + 27 * 100);
  many.push_back(t);
  CHECK_THROWS_AS(encode(many, 5), UsageError);
}

TEST_CASE("header bytes are little-endian") {
  const auto bytes = encode(std::span<const Trap>{}, 0x01020304);
  const std::vector<std::uint8_t> expect = {'H', 'O', 'T', 'S', 1, 4, 3, 2, 1, 0, 0};
  CHECK(bytes == expect);
}

TEST_CASE("golden datagrams") {
  Trap a;
  a.id = 1;
  a.kind = TrapKind::annular;
  a.center = {30, 30};
  a.topological_charge = 15;
  a.ring_radius = 4.05;
  a.power_share = 1.0;
  CHECK(encode(std::span<const Trap>(&a, 1), 1) == read_hex(source_path("tests/data/golden_annular_l15.hex")));

  std::vector<Trap> mixed(3);
  mixed[0] = point_trap(0, {12.5, 80}, 0.1);
  mixed[1].id = 7;
  mixed[1].kind = TrapKind::annular;
  mixed[1].center = {30, 22};
  mixed[1].topological_charge = 15;
  mixed[1].power_share = 0.5;
  mixed[2].id = 300;
  mixed[2].kind = TrapKind::line;
  mixed[2].center = {66, 50.5};
  mixed[2].length = 10;
  mixed[2].angle = kPi / 2;
  mixed[2].power_share = 0.4;
  const auto golden = read_hex(source_path("tests/data/golden_mixed.hex"));
  CHECK(encode(mixed, 258) == golden);
  const SlmDatagram d = decode(golden);
  CHECK(d.sequence == 258);
  REQUIRE(d.records.size() == 3);
  CHECK(d.records[2].id == 300);
  CHECK(d.records[2].kind == TrapKind::line);
  CHECK(d.records[2].param1 == 10.0f);
  CHECK(d.records[2].param2 == static_cast<float>(kPi / 2));
  CHECK(d.records[1].param1 == 15.0f);
  CHECK(d.records[0].power == 0.1f);
}

TEST_CASE("record fields per kind") {
  Trap l;
  l.id = 4;
  l.kind = TrapKind::line;
  l.length = 12;
  l.angle = 0.3;
  l.z_offset = 9;  // not carried for lines
  const SlmRecord r = to_record(l);
  CHECK(r.param1 == 12.0f);
  CHECK(r.param2 == 0.3f);
  CHECK(r.z == 0.0f);
  Trap a;
  a.kind = TrapKind::annular;
  a.topological_charge = 5;
  a.z_offset = -1.5;
  CHECK(to_record(a).z == -1.5f);
  CHECK(to_record(a).param2 == 0.0f);
  Trap big;
  big.id = 70000;
  CHECK_THROWS_AS(to_record(big), UsageError);
  big.id = -1;
  CHECK_THROWS_AS(to_record(big), UsageError);
}

TEST_CASE("decode faults") {
  const Trap t = point_trap(3, {5, 5}, 1);
  const auto good = encode(std::span<const Trap>(&t, 1), 9);
  CHECK(decode(good).records.size() == 1);

  CHECK(fault_of({}) == ProtocolFault::truncated);
  CHECK(fault_of({'H', 'O'}) == ProtocolFault::truncated);
  auto bad = good;
  bad[0] = 'X';
  CHECK(fault_of(bad) == ProtocolFault::bad_magic);
  CHECK(fault_of({'H', 'O', 'T', 'S', 1, 0}) == ProtocolFault::truncated);
  bad = good;
  bad[4] = 2;
  CHECK(fault_of(bad) == ProtocolFault::bad_version);
  bad = good;
  bad.pop_back();
  CHECK(fault_of(bad) == ProtocolFault::truncated);
  bad = good;
  bad.push_back(0);
  CHECK(fault_of(bad) == ProtocolFault::length_mismatch);
  bad = good;
  bad[11 + 2] = 3;
  CHECK(fault_of(bad) == ProtocolFault::unknown_kind);
  bad = good;
  bad[9] = 101;
  bad[10] = 0;
  CHECK(fault_of(bad) == ProtocolFault::too_many_traps);
}

TEST_CASE("random round trips") {
  Rng rng(31);
  std::uniform_int_distribution<int> count(0, 100), kind(0, 2), id(0, 0xFFFF);
  std::uniform_real_distribution<float> val(-1000.f, 1000.f);
  std::uniform_int_distribution<std::uint32_t> seq;
  for (int k = 0; k < 300; ++k) {
    SlmDatagram d;
    d.sequence = seq(rng);
    d.records.resize(count(rng));
    for (auto& r : d.records) {
      r.id = static_cast<std::uint16_t>(id(rng));
      r.kind = static_cast<TrapKind>(kind(rng));
      r.x = val(rng), r.y = val(rng), r.z = val(rng), r.param1 = val(rng), r.param2 = val(rng), r.power = val(rng);
    }
    const auto bytes = encode(d);
    CHECK(bytes.size() == 11 + 27 * d.records.size());
    CHECK(decode(bytes) == d);
  }
}

TEST_CASE("sequence filter accepts only increasing numbers") {
  SequenceFilter f;
  CHECK(f.accept(5));
  CHECK(f.accept(6));
  CHECK_FALSE(f.accept(6));
  CHECK_FALSE(f.accept(2));
  CHECK(f.accept(100));
  CHECK(f.rejected() == 2);
}

TEST_CASE("endpoint parsing") {
  const Endpoint e = parse_endpoint("127.0.0.1:7000");
  CHECK(e.host == "127.0.0.1");
  CHECK(e.port == 7000);
  CHECK_THROWS_AS(parse_endpoint("localhost"), UsageError);
  CHECK_THROWS_AS(parse_endpoint("host:99999"), UsageError);
  CHECK_THROWS_AS(parse_endpoint("host:abc"), UsageError);
}

TEST_CASE("publisher numbers datagrams from one") {
  MemorySink sink;
  SlmPublisher pub(&sink);
  const Trap t = point_trap(0, {1, 1}, 1);
  CHECK(pub.publish(std::span<const Trap>(&t, 1)) == 1);
  CHECK(pub.publish(std::span<const Trap>(&t, 1)) == 2);
  CHECK(pub.published() == 2);
  REQUIRE(sink.datagrams.size() == 2);
  CHECK(decode(sink.datagrams[1]).sequence == 2);
}

TEST_CASE("udp loopback delivers decoded updates") {
  LoopbackReceiver rx(0);
  REQUIRE(rx.port() != 0);
  UdpSender tx({"127.0.0.1", rx.port()});
  SlmPublisher pub(&tx);
  std::vector<Trap> traps = {point_trap(0, {10, 20}, 0.6), point_trap(1, {40, 50}, 0.4)};
  pub.publish(traps);
  const auto got = wait_for(rx);
  REQUIRE(got.has_value());
  CHECK(got->sequence == 1);
  REQUIRE(got->records.size() == 2);
  CHECK(got->records[1].x == 40.0f);

  // Garbage and stale sequence numbers are counted, not delivered.
  const std::vector<std::uint8_t> junk = {1, 2, 3};
  tx.send(junk);
  tx.send(encode(traps, 1));
  pub.publish(traps);
  const auto next = wait_for(rx);
  REQUIRE(next.has_value());
  CHECK(next->sequence == 2);
  CHECK(rx.malformed() == 1);
  CHECK(rx.out_of_order() == 1);
  CHECK(tx.failed() == 0);
  rx.stop();
}

TEST_CASE("sending without a receiver does not block") {
  LoopbackReceiver probe(0);
  const std::uint16_t port = probe.port();
  probe.stop();
  UdpSender tx({"127.0.0.1", port});
  const auto bytes = encode(std::span<const Trap>{}, 1);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 2000; ++i) tx.send(bytes);
  CHECK(std::chrono::steady_clock::now() - t0 < 2s);
  CHECK(tx.sent() + tx.failed() == 2000);
}

TEST_CASE("bounded queue drops the oldest entry") {
  BoundedQueue<int> q(3);
  for (int i = 0; i < 3; ++i) CHECK_FALSE(q.push(i));
  CHECK(q.push(3));
  CHECK(q.dropped() == 1);
  CHECK(q.size() == 3);
  CHECK(q.try_pop() == 1);
  CHECK(q.try_pop() == 2);
  CHECK(q.try_pop() == 3);
  CHECK_FALSE(q.try_pop().has_value());
  CHECK_FALSE(q.pop_for(10ms).has_value());
  CHECK(BoundedQueue<int>(0).capacity() == 1);
}

TEST_CASE("closing the queue wakes a blocked consumer") {
  BoundedQueue<int> q(2);
  std::thread closer([&] {
    std::this_thread::sleep_for(20ms);
    q.close();
  });
  const auto t0 = std::chrono::steady_clock::now();
  CHECK_FALSE(q.pop_for(5s).has_value());
  CHECK(std::chrono::steady_clock::now() - t0 < 2s);
  closer.join();
}

}
