// Decoder fuzz driver, built with AddressSanitizer. Usage: hot_slm_fuzz_asan [iterations] [seed]

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <random>
#include <vector>

#include "hot/error.hpp"
#include "hot/slm_link.hpp"

int main(int argc, char** argv) {
  const long iterations = argc > 1 ? std::atol(argv[1]) : 100000;
  std::mt19937_64 rng(argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 12345);
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<hot::Trap> traps(3);
  traps[0].kind = hot::TrapKind::annular;
  traps[0].topological_charge = 15;
  traps[1].kind = hot::TrapKind::line;
  traps[1].length = 10;
  const auto valid = hot::encode(traps, 1);
  long decoded = 0, rejected = 0;
  for (long i = 0; i < iterations; ++i) {
    std::vector<std::uint8_t> buf;
    if (i % 2 == 0) {
      buf.resize(std::uniform_int_distribution<std::size_t>(0, 400)(rng));
      for (auto& b : buf) b = static_cast<std::uint8_t>(byte(rng));
      if (buf.size() >= 5 && i % 4 == 0) buf[0] = 'H', buf[1] = 'O', buf[2] = 'T', buf[3] = 'S', buf[4] = 1;
    } else {
      buf = valid;
      buf.resize(std::uniform_int_distribution<std::size_t>(0, valid.size() + 30)(rng), 0);
      for (int f = std::uniform_int_distribution<int>(0, 4)(rng); f > 0 && !buf.empty(); --f)
        buf[std::uniform_int_distribution<std::size_t>(0, buf.size() - 1)(rng)] = static_cast<std::uint8_t>(byte(rng));
    }
    // Exact-size allocation: a read past the end is reported by the sanitizer.
    std::unique_ptr<std::uint8_t[]> exact(new std::uint8_t[buf.size()]);
    std::copy(buf.begin(), buf.end(), exact.get());
    try {
      hot::decode(std::span<const std::uint8_t>(exact.get(), buf.size()));
      ++decoded;
    } catch (const hot::ProtocolError&) {
      ++rejected;
    }
  }
  std::printf("%ld decoded, %ld rejected\n", decoded, rejected);
  return 0;
}
