#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace confbayes {

// Deterministically mixes a master seed with a path of counters (replication
// index, stream id, ...) into an independent 64-bit seed. Results never depend
// on the order in which substreams are consumed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// Stable 64-bit FNV-1a, used to turn method identifiers into stream ids.
std::uint64_t stable_hash(std::string_view text);

// Seeded generator. std::mt19937_64 is fully specified by the standard and the
// distributions come from Boost.Random, so draws are identical across
// platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double normal(double mean = 0.0, double sd = 1.0);
  double gamma(double shape, double rate);
  double beta(double a, double b);
  int binomial(int trials, double p);
  std::size_t index(std::size_t n);  // uniform on {0..n-1}

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace confbayes
