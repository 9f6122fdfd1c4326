// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace vflow {

using Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846;

inline void require_arg(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// splitmix64 finalizer, used to derive independent seed streams from a base
// seed plus stream indices.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(base + 0x243f6a8885a308d3ull) ^ (mix64(a) + 0x13198a2e03707344ull * (b + 1)));
}

// Deterministic random source. mt19937_64 output is pinned by the standard;
// the derived draws below avoid std::*_distribution, whose algorithms are
// implementation-defined, so a fixed seed yields the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(gen_()) *
                             static_cast<unsigned __int128>(n)) >> 64);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; one spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd normal_vec(Index n) {
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Shortest round-trip decimal form of a double (locale independent).
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) throw std::runtime_error("malformed number: " + std::string(s));
  return v;
}

}  // namespace vflow
