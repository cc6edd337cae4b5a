#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hflsim {

// SplitMix64: the per-run seed scheme. Run i of a sweep gets
// split_seed(master, i); streams never collide for distinct indices.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t split_seed(uint64_t master, uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

// Flat (uniform) sample from the N-simplex: normalized Exp(1) draws.
inline std::vector<double> sample_simplex(std::mt19937_64& rng, size_t n) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (auto& e : v) {
    e = exp1(rng);
    sum += e;
  }
  for (auto& e : v) e /= sum;
  return v;
}

}  // namespace hflsim
