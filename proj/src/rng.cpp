#include "ctrace/rng.hpp"

#include <bit>
#include <cmath>
#include <random>

namespace ctrace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  return mix64(state);
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t v : path) h = mix64(h ^ mix64(v + 0x9e3779b97f4a7c15ULL));
  return h;
}

std::uint64_t derive_seed_for_point(std::uint64_t master, std::initializer_list<double> coords) {
  std::uint64_t h = mix64(master ^ 0xbb67ae8584caa73bULL);
  for (double c : coords) h = mix64(h ^ mix64(std::bit_cast<std::uint64_t>(c)));
  return h;
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
}

Rng::result_type Rng::operator()() {
  auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::uniform_pos() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

double Rng::exponential(double rate) { return -std::log(uniform_pos()) / rate; }

bool Rng::bernoulli(double prob) { return uniform() < prob; }

std::uint64_t Rng::below(std::uint64_t bound) {
  // Lemire's multiply-shift with rejection.
  unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>((*this)()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t Rng::poisson(double mean) {
  if (mean <= 0) return 0;
  if (mean < 30) {
    // Inversion by sequential search; exact and cheap for small means.
    double u = uniform();
    double prob = std::exp(-mean);
    double cdf = prob;
    std::uint64_t k = 0;
    while (u > cdf && prob > 0) {
      ++k;
      prob *= mean / static_cast<double>(k);
      cdf += prob;
    }
    return k;
  }
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(*this);
}

}  // namespace ctrace
