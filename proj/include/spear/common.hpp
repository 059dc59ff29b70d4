#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace spear {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;

// Caller supplied something outside an operation's domain.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced or received non-finite values.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// SplitMix64 finalizer. Used to derive independent, order-free RNG streams
// from tuples such as (seed, round, client, prompt).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x5be0cd19137e2179ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

std::string to_string(const TokenSeq& seq);

}  // namespace spear
