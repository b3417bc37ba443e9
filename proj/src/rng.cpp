#include "xsense/rng.hpp"

namespace xsense {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngSeed RngSeed::derive(std::string_view component) const {
  return RngSeed{splitmix64(value ^ fnv1a(component))};
}

RngSeed RngSeed::derive(std::uint64_t index) const {
  return RngSeed{splitmix64(splitmix64(value) + index)};
}

}  // namespace xsense
