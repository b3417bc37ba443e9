#include <doctest.h>

#include "xsense/rng.hpp"

using namespace xsense;

TEST_SUITE("rng") {
  TEST_CASE("derived seeds are stable and distinct") {
    const RngSeed root{42};
    CHECK(root.derive("kmeans") == root.derive("kmeans"));
    CHECK_FALSE(root.derive("kmeans") == root.derive("mapping"));
    CHECK_FALSE(root.derive(std::uint64_t{0}) == root.derive(std::uint64_t{1}));
    CHECK_FALSE(RngSeed{1}.derive("x") == RngSeed{2}.derive("x"));
  }

  TEST_CASE("engines replay the same stream") {
    auto a = RngSeed{7}.derive("a").engine();
    auto b = RngSeed{7}.derive("a").engine();
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
  }
}
