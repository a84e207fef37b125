#include <set>

#include "doctest.h"
#include "wsrm/rng.hpp"

using wsrm::Philox4x32;

TEST_CASE("philox known answers") {
  // Reference vectors distributed with Random123.
  CHECK(Philox4x32::bijection({0, 0, 0, 0}, {0, 0}) ==
        Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::bijection({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::bijection({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("engine output is the bijection of its counter") {
  Philox4x32 e(0, 0, 0);
  const auto b = Philox4x32::bijection({0, 0, 0, 0}, {0, 0});
  CHECK(e() == ((std::uint64_t{b[1]} << 32) | b[0]));
  CHECK(e() == ((std::uint64_t{b[3]} << 32) | b[2]));
  const auto b1 = Philox4x32::bijection({1, 0, 0, 0}, {0, 0});
  CHECK(e() == ((std::uint64_t{b1[1]} << 32) | b1[0]));
}

TEST_CASE("streams and trial seeds") {
  auto a = wsrm::make_engine(7, wsrm::Stream::geometry);
  auto b = wsrm::make_engine(7, wsrm::Stream::geometry);
  auto c = wsrm::make_engine(7, wsrm::Stream::fading);
  for (int i = 0; i < 16; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
  std::set<std::uint64_t> seeds;
  for (std::uint32_t t = 0; t < 1000; ++t) seeds.insert(wsrm::trial_seed(2024, t));
  CHECK(seeds.size() == 1000);
  CHECK(wsrm::trial_seed(2024, 3) == wsrm::trial_seed(2024, 3));
  CHECK(wsrm::trial_seed(2024, 3) != wsrm::trial_seed(2025, 3));
}
