#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "nrp/random_index.hpp"
#include "nrp/rng.hpp"

using nrp::RandomIndex;
using nrp::RandomIndexLookup;
using nrp::RiMode;
using nrp::Rng;

TEST_CASE("ternary k=1000 s=2 has one positive and one negative entry") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const RandomIndex ri = nrp::generate_random_index(1000, 2, RiMode::Ternary, rng);
    CHECK(ri.positive_positions.size() == 1);
    CHECK(ri.negative_positions.size() == 1);
    CHECK(ri.nnz() == 2);
    const auto dense = ri.to_dense();
    std::size_t zeros = 0;
    for (int8_t v : dense) zeros += v == 0;
    CHECK(zeros == 998);
  }
}

TEST_CASE("ternary k=4 s=4 fills all positions with an even sign split") {
  Rng rng(2);
  const RandomIndex ri = nrp::generate_random_index(4, 4, RiMode::Ternary, rng);
  CHECK(ri.positive_positions.size() == 2);
  CHECK(ri.negative_positions.size() == 2);
  const auto dense = ri.to_dense();
  for (int8_t v : dense) CHECK(v != 0);
}

TEST_CASE("sign split counts: even s halves, odd s rounds positives up, s=1 single positive") {
  Rng rng(3);
  const RandomIndex odd = nrp::generate_random_index(100, 5, RiMode::Ternary, rng);
  CHECK(odd.positive_positions.size() == 3);
  CHECK(odd.negative_positions.size() == 2);
  const RandomIndex one = nrp::generate_random_index(100, 1, RiMode::Ternary, rng);
  CHECK(one.positive_positions.size() == 1);
  CHECK(one.negative_positions.empty());
  const RandomIndex bin = nrp::generate_random_index(100, 6, RiMode::Binary, rng);
  CHECK(bin.positive_positions.size() == 6);
  CHECK(bin.negative_positions.empty());
}

TEST_CASE("positions are sorted, disjoint and in range") {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const RandomIndex ri = nrp::generate_random_index(64, 16, RiMode::Ternary, rng);
    auto sorted_strict = [](const std::vector<uint32_t>& v) {
      for (std::size_t j = 1; j < v.size(); ++j)
        if (v[j - 1] >= v[j]) return false;
      return true;
    };
    CHECK(sorted_strict(ri.positive_positions));
    CHECK(sorted_strict(ri.negative_positions));
    for (uint32_t p : ri.positive_positions) CHECK(p < 64);
    for (uint32_t p : ri.negative_positions) CHECK(p < 64);
    for (uint32_t p : ri.positive_positions)
      for (uint32_t q : ri.negative_positions) CHECK(p != q);
  }
}

TEST_CASE("parameter errors") {
  Rng rng(5);
  CHECK_THROWS_AS(nrp::generate_random_index(10, 0, RiMode::Ternary, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(nrp::generate_random_index(10, 11, RiMode::Ternary, rng),
                  std::invalid_argument);
}

TEST_CASE("self inner product equals s") {
  Rng rng(6);
  for (uint32_t s : {1u, 2u, 7u, 16u}) {
    const RandomIndex t = nrp::generate_random_index(400, s, RiMode::Ternary, rng);
    CHECK(nrp::inner_product(t, t) == static_cast<int64_t>(s));
    const RandomIndex b = nrp::generate_random_index(400, s, RiMode::Binary, rng);
    CHECK(nrp::inner_product(b, b) == static_cast<int64_t>(s));
  }
}

TEST_CASE("disjoint supports give zero and hand-built overlap cancels") {
  RandomIndex a, b;
  a.k = b.k = 20;
  a.positive_positions = {3, 7};
  a.negative_positions = {9, 12};
  b.positive_positions = {7, 9};
  b.negative_positions = {1, 2};
  // +1*+1 at 7 and -1*+1 at 9 cancel.
  CHECK(nrp::inner_product(a, b) == 0);

  RandomIndex c;
  c.k = 20;
  c.positive_positions = {0, 4};
  c.negative_positions = {5, 6};
  CHECK(nrp::inner_product(a, c) == 0);

  RandomIndex wrong;
  wrong.k = 21;
  wrong.positive_positions = {1};
  CHECK_THROWS_AS(nrp::inner_product(a, wrong), std::invalid_argument);
}

TEST_CASE("lookup is idempotent and counts insertions") {
  RandomIndexLookup lookup(50, 4, RiMode::Ternary, 99);
  const RandomIndex first = lookup.lookup_or_create(7);
  const RandomIndex again = lookup.lookup_or_create(7);
  CHECK(first == again);
  CHECK(lookup.size() == 8);

  RandomIndexLookup big(1000, 4, RiMode::Ternary, 99);
  for (uint32_t id = 0; id < 10000; ++id) big.lookup_or_create(id);
  CHECK(big.size() == 10000);
}

TEST_CASE("equal seeds give equal tables regardless of request order") {
  RandomIndexLookup fwd(200, 6, RiMode::Ternary, 1234);
  RandomIndexLookup rev(200, 6, RiMode::Ternary, 1234);
  for (uint32_t id = 0; id < 40; ++id) fwd.lookup_or_create(id);
  for (uint32_t id = 40; id-- > 0;) rev.lookup_or_create(id);
  REQUIRE(fwd.size() == rev.size());
  for (uint32_t id = 0; id < 40; ++id) CHECK(fwd.at(id) == rev.at(id));

  RandomIndexLookup other(200, 6, RiMode::Ternary, 1235);
  other.lookup_or_create(0);
  CHECK_FALSE(other.at(0) == fwd.at(0));
}

TEST_CASE("at() requires materialization, set_index validates shape") {
  RandomIndexLookup lookup(30, 2, RiMode::Ternary, 5);
  CHECK_THROWS_AS(lookup.at(0), std::invalid_argument);
  lookup.ensure(3);
  CHECK(lookup.at(2).nnz() == 2);

  RandomIndex manual;
  manual.k = 30;
  manual.positive_positions = {1};
  manual.negative_positions = {2};
  lookup.set_index(1, manual);
  CHECK(lookup.at(1) == manual);

  RandomIndex bad_k = manual;
  bad_k.k = 31;
  CHECK_THROWS_AS(lookup.set_index(1, bad_k), std::invalid_argument);
  RandomIndex bad_nnz = manual;
  bad_nnz.negative_positions = {};
  CHECK_THROWS_AS(lookup.set_index(1, bad_nnz), std::invalid_argument);
}

TEST_CASE("lookup persistence round trip") {
  RandomIndexLookup lookup(128, 5, RiMode::Binary, 77);
  lookup.ensure(25);
  const auto path = (std::filesystem::temp_directory_path() / "nrp_lookup.bin").string();
  lookup.save(path);
  const RandomIndexLookup loaded = RandomIndexLookup::load(path);
  CHECK(loaded.k() == 128);
  CHECK(loaded.s() == 5);
  CHECK(loaded.mode() == RiMode::Binary);
  CHECK(loaded.seed() == 77);
  REQUIRE(loaded.size() == 25);
  for (uint32_t id = 0; id < 25; ++id) CHECK(loaded.at(id) == lookup.at(id));
  std::filesystem::remove(path);
}

TEST_CASE("duplicate diagnostics count repeated patterns") {
  RandomIndexLookup lookup(4, 1, RiMode::Binary, 3);
  // k=4, s=1 binary has only 4 possible indices, so at most 4 of 16 words
  // hold a first-seen pattern.
  lookup.ensure(16);
  CHECK(lookup.duplicate_index_count() >= 12);

  RandomIndexLookup sparse(100000, 8, RiMode::Ternary, 3);
  sparse.ensure(50);
  CHECK(sparse.duplicate_index_count() == 0);
}

TEST_CASE("mean inner product near zero: k=10000 s=8 within 0.02 over 1e4 pairs") {
  Rng rng(8);
  const auto hist = nrp::inner_product_histogram(10000, 8, RiMode::Ternary, 10000, rng);
  const auto stats = nrp::summarize_histogram(hist);
  CHECK(stats.pairs == 10000);
  CHECK(std::abs(stats.mean) < 0.02);
}

TEST_CASE("k=1000 s=2 ternary: P(dot = 0) > 0.99, matching the exact overlap odds") {
  // Two size-2 supports drawn from 1000 positions are disjoint with
  // probability C(998,2)/C(1000,2) = (998*997)/(1000*999) ~ 0.99501, and
  // zero dots are at least as frequent as disjoint supports.
  Rng rng(9);
  const auto hist = nrp::inner_product_histogram(1000, 2, RiMode::Ternary, 100000, rng);
  const auto stats = nrp::summarize_histogram(hist);
  const double p_zero = 1.0 - stats.nonzero_fraction;
  CHECK(p_zero > 0.99);
  CHECK(p_zero == doctest::Approx(0.99501).epsilon(0.002));
}

TEST_CASE("fully dense even-s ternary histogram reaches negative values") {
  Rng rng(10);
  const auto hist = nrp::inner_product_histogram(8, 8, RiMode::Ternary, 2000, rng);
  CHECK(hist.begin()->first < 0);
  // Sign symmetry: mean stays near 0 even at full density.
  const auto stats = nrp::summarize_histogram(hist);
  CHECK(std::abs(stats.mean) < 3.0 * std::sqrt(stats.variance / 2000.0) + 1e-9);
}

TEST_CASE("binary histograms have no negative support") {
  Rng rng(11);
  for (uint32_t s : {2u, 8u}) {
    const auto hist = nrp::inner_product_histogram(500, s, RiMode::Binary, 5000, rng);
    CHECK(hist.begin()->first >= 0);
  }
}

TEST_CASE("doubling k at fixed s shrinks the nonzero fraction") {
  Rng rng(12);
  double prev = 1.0;
  for (uint32_t k : {1000u, 2000u, 4000u, 8000u, 16000u}) {
    const auto hist = nrp::inner_product_histogram(k, 8, RiMode::Ternary, 20000, rng);
    const double nz = nrp::summarize_histogram(hist).nonzero_fraction;
    CHECK(nz <= prev);
    prev = nz;
  }
}
