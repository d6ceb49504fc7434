#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nrp/rng.hpp"

namespace nrp {

enum class RiMode : uint32_t { Ternary = 0, Binary = 1 };

RiMode ri_mode_from_string(const std::string& s);
const char* to_string(RiMode mode);

// Sparse random index vector: k-dimensional, exactly s non-zero entries of
// value +1 or -1, stored as two sorted position arrays.
struct RandomIndex {
  uint32_t k = 0;
  std::vector<uint32_t> positive_positions;
  std::vector<uint32_t> negative_positions;

  std::size_t nnz() const { return positive_positions.size() + negative_positions.size(); }
  std::vector<int8_t> to_dense() const;
  bool operator==(const RandomIndex& other) const = default;
};

// Samples s distinct positions uniformly without replacement, then assigns
// signs: binary mode is all +1; ternary gives +1 to the first ceil(s/2)
// positions in sampled order and -1 to the rest, so even s splits evenly
// and s=1 is a single positive entry.
RandomIndex generate_random_index(uint32_t k, uint32_t s, RiMode mode, Rng& rng);

// Sum over the position intersection; entries are +-1 so this counts
// same-sign overlaps minus opposite-sign overlaps.
int64_t inner_product(const RandomIndex& a, const RandomIndex& b);

// Fixed per-word random index table. Each word id draws its index from a
// dedicated RNG stream derived from (seed, id), so the same (seed, k, s,
// mode) always reproduces the same table regardless of request order. The
// table is kept dense over ids, so requesting id i materializes ids up to i.
class RandomIndexLookup {
 public:
  RandomIndexLookup(uint32_t k, uint32_t s, RiMode mode, uint64_t seed);

  const RandomIndex& lookup_or_create(uint32_t word_id);
  const RandomIndex& at(uint32_t word_id) const;
  void ensure(std::size_t count);

  // Overrides one word's index with a prescribed pattern (dimensions must
  // match the table). Lets tests pin exact index layouts, e.g. an injective
  // one-hot assignment.
  void set_index(uint32_t word_id, RandomIndex index);

  uint32_t k() const { return k_; }
  uint32_t s() const { return s_; }
  RiMode mode() const { return mode_; }
  uint64_t seed() const { return seed_; }
  std::size_t size() const { return table_.size(); }

  // Words sharing a bit-identical index. Collisions are allowed; this only
  // reports how many words are non-first holders of their index pattern.
  std::size_t duplicate_index_count() const;

  void save(const std::string& path) const;
  static RandomIndexLookup load(const std::string& path);
  void save(std::ostream& out) const;
  static RandomIndexLookup load(std::istream& in);

 private:
  uint32_t k_;
  uint32_t s_;
  RiMode mode_;
  uint64_t seed_;
  std::vector<RandomIndex> table_;
};

// Inner products over `pairs` independently generated index pairs, as a
// value -> frequency map. Reproduces the concentration-at-zero plots.
std::map<int64_t, uint64_t> inner_product_histogram(uint32_t k, uint32_t s, RiMode mode,
                                                    std::size_t pairs, Rng& rng);

struct InnerProductStats {
  double mean = 0.0;
  double variance = 0.0;
  double nonzero_fraction = 0.0;
  std::size_t pairs = 0;
};

InnerProductStats summarize_histogram(const std::map<int64_t, uint64_t>& hist);

}  // namespace nrp
