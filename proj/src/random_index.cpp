#include "nrp/random_index.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "nrp/io_util.hpp"

namespace nrp {

RiMode ri_mode_from_string(const std::string& s) {
  if (s == "ternary") return RiMode::Ternary;
  if (s == "binary") return RiMode::Binary;
  throw std::invalid_argument("unknown random index mode: " + s);
}

const char* to_string(RiMode mode) {
  return mode == RiMode::Ternary ? "ternary" : "binary";
}

std::vector<int8_t> RandomIndex::to_dense() const {
  std::vector<int8_t> dense(k, 0);
  for (uint32_t p : positive_positions) dense[p] = 1;
  for (uint32_t p : negative_positions) dense[p] = -1;
  return dense;
}

RandomIndex generate_random_index(uint32_t k, uint32_t s, RiMode mode, Rng& rng) {
  if (s < 1 || s > k)
    throw std::invalid_argument("generate_random_index: need 1 <= s <= k, got s=" +
                                std::to_string(s) + " k=" + std::to_string(k));

  // Rejection sampling keeps the sampled order uniformly random, which the
  // sign split below relies on.
  std::vector<uint32_t> order;
  order.reserve(s);
  std::unordered_set<uint32_t> seen;
  seen.reserve(s * 2);
  while (order.size() < s) {
    const uint32_t p = static_cast<uint32_t>(rng.uniform_int(k));
    if (seen.insert(p).second) order.push_back(p);
  }

  RandomIndex ri;
  ri.k = k;
  const std::size_t positives = mode == RiMode::Binary ? s : (s + 1) / 2;
  ri.positive_positions.assign(order.begin(), order.begin() + positives);
  ri.negative_positions.assign(order.begin() + positives, order.end());
  std::sort(ri.positive_positions.begin(), ri.positive_positions.end());
  std::sort(ri.negative_positions.begin(), ri.negative_positions.end());
  return ri;
}

namespace {
int64_t sorted_overlap(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
  int64_t count = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (a[i] > b[j]) ++j;
    else { ++count; ++i; ++j; }
  }
  return count;
}
}  // namespace

int64_t inner_product(const RandomIndex& a, const RandomIndex& b) {
  if (a.k != b.k)
    throw std::invalid_argument("inner_product: dimension mismatch, " + std::to_string(a.k) +
                                " vs " + std::to_string(b.k));
  return sorted_overlap(a.positive_positions, b.positive_positions) +
         sorted_overlap(a.negative_positions, b.negative_positions) -
         sorted_overlap(a.positive_positions, b.negative_positions) -
         sorted_overlap(a.negative_positions, b.positive_positions);
}

RandomIndexLookup::RandomIndexLookup(uint32_t k, uint32_t s, RiMode mode, uint64_t seed)
    : k_(k), s_(s), mode_(mode), seed_(seed) {
  if (s < 1 || s > k)
    throw std::invalid_argument("RandomIndexLookup: need 1 <= s <= k, got s=" +
                                std::to_string(s) + " k=" + std::to_string(k));
}

const RandomIndex& RandomIndexLookup::lookup_or_create(uint32_t word_id) {
  ensure(static_cast<std::size_t>(word_id) + 1);
  return table_[word_id];
}

void RandomIndexLookup::ensure(std::size_t count) {
  while (table_.size() < count) {
    Rng rng(derive_seed(seed_, table_.size()));
    table_.push_back(generate_random_index(k_, s_, mode_, rng));
  }
}

void RandomIndexLookup::set_index(uint32_t word_id, RandomIndex index) {
  if (index.k != k_)
    throw std::invalid_argument("RandomIndexLookup::set_index: dimension mismatch, " +
                                std::to_string(index.k) + " vs " + std::to_string(k_));
  if (index.nnz() != s_)
    throw std::invalid_argument("RandomIndexLookup::set_index: expected " + std::to_string(s_) +
                                " non-zeros, got " + std::to_string(index.nnz()));
  ensure(static_cast<std::size_t>(word_id) + 1);
  table_[word_id] = std::move(index);
}

const RandomIndex& RandomIndexLookup::at(uint32_t word_id) const {
  if (word_id >= table_.size())
    throw std::invalid_argument("RandomIndexLookup::at: id " + std::to_string(word_id) +
                                " not materialized (size " + std::to_string(table_.size()) + ")");
  return table_[word_id];
}

std::size_t RandomIndexLookup::duplicate_index_count() const {
  std::unordered_map<std::string, uint32_t> seen;
  std::size_t duplicates = 0;
  std::string key;
  for (const auto& ri : table_) {
    key.clear();
    key.reserve(ri.nnz() * 5 + 1);
    for (uint32_t p : ri.positive_positions) key.append(reinterpret_cast<const char*>(&p), 4);
    key.push_back('/');
    for (uint32_t p : ri.negative_positions) key.append(reinterpret_cast<const char*>(&p), 4);
    if (!seen.emplace(key, 1).second) ++duplicates;
  }
  return duplicates;
}

namespace {
constexpr uint32_t kLookupMagic = 0x5250524eu;  // "NRPR"
constexpr uint32_t kLookupVersion = 1;
}  // namespace

void RandomIndexLookup::save(std::ostream& out) const {
  io::write_u32(out, kLookupMagic);
  io::write_u32(out, kLookupVersion);
  io::write_u32(out, k_);
  io::write_u32(out, s_);
  io::write_u32(out, static_cast<uint32_t>(mode_));
  io::write_u64(out, seed_);
  io::write_u64(out, table_.size());
  for (const auto& ri : table_) {
    io::write_u32_array(out, ri.positive_positions);
    io::write_u32_array(out, ri.negative_positions);
  }
}

void RandomIndexLookup::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("RandomIndexLookup::save: cannot open " + path);
  save(out);
  if (!out) throw std::runtime_error("RandomIndexLookup::save: write failed for " + path);
}

RandomIndexLookup RandomIndexLookup::load(std::istream& in) {
  if (io::read_u32(in) != kLookupMagic)
    throw std::runtime_error("RandomIndexLookup::load: bad magic");
  if (io::read_u32(in) != kLookupVersion)
    throw std::runtime_error("RandomIndexLookup::load: unsupported version");
  const uint32_t k = io::read_u32(in);
  const uint32_t s = io::read_u32(in);
  const uint32_t mode = io::read_u32(in);
  if (mode > 1) throw std::runtime_error("RandomIndexLookup::load: bad mode value");
  const uint64_t seed = io::read_u64(in);
  const uint64_t count = io::read_u64(in);
  RandomIndexLookup lookup(k, s, static_cast<RiMode>(mode), seed);
  lookup.table_.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    RandomIndex ri;
    ri.k = k;
    ri.positive_positions = io::read_u32_array(in);
    ri.negative_positions = io::read_u32_array(in);
    if (ri.nnz() != s) throw std::runtime_error("RandomIndexLookup::load: corrupt entry");
    lookup.table_.push_back(std::move(ri));
  }
  return lookup;
}

RandomIndexLookup RandomIndexLookup::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("RandomIndexLookup::load: cannot open " + path);
  return load(in);
}

std::map<int64_t, uint64_t> inner_product_histogram(uint32_t k, uint32_t s, RiMode mode,
                                                    std::size_t pairs, Rng& rng) {
  if (pairs < 1) throw std::invalid_argument("inner_product_histogram: pairs must be >= 1");
  std::map<int64_t, uint64_t> hist;
  for (std::size_t i = 0; i < pairs; ++i) {
    const RandomIndex a = generate_random_index(k, s, mode, rng);
    const RandomIndex b = generate_random_index(k, s, mode, rng);
    ++hist[inner_product(a, b)];
  }
  return hist;
}

InnerProductStats summarize_histogram(const std::map<int64_t, uint64_t>& hist) {
  InnerProductStats stats;
  for (const auto& [value, count] : hist) {
    stats.pairs += count;
    stats.mean += static_cast<double>(value) * static_cast<double>(count);
    if (value != 0) stats.nonzero_fraction += static_cast<double>(count);
  }
  if (stats.pairs == 0) return stats;
  stats.mean /= static_cast<double>(stats.pairs);
  stats.nonzero_fraction /= static_cast<double>(stats.pairs);
  for (const auto& [value, count] : hist) {
    const double d = static_cast<double>(value) - stats.mean;
    stats.variance += d * d * static_cast<double>(count);
  }
  stats.variance /= static_cast<double>(stats.pairs);
  return stats;
}

}  // namespace nrp
