#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "nrp/rng.hpp"

namespace nrp {

inline constexpr const char* kUnkToken = "<unk>";

// Capped frequency vocabulary. The unknown token always exists and always
// has id 0; remaining ids are dense, ordered by descending count with ties
// broken by first occurrence in the stream.
class Vocabulary {
 public:
  Vocabulary();

  std::size_t size() const { return id_to_token_.size(); }
  uint32_t unk_id() const { return 0; }
  std::size_t capacity() const { return capacity_; }

  bool contains(const std::string& token) const;
  uint32_t encode(const std::string& token) const;
  std::vector<uint32_t> encode(const std::vector<std::string>& tokens) const;
  const std::string& decode(uint32_t id) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  friend Vocabulary build_vocabulary(const std::vector<std::string>& tokens,
                                     std::size_t capacity);

 private:
  uint32_t add(const std::string& token);

  std::unordered_map<std::string, uint32_t> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::size_t capacity_ = 0;
};

// Keeps the `capacity` most frequent distinct tokens plus unk. If the
// literal unk token ranks inside the cap it is not double-counted, so PTB
// with capacity 10,000 yields exactly |V| = 10,000.
Vocabulary build_vocabulary(const std::vector<std::string>& tokens, std::size_t capacity);

// Whitespace tokens of one file, in order. Newlines are ordinary whitespace;
// the file is one continuous stream.
std::vector<std::string> read_tokens(const std::string& path);

// All n-gram windows of an id sequence, stored as contiguous rows of n ids:
// n-1 context ids followed by the target.
struct WindowSet {
  std::size_t n = 0;
  std::vector<uint32_t> data;

  std::size_t count() const { return n == 0 ? 0 : data.size() / n; }
  const uint32_t* context(std::size_t w) const { return data.data() + w * n; }
  uint32_t target(std::size_t w) const { return data[w * n + n - 1]; }
};

// Window t covers ids[t .. t+n-1), target ids[t+n-1]; len-n+1 windows in
// corpus order. A sequence shorter than n yields no windows and a warning on
// stderr. pad_start prepends n-1 unk ids so every token becomes a target.
WindowSet sliding_windows(const std::vector<uint32_t>& ids, std::size_t n,
                          bool pad_start = false, uint32_t unk_id = 0);

struct NGramBatch {
  std::size_t n = 0;
  std::vector<uint32_t> contexts;
  std::vector<uint32_t> targets;

  std::size_t size() const { return targets.size(); }
  const uint32_t* context(std::size_t i) const { return contexts.data() + i * (n - 1); }
};

// Seeded uniform shuffle of the windows, then consecutive slices of
// batch_size (final batch may be smaller). Same seed, same batches.
std::vector<NGramBatch> make_batches(const WindowSet& windows, std::size_t batch_size,
                                     uint64_t seed);

// Batches in corpus order, no shuffle. Evaluation splits use this so the
// batch-averaged perplexity has one canonical layout.
std::vector<NGramBatch> make_sequential_batches(const WindowSet& windows,
                                                std::size_t batch_size);

}  // namespace nrp
