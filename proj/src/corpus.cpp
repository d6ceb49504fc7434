#include "nrp/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "nrp/io_util.hpp"

namespace nrp {

Vocabulary::Vocabulary() { add(kUnkToken); }

uint32_t Vocabulary::add(const std::string& token) {
  const uint32_t id = static_cast<uint32_t>(id_to_token_.size());
  token_to_id_.emplace(token, id);
  id_to_token_.push_back(token);
  return id;
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) != 0;
}

uint32_t Vocabulary::encode(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? unk_id() : it->second;
}

std::vector<uint32_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<uint32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(encode(t));
  return ids;
}

const std::string& Vocabulary::decode(uint32_t id) const {
  if (id >= id_to_token_.size())
    throw std::invalid_argument("Vocabulary::decode: id " + std::to_string(id) +
                                " out of range (size " + std::to_string(size()) + ")");
  return id_to_token_[id];
}

Vocabulary build_vocabulary(const std::vector<std::string>& tokens, std::size_t capacity) {
  if (capacity < 1) throw std::invalid_argument("build_vocabulary: capacity must be >= 1");

  struct Entry {
    uint64_t count = 0;
    uint64_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  counts.reserve(tokens.size() / 2 + 16);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto [it, inserted] = counts.try_emplace(tokens[i]);
    if (inserted) it->second.first_seen = i;
    ++it->second.count;
  }

  std::vector<const std::pair<const std::string, Entry>*> ranked;
  ranked.reserve(counts.size());
  for (const auto& kv : counts) ranked.push_back(&kv);
  std::sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    if (a->second.count != b->second.count) return a->second.count > b->second.count;
    return a->second.first_seen < b->second.first_seen;
  });
  if (ranked.size() > capacity) ranked.resize(capacity);

  Vocabulary vocab;
  vocab.capacity_ = capacity;
  for (const auto* kv : ranked)
    if (kv->first != kUnkToken) vocab.add(kv->first);
  return vocab;
}

namespace {
constexpr uint32_t kVocabMagic = 0x5650524eu;  // "NRPV"
constexpr uint32_t kVocabVersion = 1;
}  // namespace

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("Vocabulary::save: cannot open " + path);
  io::write_u32(out, kVocabMagic);
  io::write_u32(out, kVocabVersion);
  io::write_u64(out, size());
  io::write_u64(out, capacity_);
  for (const auto& token : id_to_token_) io::write_string(out, token);
  if (!out) throw std::runtime_error("Vocabulary::save: write failed for " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("Vocabulary::load: cannot open " + path);
  if (io::read_u32(in) != kVocabMagic)
    throw std::runtime_error("Vocabulary::load: bad magic in " + path);
  if (io::read_u32(in) != kVocabVersion)
    throw std::runtime_error("Vocabulary::load: unsupported version in " + path);
  const uint64_t n = io::read_u64(in);
  Vocabulary vocab;
  vocab.capacity_ = io::read_u64(in);
  for (uint64_t i = 0; i < n; ++i) {
    std::string token = io::read_string(in);
    if (i == 0) {
      if (token != kUnkToken)
        throw std::runtime_error("Vocabulary::load: id 0 is not the unk token in " + path);
      continue;
    }
    vocab.add(token);
  }
  if (!in) throw std::runtime_error("Vocabulary::load: truncated file " + path);
  return vocab;
}

std::vector<std::string> read_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_tokens: cannot open " + path);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

WindowSet sliding_windows(const std::vector<uint32_t>& ids, std::size_t n, bool pad_start,
                          uint32_t unk_id) {
  if (n < 2) throw std::invalid_argument("sliding_windows: n must be >= 2");
  WindowSet ws;
  ws.n = n;

  const std::vector<uint32_t>* seq = &ids;
  std::vector<uint32_t> padded;
  if (pad_start) {
    padded.assign(n - 1, unk_id);
    padded.insert(padded.end(), ids.begin(), ids.end());
    seq = &padded;
  }

  if (seq->size() < n) {
    std::fprintf(stderr, "warning: sequence of %zu ids is shorter than n=%zu, no windows\n",
                 seq->size(), n);
    return ws;
  }

  const std::size_t count = seq->size() - n + 1;
  ws.data.reserve(count * n);
  for (std::size_t t = 0; t < count; ++t)
    ws.data.insert(ws.data.end(), seq->begin() + t, seq->begin() + t + n);
  return ws;
}

namespace {
std::vector<NGramBatch> slice_batches(const WindowSet& windows,
                                      const std::vector<uint32_t>& perm,
                                      std::size_t batch_size) {
  const std::size_t count = windows.count();
  const std::size_t ctx = windows.n - 1;
  std::vector<NGramBatch> batches;
  batches.reserve((count + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t sz = std::min(batch_size, count - start);
    NGramBatch b;
    b.n = windows.n;
    b.contexts.reserve(sz * ctx);
    b.targets.reserve(sz);
    for (std::size_t i = 0; i < sz; ++i) {
      const uint32_t w = perm[start + i];
      const uint32_t* row = windows.context(w);
      b.contexts.insert(b.contexts.end(), row, row + ctx);
      b.targets.push_back(windows.target(w));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}
}  // namespace

std::vector<NGramBatch> make_batches(const WindowSet& windows, std::size_t batch_size,
                                     uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  const std::size_t count = windows.count();
  std::vector<uint32_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = count; i > 1; --i)
    std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
  return slice_batches(windows, perm, batch_size);
}

std::vector<NGramBatch> make_sequential_batches(const WindowSet& windows,
                                                std::size_t batch_size) {
  if (batch_size < 1)
    throw std::invalid_argument("make_sequential_batches: batch_size must be >= 1");
  std::vector<uint32_t> perm(windows.count());
  std::iota(perm.begin(), perm.end(), 0u);
  return slice_batches(windows, perm, batch_size);
}

}  // namespace nrp
