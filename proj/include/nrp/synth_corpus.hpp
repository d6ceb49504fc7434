#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrp/rng.hpp"

namespace nrp {

// Deterministic synthetic corpus for scaled-down experiments. Each token
// mostly follows its predecessor through a fixed affine walk over the type
// space, with occasional jumps drawn from a Zipf head, so there is real
// next-word structure to learn and a frequency skew like natural text. One
// contiguous stream is cut into train/valid/test.
struct SynthCorpus {
  std::vector<std::string> train;
  std::vector<std::string> valid;
  std::vector<std::string> test;
};

inline SynthCorpus generate_synth_corpus(std::size_t types, std::size_t train_tokens,
                                         std::size_t valid_tokens, std::size_t test_tokens,
                                         uint64_t seed, double jump_p = 0.3) {
  std::vector<std::string> names(types);
  for (std::size_t t = 0; t < types; ++t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "w%04lu", static_cast<unsigned long>(t));
    names[t] = buf;
  }

  std::vector<double> cum(types);
  double total = 0.0;
  for (std::size_t t = 0; t < types; ++t) {
    total += 1.0 / static_cast<double>(t + 1);
    cum[t] = total;
  }

  Rng rng(seed);
  auto zipf_draw = [&]() {
    const double u = rng.uniform() * total;
    std::size_t lo = 0, hi = types - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cum[mid] < u) lo = mid + 1;
      else hi = mid;
    }
    return lo;
  };

  const std::size_t total_tokens = train_tokens + valid_tokens + test_tokens;
  std::vector<std::string> stream;
  stream.reserve(total_tokens);
  std::size_t cur = rng.uniform_int(types);
  for (std::size_t i = 0; i < total_tokens; ++i) {
    stream.push_back(names[cur]);
    if (rng.uniform() < jump_p)
      cur = zipf_draw();
    else
      cur = (7 * cur + 13) % types;
  }

  SynthCorpus corpus;
  corpus.train.assign(stream.begin(), stream.begin() + train_tokens);
  corpus.valid.assign(stream.begin() + train_tokens,
                      stream.begin() + train_tokens + valid_tokens);
  corpus.test.assign(stream.begin() + train_tokens + valid_tokens, stream.end());
  return corpus;
}

// Token files in the expected input format: space-separated tokens, a
// newline every `per_line` tokens.
inline void write_token_file(const std::string& path, const std::vector<std::string>& tokens,
                             std::size_t per_line = 20) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_token_file: cannot open " + path);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::fputs(tokens[i].c_str(), f);
    const bool line_end = (i + 1) % per_line == 0 || i + 1 == tokens.size();
    std::fputc(line_end ? '\n' : ' ', f);
  }
  std::fclose(f);
}

}  // namespace nrp
