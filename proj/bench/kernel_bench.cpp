#include <algorithm>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#else
#include <chrono>
#endif

#include "nrp/kernels.hpp"
#include "nrp/matrix.hpp"
#include "nrp/rng.hpp"

namespace {

double now_seconds() {
#ifdef _OPENMP
  return omp_get_wtime();
#else
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
#endif
}

nrp::Matrix<float> random_matrix(std::size_t rows, std::size_t cols, nrp::Rng& rng) {
  nrp::Matrix<float> m(rows, cols);
  for (auto& v : m.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return m;
}

bool bitwise_equal(const nrp::Matrix<float>& a, const nrp::Matrix<float>& b) {
  return a.rows == b.rows && a.cols == b.cols &&
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

double time_best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_seconds();
    fn();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 5;
  std::size_t batch = 128, m = 512, h = 512, vocab = 2000;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&](std::size_t& out) { if (i + 1 < argc) out = std::stoul(argv[++i]); };
    if (arg == "--reps" && i + 1 < argc) reps = std::stoi(argv[++i]);
    else if (arg == "--batch") next(batch);
    else if (arg == "--m") next(m);
    else if (arg == "--h") next(h);
    else if (arg == "--vocab") next(vocab);
    else {
      std::fprintf(stderr, "usage: kernel_bench [--reps N] [--batch B] [--m M] [--h H] [--vocab V]\n");
      return arg == "--help" ? 0 : 1;
    }
  }

#ifdef _OPENMP
  std::printf("openmp: %d thread(s)\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled at build time\n");
#endif
  std::printf("shapes: batch=%zu m=%zu h=%zu vocab=%zu, best of %d\n\n", batch, m, h, vocab,
              reps);

  nrp::Rng rng(7);
  const auto feats = random_matrix(batch, m, rng);
  const auto wh = random_matrix(m, h, rng);
  const auto hidden = random_matrix(batch, h, rng);
  const auto table = random_matrix(vocab, m, rng);
  const auto fhat = random_matrix(batch, m, rng);
  auto logits = random_matrix(batch, vocab, rng);
  for (auto& v : logits.data) v *= 5.0f;

  struct Row {
    const char* name;
    double flops;
    std::function<void(nrp::Matrix<float>&)> serial;
    std::function<void(nrp::Matrix<float>&)> parallel;
  };
  const std::vector<Row> rows = {
      {"matmul (BxM)x(MxH)", 2.0 * batch * m * h,
       [&](nrp::Matrix<float>& out) { nrp::kernels::serial::matmul(feats, wh, out); },
       [&](nrp::Matrix<float>& out) { nrp::kernels::matmul(feats, wh, out); }},
      {"matmul_nt (BxM)x(VxM)^T", 2.0 * batch * m * vocab,
       [&](nrp::Matrix<float>& out) { nrp::kernels::serial::matmul_nt(fhat, table, out); },
       [&](nrp::Matrix<float>& out) { nrp::kernels::matmul_nt(fhat, table, out); }},
      {"matmul_tn (BxM)^T x(BxH)", 2.0 * batch * m * h,
       [&](nrp::Matrix<float>& out) { nrp::kernels::serial::matmul_tn(feats, hidden, out); },
       [&](nrp::Matrix<float>& out) { nrp::kernels::matmul_tn(feats, hidden, out); }},
      {"softmax_rows (BxV)", 5.0 * batch * vocab,
       [&](nrp::Matrix<float>& out) { nrp::kernels::serial::softmax_rows(logits, out); },
       [&](nrp::Matrix<float>& out) { nrp::kernels::softmax_rows(logits, out); }},
  };

  std::printf("%-26s %12s %12s %9s %8s\n", "kernel", "serial ms", "parallel ms", "speedup",
              "bitwise");
  bool all_equal = true;
  for (const auto& row : rows) {
    nrp::Matrix<float> out_serial, out_parallel;
    row.serial(out_serial);
    row.parallel(out_parallel);
    const bool equal = bitwise_equal(out_serial, out_parallel);
    all_equal = all_equal && equal;
    const double ts = time_best_of(reps, [&]() { row.serial(out_serial); });
    const double tp = time_best_of(reps, [&]() { row.parallel(out_parallel); });
    std::printf("%-26s %12.3f %12.3f %8.2fx %8s  (%.2f GFLOP/s parallel)\n", row.name,
                ts * 1e3, tp * 1e3, ts / tp, equal ? "yes" : "NO",
                row.flops / tp * 1e-9);
  }
  if (!all_equal) {
    std::fprintf(stderr, "\nserial and parallel kernels disagree\n");
    return 1;
  }
  return 0;
}
