#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "nrp/io_util.hpp"
#include "nrp/model_baseline.hpp"
#include "nrp/model_nrp.hpp"

namespace nrp {

// Self-contained binary checkpoint: header with the model's shape, the
// random index table for the projected model (so a load needs no side
// files), then the five tensors in fixed order F, Wh, bh, Wy, by.

inline constexpr uint32_t kCheckpointMagic = 0x4350524eu;  // "NRPC"
inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
  ModelKind kind = ModelKind::Baseline;
  uint32_t precision = 4;
  uint64_t vocab_size = 0;
  uint64_t m = 0;
  uint64_t h = 0;
  uint64_t n = 0;
  Activation activation = Activation::Relu;
};

namespace detail {

template <typename T>
void write_tensor(std::ostream& out, const Matrix<T>& t) {
  io::write_u64(out, t.rows);
  io::write_u64(out, t.cols);
  io::write_raw(out, t.data);
}

template <typename T>
Matrix<T> read_tensor(std::istream& in) {
  const uint64_t rows = io::read_u64(in);
  const uint64_t cols = io::read_u64(in);
  Matrix<T> t(rows, cols);
  io::read_raw(in, t.data);
  return t;
}

inline void write_checkpoint_header(std::ostream& out, const CheckpointInfo& info) {
  io::write_u32(out, kCheckpointMagic);
  io::write_u32(out, kCheckpointVersion);
  io::write_u32(out, static_cast<uint32_t>(info.kind));
  io::write_u32(out, info.precision);
  io::write_u64(out, info.vocab_size);
  io::write_u64(out, info.m);
  io::write_u64(out, info.h);
  io::write_u64(out, info.n);
  io::write_u32(out, static_cast<uint32_t>(info.activation));
}

inline CheckpointInfo read_checkpoint_header(std::istream& in) {
  if (io::read_u32(in) != kCheckpointMagic)
    throw std::runtime_error("checkpoint: bad magic (not a model checkpoint)");
  if (io::read_u32(in) != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  CheckpointInfo info;
  const uint32_t kind = io::read_u32(in);
  if (kind > 1) throw std::runtime_error("checkpoint: bad model kind value");
  info.kind = static_cast<ModelKind>(kind);
  info.precision = io::read_u32(in);
  if (info.precision != 4 && info.precision != 8)
    throw std::runtime_error("checkpoint: bad precision value");
  info.vocab_size = io::read_u64(in);
  info.m = io::read_u64(in);
  info.h = io::read_u64(in);
  info.n = io::read_u64(in);
  const uint32_t act = io::read_u32(in);
  if (act > 3) throw std::runtime_error("checkpoint: bad activation value");
  info.activation = static_cast<Activation>(act);
  return info;
}

template <typename T, typename Params>
void write_tensors(std::ostream& out, const Params& p) {
  io::write_u32(out, 5);
  write_tensor(out, p.F);
  write_tensor(out, p.Wh);
  write_tensor(out, p.bh);
  write_tensor(out, p.Wy);
  write_tensor(out, p.by);
}

template <typename T, typename Params>
void read_tensors(std::istream& in, Params& p) {
  if (io::read_u32(in) != 5) throw std::runtime_error("checkpoint: unexpected tensor count");
  p.F = read_tensor<T>(in);
  p.Wh = read_tensor<T>(in);
  p.bh = read_tensor<T>(in);
  p.Wy = read_tensor<T>(in);
  p.by = read_tensor<T>(in);
}

}  // namespace detail

template <typename T>
void save_checkpoint(const std::string& path, const BaselineParams<T>& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  detail::write_checkpoint_header(out, {ModelKind::Baseline, static_cast<uint32_t>(sizeof(T)),
                                        p.vocab_size(), p.m(), p.h(), p.n, p.activation});
  detail::write_tensors<T>(out, p);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

template <typename T>
void save_checkpoint(const std::string& path, const NRPParams<T>& p, std::size_t vocab_size) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  detail::write_checkpoint_header(out, {ModelKind::Nrp, static_cast<uint32_t>(sizeof(T)),
                                        vocab_size, p.m(), p.h(), p.n, p.activation});
  p.lookup.save(out);
  detail::write_tensors<T>(out, p);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline CheckpointInfo read_checkpoint_info(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_checkpoint_info: cannot open " + path);
  return detail::read_checkpoint_header(in);
}

template <typename T>
BaselineParams<T> load_baseline_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_baseline_checkpoint: cannot open " + path);
  const CheckpointInfo info = detail::read_checkpoint_header(in);
  if (info.kind != ModelKind::Baseline)
    throw std::runtime_error("load_baseline_checkpoint: " + path + " holds a " +
                             std::string(to_string(info.kind)) + " model");
  if (info.precision != sizeof(T))
    throw std::runtime_error("load_baseline_checkpoint: precision mismatch (file " +
                             std::to_string(info.precision * 8) + "-bit)");
  BaselineParams<T> p;
  p.n = info.n;
  p.activation = info.activation;
  detail::read_tensors<T>(in, p);
  if (p.F.rows != info.vocab_size || p.F.cols != info.m || p.Wh.cols != info.h)
    throw std::runtime_error("load_baseline_checkpoint: tensor shapes disagree with header");
  return p;
}

// Returns the parameters and the vocabulary size the model normalizes over.
template <typename T>
std::pair<NRPParams<T>, std::size_t> load_nrp_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_nrp_checkpoint: cannot open " + path);
  const CheckpointInfo info = detail::read_checkpoint_header(in);
  if (info.kind != ModelKind::Nrp)
    throw std::runtime_error("load_nrp_checkpoint: " + path + " holds a " +
                             std::string(to_string(info.kind)) + " model");
  if (info.precision != sizeof(T))
    throw std::runtime_error("load_nrp_checkpoint: precision mismatch (file " +
                             std::to_string(info.precision * 8) + "-bit)");
  RandomIndexLookup lookup = RandomIndexLookup::load(in);
  NRPParams<T> p{{}, {}, {}, {}, {}, info.n, info.activation, std::move(lookup)};
  detail::read_tensors<T>(in, p);
  if (p.F.rows != p.lookup.k() || p.F.cols != info.m || p.Wh.cols != info.h)
    throw std::runtime_error("load_nrp_checkpoint: tensor shapes disagree with header");
  if (p.lookup.size() < info.vocab_size)
    throw std::runtime_error("load_nrp_checkpoint: index table smaller than vocabulary");
  return {std::move(p), info.vocab_size};
}

}  // namespace nrp
