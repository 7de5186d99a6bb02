#pragma once

// Binary checkpoint layout (all integers little-endian):
//   "SATACKPT" | u32 version | u64 config digest
//   u64 len + meta JSON (run config, vocabulary, cluster map)
//   u64 epoch | f64 best metric | u64 len + rng state text
//   u64 tensor count, then per tensor:
//     u32 len + name | u8 dtype (0 = f64) | u32 rank | u64 dims[rank] | f64 values

#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sata/config.hpp"
#include "sata/core/error.hpp"
#include "sata/core/tensor.hpp"
#include "sata/io.hpp"
#include "sata/model.hpp"

namespace sata {

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'T', 'A', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t digest = 0;
  nlohmann::json meta = nlohmann::json::object();
  std::uint64_t epoch = 0;
  double best_metric = -std::numeric_limits<double>::infinity();
  std::string rng_state;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
  bool operator==(const Checkpoint&) const = default;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str64(std::string_view s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}
  std::string_view raw(std::size_t n) {
    if (n > in_.size() - pos_) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    std::string_view s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(raw(1)[0]); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str64() {
    const std::uint64_t n = u64();
    return std::string(raw(static_cast<std::size_t>(n)));
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& c) {
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(c.version);
  w.u64(c.digest);
  w.str64(c.meta.dump());
  w.u64(c.epoch);
  w.f64(c.best_metric);
  w.str64(c.rng_state);
  w.u64(c.tensors.size());
  for (const auto& [name, t] : c.tensors) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u8(0);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
    for (double v : t.data()) w.f64(v);
  }
  return w.take();
}

inline Checkpoint deserialize_checkpoint(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(sizeof kCheckpointMagic) != std::string_view(kCheckpointMagic, sizeof kCheckpointMagic)) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  Checkpoint c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(c.version));
  }
  c.digest = r.u64();
  c.meta = nlohmann::json::parse(r.str64(), nullptr, false);
  if (c.meta.is_discarded()) throw CheckpointError("checkpoint metadata is not valid JSON");
  c.epoch = r.u64();
  c.best_metric = r.f64();
  c.rng_state = r.str64();
  const std::uint64_t count = r.u64();
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string name(r.raw(r.u32()));
    if (r.u8() != 0) throw CheckpointError("tensor " + name + ": unsupported dtype");
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (std::size_t& d : shape) d = static_cast<std::size_t>(r.u64());
    Tensor t(shape);
    for (double& v : t.data()) v = r.f64();
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint");
  return c;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
  io::write_file_atomic(path, serialize_checkpoint(c));
}

inline Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(io::read_file(path)); }

inline const char* const kRunningMean = "classifier.bn_running_mean";
inline const char* const kRunningVar = "classifier.bn_running_var";

// Parameters and batch-norm statistics, in model order.
inline std::vector<std::pair<std::string, Tensor>> model_tensors(SataModel& m) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (Parameter* p : m.parameters()) out.emplace_back(p->name, p->value);
  out.emplace_back(kRunningMean, m.classifier.running_mean);
  out.emplace_back(kRunningVar, m.classifier.running_var);
  return out;
}

inline nlohmann::json model_meta(const SataModel& m, const nlohmann::json& run_config) {
  return {{"config", run_config}, {"vocab", m.encoder.vocab.tokens()}, {"cluster_map", m.clusters.to_text()}};
}

inline void load_model_tensors(const Checkpoint& c, SataModel& m) {
  auto assign = [&](const std::string& name, Tensor& dst) {
    const Tensor* t = c.find(name);
    if (t == nullptr) throw CheckpointError("checkpoint is missing tensor " + name);
    if (t->shape() != dst.shape()) {
      throw CheckpointError("tensor " + name + " has shape " + shape_string(t->shape()) + ", model expects " +
                            shape_string(dst.shape()));
    }
    dst = *t;
  };
  for (Parameter* p : m.parameters()) {
    assign(p->name, p->value);
    p->zero_grad();
  }
  assign(kRunningMean, m.classifier.running_mean);
  assign(kRunningVar, m.classifier.running_var);
}

// Rebuilds the model a checkpoint was written from.
inline SataModel model_from_checkpoint(const Checkpoint& c) {
  if (!c.meta.contains("config") || !c.meta.contains("vocab") || !c.meta.contains("cluster_map")) {
    throw CheckpointError("checkpoint metadata lacks config, vocab or cluster_map");
  }
  const RunConfig cfg = run_config_from_json(c.meta.at("config"));
  if (config_digest(cfg.model) != c.digest) throw CheckpointError("checkpoint digest does not match its own config");
  WordVocab vocab = WordVocab::from_tokens(c.meta.at("vocab").get<std::vector<std::string>>());
  treebank::ClusterMap clusters = treebank::ClusterMap::parse(c.meta.at("cluster_map").get<std::string>());
  SataModel m = SataModel::create(cfg.model, std::move(vocab), std::move(clusters), 0);
  load_model_tensors(c, m);
  return m;
}

inline std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline Rng rng_from_string(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw CheckpointError("corrupt rng state in checkpoint");
  return rng;
}

}  // namespace sata
