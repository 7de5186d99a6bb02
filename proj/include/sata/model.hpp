#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sata/core/init.hpp"
#include "sata/encoder.hpp"
#include "sata/heads.hpp"
#include "sata/treebank/cluster_map.hpp"

namespace sata {

struct ModelConfig {
  EncoderConfig encoder;
  HeadConfig head;

  void validate() const {
    encoder.validate();
    head.validate();
  }
};

// Encoder, task head and the vocabulary / tag map they were built for.
struct SataModel {
  ModelConfig config;
  treebank::ClusterMap clusters;
  EncoderParams encoder;
  ClassifierParams classifier;

  static SataModel create(const ModelConfig& cfg, WordVocab vocab, treebank::ClusterMap clusters, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    SataModel m;
    m.config = cfg;
    m.clusters = std::move(clusters);
    m.encoder = EncoderParams::make(cfg.encoder, std::move(vocab), rng);
    m.classifier = ClassifierParams::make(cfg.head.input_width(cfg.encoder.d_h), cfg.head, rng);
    return m;
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out = encoder.parameters();
    for (Parameter* p : classifier.parameters()) out.push_back(p);
    return out;
  }

  std::vector<Parameter*> trainable_parameters() {
    std::vector<Parameter*> out;
    for (Parameter* p : parameters())
      if (p->trainable) out.push_back(p);
    return out;
  }
};

struct ExampleForward {
  Var head_input;
  EncodeResult premise;
};

// Root state, or pair features for NLI with both sentences through the same
// encoder.
inline ExampleForward forward_example(Tape& tape, const treebank::Example& ex, SataModel& m, const ForwardMode& mode) {
  ExampleForward f;
  f.premise = encode_sentence(tape, ex.sentence, m.encoder, mode);
  if (m.config.head.task == Task::nli) {
    if (!ex.hypothesis) throw std::invalid_argument("nli example without a hypothesis");
    const EncodeResult hyp = encode_sentence(tape, *ex.hypothesis, m.encoder, mode);
    f.head_input = snli_features(f.premise.root.h, hyp.root.h);
  } else {
    f.head_input = f.premise.root.h;
  }
  return f;
}

struct ParamCount {
  std::string name;
  Shape shape;
  std::size_t count = 0;
};

// Trainable tensors implied by a configuration, computed from the layer
// formulas. The word embedding is listed only when it is trained
// (vocab_size rows).
inline std::vector<ParamCount> count_params(const ModelConfig& cfg, std::size_t vocab_size = 0, bool with_head = true) {
  const EncoderConfig& e = cfg.encoder;
  const std::size_t dh = e.d_h, dw = e.d_w, dt = e.d_t;
  std::vector<ParamCount> out;
  auto item = [&out](std::string name, Shape shape) {
    const std::size_t n = shape_volume(shape);
    out.push_back(ParamCount{std::move(name), std::move(shape), n});
  };
  if (e.train_word_embeddings) item("word_embedding", {vocab_size, dw});
  if (e.tag_mode != TagMode::none) item("tag_embedding", {treebank::kTagCategories, dt});
  if (e.tag_mode == TagMode::structure_aware) {
    item("tag_cell.U_T", {2 * dt, dt});
    item("tag_cell.a_T", {2 * dt});
    item("tag_cell.W_T", {5 * dt, 3 * dt});
    item("tag_cell.b_T", {5 * dt});
  }
  switch (e.leaf_mode) {
    case LeafMode::lstm:
      item("leaf_lstm.W_L", {4 * dh, dh + dw});
      item("leaf_lstm.b_L", {4 * dh});
      break;
    case LeafMode::bilstm:
      item("leaf_lstm.W_L", {4 * dh, dh + dw});
      item("leaf_lstm.b_L", {4 * dh});
      item("leaf_lstm_bwd.W_L", {4 * dh, dh + dw});
      item("leaf_lstm_bwd.b_L", {4 * dh});
      item("leaf_proj.P_h", {dh, 2 * dh});
      item("leaf_proj.p_h", {dh});
      item("leaf_proj.P_c", {dh, 2 * dh});
      item("leaf_proj.p_c", {dh});
      break;
    case LeafMode::fc:
      item("leaf_fc.W_F", {2 * dh, dw});
      item("leaf_fc.b_F", {2 * dh});
      break;
  }
  item("word_cell.U_w", {dh, 2 * dh});
  item("word_cell.a_w", {dh});
  item("word_cell.W_w", {4 * dh, 2 * dh + e.gate_tag_width()});
  item("word_cell.b_w", {4 * dh});
  if (with_head) {
    const HeadConfig& h = cfg.head;
    item("classifier.W_s", {h.d_s, h.input_width(dh)});
    item("classifier.b_s", {h.d_s});
    item("classifier.W_c", {h.num_classes, h.d_s});
    item("classifier.b_c", {h.num_classes});
  }
  return out;
}

inline std::size_t total_params(const std::vector<ParamCount>& items) {
  return std::accumulate(items.begin(), items.end(), std::size_t{0},
                         [](std::size_t acc, const ParamCount& p) { return acc + p.count; });
}

}  // namespace sata
