#pragma once

// The SATA sentence encoder: a tag-level tree-LSTM over clustered tags, a
// leaf module over the words, and a word-level tree-LSTM whose gates read the
// tag states. Two execution paths: recursion over the tree, and a shift-reduce
// stack machine over the tree's transition sequence.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sata/cells.hpp"
#include "sata/core/dropout.hpp"
#include "sata/core/error.hpp"
#include "sata/core/ops.hpp"
#include "sata/embeddings.hpp"
#include "sata/treebank/example.hpp"
#include "sata/treebank/transitions.hpp"

namespace sata {

enum class LeafMode { lstm, bilstm, fc };
enum class TagMode { structure_aware, naive, none };

inline const char* to_string(LeafMode m) {
  switch (m) {
    case LeafMode::lstm: return "lstm";
    case LeafMode::bilstm: return "bilstm";
    case LeafMode::fc: return "fc";
  }
  return "?";
}
inline const char* to_string(TagMode m) {
  switch (m) {
    case TagMode::structure_aware: return "structure_aware";
    case TagMode::naive: return "naive";
    case TagMode::none: return "none";
  }
  return "?";
}
inline LeafMode parse_leaf_mode(const std::string& s) {
  if (s == "lstm") return LeafMode::lstm;
  if (s == "bilstm") return LeafMode::bilstm;
  if (s == "fc") return LeafMode::fc;
  throw ConfigError("unknown leaf_mode '" + s + "' (lstm, bilstm, fc)");
}
inline TagMode parse_tag_mode(const std::string& s) {
  if (s == "structure_aware") return TagMode::structure_aware;
  if (s == "naive") return TagMode::naive;
  if (s == "none") return TagMode::none;
  throw ConfigError("unknown tag_mode '" + s + "' (structure_aware, naive, none)");
}

struct EncoderConfig {
  std::size_t d_w = 300;
  std::size_t d_h = 300;
  std::size_t d_t = 128;
  LeafMode leaf_mode = LeafMode::lstm;
  TagMode tag_mode = TagMode::structure_aware;
  double embedding_dropout = 0.0;
  double forget_bias = 0.0;
  bool train_word_embeddings = false;

  void validate() const {
    if (d_w == 0 || d_h == 0) throw ConfigError("encoder dims must be positive");
    if (tag_mode != TagMode::none && d_t == 0) throw ConfigError("d_t must be positive when tags are used");
    if (embedding_dropout < 0.0 || embedding_dropout >= 1.0) throw ConfigError("embedding_dropout must be in [0, 1)");
  }
  // Width of the tag block in the word cell's gate input.
  std::size_t gate_tag_width() const { return tag_mode == TagMode::none ? 0 : d_t; }
};

// One-layer tanh transform producing [c; h] for every word.
struct FcLeafParams {
  Parameter W;  // 2d_h x d_w
  Parameter b;  // 2d_h
};

// Affine maps from bidirectional [fwd; bwd] states down to d_h.
struct BiProjection {
  Parameter P_h;  // d_h x 2d_h
  Parameter p_h;  // d_h
  Parameter P_c;  // d_h x 2d_h
  Parameter p_c;  // d_h
};

struct EncoderParams {
  EncoderConfig config;
  WordVocab vocab;
  Parameter word_embedding;
  std::optional<Parameter> tag_embedding;
  std::optional<TagTreeCellParams> tag_cell;
  std::optional<LeafLstmParams> leaf_lstm;
  std::optional<LeafLstmParams> leaf_lstm_bwd;
  std::optional<BiProjection> leaf_proj;
  std::optional<FcLeafParams> leaf_fc;
  WordTreeCellParams word_cell;

  static EncoderParams make(const EncoderConfig& cfg, WordVocab vocab, Rng& rng) {
    cfg.validate();
    const CellInit init{cfg.forget_bias};
    EncoderParams p;
    p.config = cfg;
    p.word_embedding = make_word_embedding(vocab, cfg.d_w, cfg.train_word_embeddings, rng);
    p.vocab = std::move(vocab);
    if (cfg.tag_mode != TagMode::none) p.tag_embedding = make_tag_embedding(cfg.d_t, rng);
    if (cfg.tag_mode == TagMode::structure_aware) p.tag_cell = TagTreeCellParams::make(cfg.d_t, rng, init);
    switch (cfg.leaf_mode) {
      case LeafMode::lstm:
        p.leaf_lstm = LeafLstmParams::make(cfg.d_h, cfg.d_w, rng, init);
        break;
      case LeafMode::bilstm:
        p.leaf_lstm = LeafLstmParams::make(cfg.d_h, cfg.d_w, rng, init);
        p.leaf_lstm_bwd = LeafLstmParams::make(cfg.d_h, cfg.d_w, rng, init, "leaf_lstm_bwd");
        p.leaf_proj = BiProjection{detail::he_weight("leaf_proj.P_h", cfg.d_h, 2 * cfg.d_h, rng),
                                   detail::bias("leaf_proj.p_h", cfg.d_h),
                                   detail::he_weight("leaf_proj.P_c", cfg.d_h, 2 * cfg.d_h, rng),
                                   detail::bias("leaf_proj.p_c", cfg.d_h)};
        break;
      case LeafMode::fc:
        p.leaf_fc = FcLeafParams{detail::he_weight("leaf_fc.W_F", 2 * cfg.d_h, cfg.d_w, rng),
                                 detail::bias("leaf_fc.b_F", 2 * cfg.d_h)};
        break;
    }
    p.word_cell = WordTreeCellParams::make(cfg.d_h, cfg.gate_tag_width(), rng, init);
    return p;
  }

  // Every tensor in a fixed order, word embedding first.
  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out{&word_embedding};
    if (tag_embedding) out.push_back(&*tag_embedding);
    if (tag_cell) out.insert(out.end(), {&tag_cell->U, &tag_cell->a, &tag_cell->W, &tag_cell->b});
    if (leaf_lstm) out.insert(out.end(), {&leaf_lstm->W, &leaf_lstm->b});
    if (leaf_lstm_bwd) out.insert(out.end(), {&leaf_lstm_bwd->W, &leaf_lstm_bwd->b});
    if (leaf_proj) out.insert(out.end(), {&leaf_proj->P_h, &leaf_proj->p_h, &leaf_proj->P_c, &leaf_proj->p_c});
    if (leaf_fc) out.insert(out.end(), {&leaf_fc->W, &leaf_fc->b});
    out.insert(out.end(), {&word_cell.U, &word_cell.a, &word_cell.W, &word_cell.b});
    return out;
  }
};

struct NodeAnnotation {
  std::size_t index = 0;  // post-order
  CellState word;
  std::optional<CellState> tag;   // structure-aware tag state
  std::optional<Var> tag_input;   // what the word cell's gates saw
  std::optional<Var> candidate;   // internal nodes: the composed candidate g
};

struct EncodeResult {
  CellState root;
  std::vector<NodeAnnotation> nodes;  // indexed by post-order position
};

// Leaf-module states, one per token, computed left to right. Shared by both
// execution paths so embedding-dropout masks are drawn in the same order.
inline std::vector<CellState> leaf_states(Tape& tape, const treebank::Sentence& sentence, EncoderParams& p,
                                          const ForwardMode& mode) {
  if (sentence.tokens.empty()) throw DimensionError("cannot encode an empty sentence");
  const EncoderConfig& cfg = p.config;
  std::vector<Var> xs = lookup_words(tape, p.word_embedding, p.vocab.ids(sentence.tokens));
  for (Var& x : xs) x = dropout(x, cfg.embedding_dropout, mode);
  const std::size_t n = xs.size(), d = cfg.d_h;
  std::vector<CellState> out;
  out.reserve(n);
  switch (cfg.leaf_mode) {
    case LeafMode::lstm: {
      CellState prev = zero_state(tape, d);
      for (Var x : xs) out.push_back(prev = leaf_lstm_step(prev, x, *p.leaf_lstm));
      break;
    }
    case LeafMode::bilstm: {
      std::vector<CellState> fwd, bwd(n);
      CellState prev = zero_state(tape, d);
      for (Var x : xs) fwd.push_back(prev = leaf_lstm_step(prev, x, *p.leaf_lstm));
      prev = zero_state(tape, d);
      for (std::size_t t = n; t-- > 0;) bwd[t] = prev = leaf_lstm_step(prev, xs[t], *p.leaf_lstm_bwd);
      BiProjection& proj = *p.leaf_proj;
      for (std::size_t t = 0; t < n; ++t) {
        Var h = add(matmul(tape.param(proj.P_h), concat({fwd[t].h, bwd[t].h})), tape.param(proj.p_h));
        Var c = add(matmul(tape.param(proj.P_c), concat({fwd[t].c, bwd[t].c})), tape.param(proj.p_c));
        out.push_back(CellState{h, c});
      }
      break;
    }
    case LeafMode::fc: {
      for (Var x : xs) {
        Var y = tanh(add(matmul(tape.param(p.leaf_fc->W), x), tape.param(p.leaf_fc->b)));
        out.push_back(CellState{slice(y, d, 2 * d), slice(y, 0, d)});
      }
      break;
    }
  }
  return out;
}

namespace detail {

inline CellState encode_tag_node(Tape& tape, const treebank::BinaryTree& tree, std::size_t i, EncoderParams& p,
                                 std::vector<std::optional<CellState>>& out) {
  const treebank::BinaryNode& n = tree.node(i);
  Var e = lookup_tag(tape, *p.tag_embedding, n.cluster);
  CellState s;
  if (n.is_leaf()) {
    s = tag_leaf_step(e, *p.tag_cell);
  } else {
    CellState l = encode_tag_node(tape, tree, static_cast<std::size_t>(n.left), p, out);
    CellState r = encode_tag_node(tape, tree, static_cast<std::size_t>(n.right), p, out);
    s = tag_internal_step(l, r, e, *p.tag_cell);
  }
  out[i] = s;
  return s;
}

}  // namespace detail

// Structure-aware tag states for every node, indexed by post-order position.
// Reads tags and tree shape only, never the words.
inline std::vector<CellState> encode_tags(Tape& tape, const treebank::BinaryTree& tree, EncoderParams& p) {
  if (!p.tag_cell) throw std::logic_error("encode_tags needs tag_mode structure_aware");
  std::vector<std::optional<CellState>> states(tree.size());
  detail::encode_tag_node(tape, tree, tree.root_index(), p, states);
  std::vector<CellState> out;
  out.reserve(states.size());
  for (auto& s : states) out.push_back(*s);
  return out;
}

namespace detail {

struct RecursiveEncoder {
  Tape& tape;
  const treebank::BinaryTree& tree;
  EncoderParams& p;
  const std::vector<CellState>& leaves;
  const std::vector<CellState>* tags;
  std::vector<NodeAnnotation>& out;

  CellState visit(std::size_t i) {
    const treebank::BinaryNode& n = tree.node(i);
    NodeAnnotation& a = out[i];
    a.index = i;
    if (tags) a.tag = (*tags)[i];
    if (n.is_leaf()) {
      a.word = leaves[static_cast<std::size_t>(n.leaf)];
      return a.word;
    }
    CellState l = visit(static_cast<std::size_t>(n.left));
    CellState r = visit(static_cast<std::size_t>(n.right));
    std::optional<Var> tag_input;
    if (p.config.tag_mode == TagMode::structure_aware) tag_input = (*tags)[i].h;
    if (p.config.tag_mode == TagMode::naive) tag_input = lookup_tag(tape, *p.tag_embedding, n.cluster);
    ComposeResult composed = sata_compose(l, r, tag_input, p.word_cell);
    out[i].tag_input = tag_input;
    out[i].candidate = composed.candidate;
    out[i].word = composed.state;
    return composed.state;
  }
};

}  // namespace detail

// Recursive evaluation. Root is the last annotation; with one token the root
// is the leaf-module state itself.
inline EncodeResult encode_sentence(Tape& tape, const treebank::Sentence& sentence, EncoderParams& p,
                                    const ForwardMode& mode = {}) {
  const treebank::BinaryTree& tree = sentence.tree;
  if (tree.leaf_count() != sentence.tokens.size()) {
    throw StructuralError("tree has " + std::to_string(tree.leaf_count()) + " leaves for " +
                          std::to_string(sentence.tokens.size()) + " tokens");
  }
  std::vector<CellState> tags;
  if (p.config.tag_mode == TagMode::structure_aware) tags = encode_tags(tape, tree, p);
  const std::vector<CellState> leaves = leaf_states(tape, sentence, p, mode);
  EncodeResult result;
  result.nodes.resize(tree.size());
  detail::RecursiveEncoder walker{tape, tree, p, leaves, tags.empty() ? nullptr : &tags, result.nodes};
  result.root = walker.visit(tree.root_index());
  return result;
}

struct SpinnResult {
  CellState root;
  std::vector<CellState> states;  // word states in execution (post-) order
};

namespace detail {

// Stack machine for one sentence, advanced one transition at a time.
class SpinnMachine {
 public:
  SpinnMachine(Tape& tape, EncoderParams& p, std::vector<CellState> leaves)
      : tape_(tape), p_(p), leaves_(std::move(leaves)) {}

  void step(const treebank::Transition& t) {
    const TagMode mode = p_.config.tag_mode;
    switch (t.op) {
      case treebank::Op::noop:
        return;
      case treebank::Op::shift: {
        if (t.token < 0 || static_cast<std::size_t>(t.token) >= leaves_.size()) {
          throw StructuralError("SHIFT of token " + std::to_string(t.token) + " outside the sentence");
        }
        if (mode == TagMode::structure_aware) {
          tags_.push_back(tag_leaf_step(lookup_tag(tape_, *p_.tag_embedding, t.cluster), *p_.tag_cell));
        }
        words_.push_back(leaves_[static_cast<std::size_t>(t.token)]);
        break;
      }
      case treebank::Op::reduce: {
        if (words_.size() < 2) throw StructuralError("REDUCE underflows the stack");
        std::optional<Var> tag_input;
        if (mode == TagMode::structure_aware) {
          CellState r = tags_.back();
          tags_.pop_back();
          CellState l = tags_.back();
          tags_.pop_back();
          CellState parent = tag_internal_step(l, r, lookup_tag(tape_, *p_.tag_embedding, t.cluster), *p_.tag_cell);
          tags_.push_back(parent);
          tag_input = parent.h;
        } else if (mode == TagMode::naive) {
          tag_input = lookup_tag(tape_, *p_.tag_embedding, t.cluster);
        }
        CellState r = words_.back();
        words_.pop_back();
        CellState l = words_.back();
        words_.pop_back();
        words_.push_back(sata_compose(l, r, tag_input, p_.word_cell).state);
        break;
      }
    }
    states_.push_back(words_.back());
  }

  SpinnResult finish() {
    if (words_.size() != 1) {
      throw StructuralError("transitions left " + std::to_string(words_.size()) + " entries on the stack");
    }
    return SpinnResult{words_.back(), std::move(states_)};
  }

 private:
  Tape& tape_;
  EncoderParams& p_;
  std::vector<CellState> leaves_;
  std::vector<CellState> words_;
  std::vector<CellState> tags_;
  std::vector<CellState> states_;
};

}  // namespace detail

inline SpinnResult spinn_encode(Tape& tape, const treebank::Sentence& sentence,
                                const treebank::TransitionSequence& transitions, EncoderParams& p,
                                const ForwardMode& mode = {}) {
  if (treebank::validate_transitions(transitions) != sentence.tokens.size()) {
    throw StructuralError("transition sequence does not match the sentence length");
  }
  detail::SpinnMachine machine(tape, p, leaf_states(tape, sentence, p, mode));
  for (const treebank::Transition& t : transitions) machine.step(t);
  return machine.finish();
}

// Lock-step execution over a batch: sequences are padded with NOOPs to the
// longest one and transition k of every sentence runs before k + 1.
inline std::vector<SpinnResult> spinn_encode_batch(Tape& tape, std::span<const treebank::Sentence> sentences,
                                                   std::span<const treebank::TransitionSequence> transitions,
                                                   EncoderParams& p, const ForwardMode& mode = {}) {
  if (sentences.size() != transitions.size()) throw DimensionError("batch sizes of sentences and transitions differ");
  std::size_t longest = 0;
  std::vector<treebank::TransitionSequence> padded(transitions.begin(), transitions.end());
  for (std::size_t b = 0; b < padded.size(); ++b) {
    if (treebank::validate_transitions(padded[b]) != sentences[b].tokens.size()) {
      throw StructuralError("transition sequence " + std::to_string(b) + " does not match its sentence");
    }
    longest = std::max(longest, padded[b].size());
  }
  for (auto& seq : padded) seq.resize(longest, treebank::Transition::noop());

  std::vector<detail::SpinnMachine> machines;
  machines.reserve(sentences.size());
  for (const treebank::Sentence& s : sentences) machines.emplace_back(tape, p, leaf_states(tape, s, p, mode));
  for (std::size_t k = 0; k < longest; ++k)
    for (std::size_t b = 0; b < machines.size(); ++b) machines[b].step(padded[b][k]);

  std::vector<SpinnResult> out;
  out.reserve(machines.size());
  for (auto& m : machines) out.push_back(m.finish());
  return out;
}

}  // namespace sata
