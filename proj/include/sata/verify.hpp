#pragma once

// Random trees and the self-check suites behind `gradcheck` and `equiv`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sata/cells.hpp"
#include "sata/core/gradcheck.hpp"
#include "sata/core/ops.hpp"
#include "sata/encoder.hpp"
#include "sata/heads.hpp"
#include "sata/model.hpp"
#include "sata/treebank/binary_tree.hpp"
#include "sata/treebank/example.hpp"
#include "sata/treebank/transitions.hpp"

namespace sata::verify {

inline const std::vector<std::string>& word_tags() {
  static const std::vector<std::string> tags = {"NN", "NNS", "NNP", "VB",  "VBD", "VBZ", "JJ", "RB", "DT", "IN",
                                                "CC", "PRP", "CD",  "RP",  ".",   ",",   "FW", "UH", "MD", "WDT"};
  return tags;
}

inline const std::vector<std::string>& phrase_tags() {
  static const std::vector<std::string> tags = {"S",   "NP",   "VP", "PP",  "ADJP", "ADVP", "SBAR",
                                                "QP",  "PRN",  "FRAG", "UCP", "WHNP", "SQ", "NP-SBJ"};
  return tags;
}

inline const std::vector<std::string>& words() {
  static const std::vector<std::string> w = {"the", "cat", "sat", "on",   "a",    "mat", "film", "was",
                                             "not", "very", "good", "bad", "and", "it",  "runs", "fast"};
  return w;
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

// Random binary parse with n leaves (random split points).
inline treebank::ParseTree random_binary_parse(std::size_t n, Rng& rng) {
  if (n == 1) return treebank::ParseTree::leaf(pick(word_tags(), rng), pick(words(), rng));
  const std::size_t split = std::uniform_int_distribution<std::size_t>(1, n - 1)(rng);
  return treebank::ParseTree::node(pick(phrase_tags(), rng),
                                   {random_binary_parse(split, rng), random_binary_parse(n - split, rng)});
}

// Random n-ary parse with up to max_leaves leaves, arity up to 4 and
// occasional unary chains.
inline treebank::ParseTree random_nary_parse(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (n == 1) {
    treebank::ParseTree leaf = treebank::ParseTree::leaf(pick(word_tags(), rng), pick(words(), rng));
    if (u(rng) < 0.15) return treebank::ParseTree::node(pick(phrase_tags(), rng), {leaf});
    return leaf;
  }
  if (u(rng) < 0.1) return treebank::ParseTree::node(pick(phrase_tags(), rng), {random_nary_parse(n, rng)});
  const std::size_t arity = std::uniform_int_distribution<std::size_t>(2, std::min<std::size_t>(4, n))(rng);
  std::vector<std::size_t> sizes(arity, 1);
  for (std::size_t extra = n - arity; extra > 0; --extra) sizes[std::uniform_int_distribution<std::size_t>(0, arity - 1)(rng)]++;
  std::vector<treebank::ParseTree> children;
  for (std::size_t s : sizes) children.push_back(random_nary_parse(s, rng));
  return treebank::ParseTree::node(pick(phrase_tags(), rng), std::move(children));
}

inline treebank::Sentence random_sentence(std::size_t n, Rng& rng,
                                          const treebank::ClusterMap& map = treebank::ClusterMap::default_map()) {
  return treebank::Sentence::from_tree(treebank::BinaryTree::from_parse(random_binary_parse(n, rng), map));
}

// sum(x * r) for a fixed random r, used to reduce a vector to a scalar loss.
inline Var random_projection(Var x, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor r(x.shape());
  for (double& v : r.data()) v = g(rng);
  return sum(mask(x, r));
}

inline Var state_loss(const CellState& s, std::uint64_t seed) {
  return add(random_projection(s.h, seed), random_projection(s.c, seed + 1));
}

struct GradCase {
  std::string name;
  GradCheckResult result;
};

struct GradSuite {
  std::vector<GradCase> cases;
  double max_rel_err = 0.0;
  bool passed(double tol = 1e-4) const { return max_rel_err <= tol; }
};

namespace detail {

inline Parameter random_input(const std::string& name, std::size_t n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor t({n});
  for (double& v : t.data()) v = g(rng);
  return Parameter(name, t);
}

inline std::vector<Parameter*> all_params(SataModel& m) {
  std::vector<Parameter*> out;
  for (Parameter* p : m.parameters())
    if (p->trainable) out.push_back(p);
  return out;
}

inline ModelConfig tiny_config(LeafMode leaf, TagMode tag, Task task) {
  ModelConfig c;
  c.encoder.d_w = 4;
  c.encoder.d_h = 3;
  c.encoder.d_t = 2;
  c.encoder.leaf_mode = leaf;
  c.encoder.tag_mode = tag;
  c.encoder.train_word_embeddings = true;
  c.head.task = task;
  c.head.d_s = 4;
  c.head.num_classes = 3;
  c.head.batch_norm = false;
  return c;
}

inline WordVocab tiny_vocab() { return WordVocab::from_tokens(words()); }

}  // namespace detail

// Finite-difference checks of every cell, the encoder on a 3-leaf tree in all
// nine configurations, the classifier and the pair head.
inline GradSuite gradient_suite(std::uint64_t seed = 7, double eps = 1e-5) {
  GradSuite suite;
  Rng rng(seed);
  auto record = [&](std::string name, const GradCheckResult& r) {
    suite.max_rel_err = std::max(suite.max_rel_err, r.max_rel_err);
    suite.cases.push_back(GradCase{std::move(name), r});
  };
  const std::size_t d = 3, dw = 4, dt = 2;
  const std::uint64_t proj = rng();

  {
    PlainTreeCellParams p = PlainTreeCellParams::make(d, rng);
    Parameter hl = detail::random_input("h_l", d, rng), cl = detail::random_input("c_l", d, rng);
    Parameter hr = detail::random_input("h_r", d, rng), cr = detail::random_input("c_r", d, rng);
    LossFn f = [&](Tape& t) {
      return state_loss(tree_lstm_step({t.param(hl), t.param(cl)}, {t.param(hr), t.param(cr)}, p), proj);
    };
    record("tree_lstm_step", grad_check(f, {&p.W, &p.b, &hl, &cl, &hr, &cr}, eps));
  }
  {
    TagTreeCellParams p = TagTreeCellParams::make(dt, rng);
    Parameter e = detail::random_input("e", dt, rng);
    LossFn f = [&](Tape& t) { return state_loss(tag_leaf_step(t.param(e), p), proj); };
    record("tag_leaf_step", grad_check(f, {&p.U, &p.a, &e}, eps));
  }
  {
    TagTreeCellParams p = TagTreeCellParams::make(dt, rng);
    Parameter e = detail::random_input("e", dt, rng);
    Parameter hl = detail::random_input("h_l", dt, rng), cl = detail::random_input("c_l", dt, rng);
    Parameter hr = detail::random_input("h_r", dt, rng), cr = detail::random_input("c_r", dt, rng);
    LossFn f = [&](Tape& t) {
      return state_loss(tag_internal_step({t.param(hl), t.param(cl)}, {t.param(hr), t.param(cr)}, t.param(e), p),
                        proj);
    };
    record("tag_internal_step", grad_check(f, {&p.W, &p.b, &e, &hl, &cl, &hr, &cr}, eps));
  }
  {
    LeafLstmParams p = LeafLstmParams::make(d, dw, rng);
    Parameter x = detail::random_input("x", dw, rng);
    Parameter h = detail::random_input("h_prev", d, rng), c = detail::random_input("c_prev", d, rng);
    LossFn f = [&](Tape& t) { return state_loss(leaf_lstm_step({t.param(h), t.param(c)}, t.param(x), p), proj); };
    record("leaf_lstm_step", grad_check(f, {&p.W, &p.b, &x, &h, &c}, eps));
  }
  for (std::size_t width : {dt, std::size_t{0}}) {
    WordTreeCellParams p = WordTreeCellParams::make(d, width, rng);
    Parameter tag = detail::random_input("tag", std::max<std::size_t>(width, 1), rng);
    Parameter hl = detail::random_input("h_l", d, rng), cl = detail::random_input("c_l", d, rng);
    Parameter hr = detail::random_input("h_r", d, rng), cr = detail::random_input("c_r", d, rng);
    LossFn f = [&](Tape& t) {
      std::optional<Var> tv;
      if (width > 0) tv = t.param(tag);
      ComposeResult r = sata_compose({t.param(hl), t.param(cl)}, {t.param(hr), t.param(cr)}, tv, p);
      return add(state_loss(r.state, proj), random_projection(r.candidate, proj + 2));
    };
    std::vector<Parameter*> ps = {&p.U, &p.a, &p.W, &p.b, &hl, &cl, &hr, &cr};
    if (width > 0) ps.push_back(&tag);
    record(width > 0 ? "sata_compose" : "sata_compose/no_tag", grad_check(f, ps, eps));
  }

  const treebank::ClusterMap map = treebank::ClusterMap::default_map();
  const treebank::Sentence three = random_sentence(3, rng, map);
  for (LeafMode leaf : {LeafMode::lstm, LeafMode::bilstm, LeafMode::fc}) {
    for (TagMode tag : {TagMode::structure_aware, TagMode::naive, TagMode::none}) {
      SataModel m =
          SataModel::create(detail::tiny_config(leaf, tag, Task::classification), detail::tiny_vocab(), map, rng());
      LossFn f = [&](Tape& t) { return state_loss(encode_sentence(t, three, m.encoder).root, proj); };
      std::vector<Parameter*> ps = m.encoder.parameters();
      record(std::string("encoder/") + to_string(leaf) + "/" + to_string(tag), grad_check(f, ps, eps));
    }
  }

  for (bool bn : {false, true}) {
    ModelConfig cfg = detail::tiny_config(LeafMode::lstm, TagMode::structure_aware, Task::classification);
    cfg.head.batch_norm = bn;
    SataModel m = SataModel::create(cfg, detail::tiny_vocab(), map, rng());
    std::vector<treebank::Sentence> batch = {three, random_sentence(2, rng, map), random_sentence(4, rng, map)};
    LossFn f = [&](Tape& t) {
      std::vector<Var> roots;
      for (const auto& s : batch) roots.push_back(encode_sentence(t, s, m.encoder).root.h);
      Rng unused(0);
      std::vector<Var> logits = classifier_logits(roots, m.classifier, ForwardMode::training(unused));
      std::vector<Var> losses;
      for (std::size_t k = 0; k < logits.size(); ++k) losses.push_back(cross_entropy(logits[k], k % 3));
      return add(mean_loss(losses), random_projection(softmax(logits[0]), proj + 2));
    };
    record(bn ? "classify/batch_norm" : "classify", grad_check(f, detail::all_params(m), eps));
  }

  {
    SataModel m = SataModel::create(detail::tiny_config(LeafMode::lstm, TagMode::structure_aware, Task::nli),
                                    detail::tiny_vocab(), map, rng());
    const treebank::Sentence hyp = random_sentence(2, rng, map);
    LossFn f = [&](Tape& t) {
      Var x = snli_features(encode_sentence(t, three, m.encoder).root.h, encode_sentence(t, hyp, m.encoder).root.h);
      return cross_entropy(classifier_logits(x, m.classifier), 1);
    };
    record("snli_features+cross_entropy", grad_check(f, detail::all_params(m), eps));
  }
  return suite;
}

struct EquivalenceReport {
  std::size_t trees = 0;
  std::size_t nodes = 0;
  double max_dev = 0.0;
};

inline double max_state_dev(const CellState& a, const CellState& b) {
  return std::max(max_abs_diff(a.h.value(), b.h.value()), max_abs_diff(a.c.value(), b.c.value()));
}

// Shift-reduce execution against recursive evaluation on random trees and
// random parameters, cycling through the nine encoder configurations. Every
// fourth tree is also run in a lock-step batch with its three predecessors.
inline EquivalenceReport equivalence_suite(std::size_t trees = 100, std::uint64_t seed = 11, std::size_t max_leaves = 12) {
  EquivalenceReport rep;
  Rng rng(seed);
  const treebank::ClusterMap map = treebank::ClusterMap::default_map();
  const LeafMode leaves[] = {LeafMode::lstm, LeafMode::bilstm, LeafMode::fc};
  const TagMode tags[] = {TagMode::structure_aware, TagMode::naive, TagMode::none};
  std::vector<treebank::Sentence> group;
  for (std::size_t k = 0; k < trees; ++k) {
    ModelConfig cfg = detail::tiny_config(leaves[(k / 3) % 3], tags[k % 3], Task::classification);
    cfg.encoder.d_h = 4;
    cfg.encoder.d_w = 5;
    cfg.encoder.d_t = 3;
    SataModel m = SataModel::create(cfg, detail::tiny_vocab(), map, rng());
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_leaves)(rng);
    const treebank::Sentence s = random_sentence(n, rng, map);
    group.push_back(s);

    Tape tape;
    const EncodeResult rec = encode_sentence(tape, s, m.encoder);
    const SpinnResult sr = spinn_encode(tape, s, treebank::to_transitions(s.tree), m.encoder);
    if (sr.states.size() != rec.nodes.size()) throw StructuralError("SPINN produced a different number of states");
    for (std::size_t i = 0; i < rec.nodes.size(); ++i) rep.max_dev = std::max(rep.max_dev, max_state_dev(rec.nodes[i].word, sr.states[i]));
    rep.max_dev = std::max(rep.max_dev, max_state_dev(rec.root, sr.root));
    rep.nodes += rec.nodes.size();
    ++rep.trees;

    if (group.size() == 4) {
      std::vector<treebank::TransitionSequence> seqs;
      for (const auto& g : group) seqs.push_back(treebank::to_transitions(g.tree));
      const std::vector<SpinnResult> batch = spinn_encode_batch(tape, group, seqs, m.encoder);
      for (std::size_t b = 0; b < group.size(); ++b) {
        const EncodeResult r = encode_sentence(tape, group[b], m.encoder);
        for (std::size_t i = 0; i < r.nodes.size(); ++i)
          rep.max_dev = std::max(rep.max_dev, max_state_dev(r.nodes[i].word, batch[b].states[i]));
      }
      group.clear();
    }
  }
  return rep;
}

}  // namespace sata::verify
