#include <algorithm>

#include <gtest/gtest.h>

#include "sata/encoder.hpp"
#include "sata/verify.hpp"

using namespace sata;

namespace {

const treebank::ClusterMap& clusters() {
  static const treebank::ClusterMap map = treebank::ClusterMap::default_map();
  return map;
}

EncoderParams make_encoder(LeafMode leaf, TagMode tag, std::uint64_t seed = 3) {
  EncoderConfig cfg;
  cfg.d_w = 5;
  cfg.d_h = 4;
  cfg.d_t = 3;
  cfg.leaf_mode = leaf;
  cfg.tag_mode = tag;
  cfg.train_word_embeddings = true;
  Rng rng(seed);
  return EncoderParams::make(cfg, WordVocab::from_tokens(verify::words()), rng);
}

constexpr LeafMode kLeafModes[] = {LeafMode::lstm, LeafMode::bilstm, LeafMode::fc};
constexpr TagMode kTagModes[] = {TagMode::structure_aware, TagMode::naive, TagMode::none};

}  // namespace

// Hand-unrolled evaluation of (S (NP the cat) sat) from individual cell calls.
TEST(Encoder, ThreeLeafTreeMatchesExplicitCellCalls) {
  EncoderParams p = make_encoder(LeafMode::lstm, TagMode::structure_aware);
  const treebank::Sentence s = treebank::sentence_from_sexpr("(S (NP (DT the) (NN cat)) (VBD sat))", clusters());
  ASSERT_EQ(s.tree.size(), 5u);

  Tape t;
  auto word = [&](const char* w) { return t.row(p.word_embedding, p.vocab.id(w)); };
  auto tag = [&](std::size_t node) { return t.row(*p.tag_embedding, s.tree.node(node).cluster); };
  const CellState l0 = leaf_lstm_step(zero_state(t, 4), word("the"), *p.leaf_lstm);
  const CellState l1 = leaf_lstm_step(l0, word("cat"), *p.leaf_lstm);
  const CellState l2 = leaf_lstm_step(l1, word("sat"), *p.leaf_lstm);
  const CellState t0 = tag_leaf_step(tag(0), *p.tag_cell);
  const CellState t1 = tag_leaf_step(tag(1), *p.tag_cell);
  const CellState t3 = tag_leaf_step(tag(3), *p.tag_cell);
  const CellState t2 = tag_internal_step(t0, t1, tag(2), *p.tag_cell);
  const CellState t4 = tag_internal_step(t2, t3, tag(4), *p.tag_cell);
  const CellState np = sata_compose(l0, l1, t2.h, p.word_cell).state;
  const CellState root = sata_compose(np, l2, t4.h, p.word_cell).state;

  const EncodeResult r = encode_sentence(t, s, p);
  EXPECT_EQ(r.root.h.value(), root.h.value());
  EXPECT_EQ(r.root.c.value(), root.c.value());
  EXPECT_EQ(r.nodes[2].word.h.value(), np.h.value());
  EXPECT_EQ(r.nodes[3].word.h.value(), l2.h.value());
  EXPECT_EQ(r.nodes[4].tag->h.value(), t4.h.value());
  EXPECT_EQ(r.nodes[4].tag_input->value(), t4.h.value());
}

TEST(Encoder, NaiveModeFeedsRawTagEmbedding) {
  EncoderParams p = make_encoder(LeafMode::lstm, TagMode::naive);
  const treebank::Sentence s = treebank::sentence_from_sexpr("(NP (DT a) (NN mat))", clusters());
  Tape t;
  const EncodeResult r = encode_sentence(t, s, p);
  EXPECT_FALSE(r.nodes[2].tag.has_value());
  EXPECT_EQ(r.nodes[2].tag_input->value(), t.row(*p.tag_embedding, s.tree.root().cluster).value());
}

TEST(Encoder, NoTagModeHasNoTagParameters) {
  EncoderParams p = make_encoder(LeafMode::fc, TagMode::none);
  EXPECT_FALSE(p.tag_embedding.has_value());
  EXPECT_FALSE(p.tag_cell.has_value());
  EXPECT_EQ(p.word_cell.W.value.shape(), (Shape{16, 8}));
  const treebank::Sentence s = treebank::sentence_from_sexpr("(NP (DT a) (NN mat))", clusters());
  Tape t;
  EXPECT_FALSE(encode_sentence(t, s, p).nodes[2].tag_input.has_value());
}

TEST(Encoder, FcLeafSplitsCellThenHidden) {
  EncoderParams p = make_encoder(LeafMode::fc, TagMode::none);
  const treebank::Sentence s = treebank::sentence_from_sexpr("(NN cat)", clusters());
  Tape t;
  Var y = tanh(add(matmul(t.param(p.leaf_fc->W), t.row(p.word_embedding, p.vocab.id("cat"))), t.param(p.leaf_fc->b)));
  const EncodeResult r = encode_sentence(t, s, p);
  EXPECT_EQ(r.root.c.value(), slice(y, 0, 4).value());
  EXPECT_EQ(r.root.h.value(), slice(y, 4, 8).value());
}

TEST(Encoder, OneTokenSentenceRootIsLeafState) {
  for (LeafMode leaf : kLeafModes) {
    EncoderParams p = make_encoder(leaf, TagMode::structure_aware);
    const treebank::Sentence s = treebank::sentence_from_sexpr("(NN cat)", clusters());
    Tape t;
    const EncodeResult r = encode_sentence(t, s, p);
    const std::vector<CellState> leaves = leaf_states(t, s, p, {});
    ASSERT_EQ(r.nodes.size(), 1u);
    EXPECT_EQ(r.root.h.value(), leaves[0].h.value());
    const SpinnResult sr = spinn_encode(t, s, treebank::to_transitions(s.tree), p);
    EXPECT_EQ(sr.root.h.value(), r.root.h.value());
  }
}

TEST(Encoder, TokenCountMismatchIsStructuralError) {
  EncoderParams p = make_encoder(LeafMode::lstm, TagMode::structure_aware);
  treebank::Sentence s = treebank::sentence_from_sexpr("(NP (DT a) (NN mat))", clusters());
  s.tokens.push_back("extra");
  Tape t;
  EXPECT_THROW(encode_sentence(t, s, p), StructuralError);
  EXPECT_THROW(spinn_encode(t, s, treebank::to_transitions(s.tree), p), StructuralError);
  treebank::Sentence empty;
  EXPECT_THROW(leaf_states(t, empty, p, {}), DimensionError);
}

TEST(Encoder, SpinnMatchesRecursionExactlyInEveryMode) {
  Rng rng(21);
  for (LeafMode leaf : kLeafModes) {
    for (TagMode tag : kTagModes) {
      EncoderParams p = make_encoder(leaf, tag, 17);
      std::vector<treebank::Sentence> batch;
      std::vector<treebank::TransitionSequence> seqs;
      for (std::size_t k = 0; k < 5; ++k) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 9)(rng);
        batch.push_back(verify::random_sentence(n, rng, clusters()));
        seqs.push_back(treebank::to_transitions(batch.back().tree));
      }
      Tape t;
      const std::vector<SpinnResult> lockstep = spinn_encode_batch(t, batch, seqs, p);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const EncodeResult r = encode_sentence(t, batch[b], p);
        const SpinnResult single = spinn_encode(t, batch[b], seqs[b], p);
        ASSERT_EQ(single.states.size(), r.nodes.size());
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
          EXPECT_EQ(verify::max_state_dev(r.nodes[i].word, single.states[i]), 0.0) << to_string(leaf) << to_string(tag);
          EXPECT_EQ(verify::max_state_dev(r.nodes[i].word, lockstep[b].states[i]), 0.0);
        }
      }
    }
  }
}

TEST(Encoder, TagStatesIgnoreTheWords) {
  EncoderParams p = make_encoder(LeafMode::lstm, TagMode::structure_aware);
  Rng rng(5);
  for (int k = 0; k < 10; ++k) {
    const treebank::Sentence s = verify::random_sentence(6, rng, clusters());
    std::vector<treebank::BinaryNode> nodes = s.tree.nodes();
    for (auto& n : nodes)
      if (n.is_leaf()) n.token = verify::pick(verify::words(), rng);
    const treebank::BinaryTree other(nodes);
    Tape t;
    const auto a = encode_tags(t, s.tree, p);
    const auto b = encode_tags(t, other, p);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(verify::max_state_dev(a[i], b[i]), 0.0);
  }
  EncoderParams naive = make_encoder(LeafMode::lstm, TagMode::naive);
  Tape t;
  EXPECT_THROW(encode_tags(t, verify::random_sentence(2, rng, clusters()).tree, naive), std::logic_error);
}

TEST(Encoder, BatchRejectsMismatchedSizes) {
  EncoderParams p = make_encoder(LeafMode::lstm, TagMode::none);
  Rng rng(1);
  std::vector<treebank::Sentence> batch{verify::random_sentence(3, rng, clusters())};
  std::vector<treebank::TransitionSequence> seqs;
  Tape t;
  EXPECT_THROW(spinn_encode_batch(t, batch, seqs, p), DimensionError);
  seqs.push_back(treebank::to_transitions(verify::random_sentence(4, rng, clusters()).tree));
  EXPECT_THROW(spinn_encode_batch(t, batch, seqs, p), StructuralError);
}

TEST(Encoder, ModeNamesRoundTrip) {
  for (LeafMode m : kLeafModes) EXPECT_EQ(parse_leaf_mode(to_string(m)), m);
  for (TagMode m : kTagModes) EXPECT_EQ(parse_tag_mode(to_string(m)), m);
  EXPECT_THROW(parse_leaf_mode("gru"), ConfigError);
  EXPECT_THROW(parse_tag_mode("full"), ConfigError);
}
