#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "sata/treebank/binary_tree.hpp"
#include "sata/treebank/cluster_map.hpp"
#include "sata/treebank/example.hpp"
#include "sata/treebank/parse_tree.hpp"
#include "sata/treebank/transitions.hpp"
#include "sata/verify.hpp"

using namespace sata;
using namespace sata::treebank;

namespace {

std::size_t parse_error_offset(const std::string& text) {
  try {
    parse_sexpr(text);
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no ParseError for: " << text;
  return 0;
}

const ClusterMap& clusters() {
  static const ClusterMap map = ClusterMap::default_map();
  return map;
}

}  // namespace

TEST(Parse, ReadsPtbTreeWithWrapperAndEscapes) {
  const ParseTree t = parse_sexpr("( (S (NP (NNP John)) (VP (VBD left) (-LRB- -LRB-))) )");
  EXPECT_EQ(t.tag, "S");
  EXPECT_EQ(leaf_tokens(t), (std::vector<std::string>{"John", "left", "("}));
  EXPECT_EQ(to_sexpr(t), "(S (NP (NNP John)) (VP (VBD left) (-LRB- -LRB-)))");
}

TEST(Parse, WhitespaceInsensitive) {
  EXPECT_EQ(parse_sexpr("(S\n  (NP (DT a))\t(VP (VB b)))"), parse_sexpr("(S (NP (DT a)) (VP (VB b)))"));
}

TEST(Parse, ErrorsCarryOffsets) {
  EXPECT_EQ(parse_error_offset(""), 0u);
  EXPECT_EQ(parse_error_offset("   "), 3u);
  EXPECT_EQ(parse_error_offset("(S (NP (DT a))"), 14u);       // unbalanced: end of input
  EXPECT_EQ(parse_error_offset("(S (NP (DT a))))"), 15u);     // trailing ')'
  EXPECT_EQ(parse_error_offset("(S ()"), 3u);                 // empty node
  EXPECT_EQ(parse_error_offset("(S (NP))"), 3u);              // node without children
  EXPECT_EQ(parse_error_offset("(S (DT a b))"), 9u);          // two tokens in a leaf
  EXPECT_EQ(parse_error_offset("(S word (NP (DT a)))"), 8u);  // token followed by children
  EXPECT_EQ(parse_error_offset("(S (NP (DT a)) word)"), 15u);  // bare token in phrase
  EXPECT_EQ(parse_error_offset("(S ((DT a)))"), 3u);          // inner untagged node
}

TEST(Binarize, LeftBinarizesWithIntermediateTags) {
  const ParseTree t = binarize(parse_sexpr("(S (NP (DT a)) (VP (VB b)) (. .))"));
  EXPECT_EQ(to_sexpr(t), "(S (S@ (DT a) (VB b)) (. .))");
}

TEST(Binarize, UnaryChainKeepsTopTagOrPreterminal) {
  EXPECT_EQ(to_sexpr(binarize(parse_sexpr("(ROOT (S (NP (DT a)) (VP (VB b))))"))), "(ROOT (DT a) (VB b))");
  EXPECT_EQ(to_sexpr(binarize(parse_sexpr("(NP (NN dog))"))), "(NN dog)");
  EXPECT_EQ(to_sexpr(binarize(parse_sexpr("(X (A (B c) (D e) (F g) (H i)))"))), "(X (X@ (X@ (B c) (D e)) (F g)) (H i))");
}

TEST(Binarize, AlreadyIntermediateTagIsNotDoubled) { EXPECT_EQ(intermediate_tag("NP@"), "NP@"); }

TEST(ClusterMap, DefaultMapCoversUniversalGroups) {
  const ClusterMap& m = clusters();
  EXPECT_EQ(m.cluster("NN", TagPosition::word), 0u);
  EXPECT_EQ(m.cluster("VBZ", TagPosition::word), 1u);
  EXPECT_EQ(m.cluster("JJ", TagPosition::word), 2u);
  EXPECT_EQ(m.cluster(".", TagPosition::word), 10u);
  EXPECT_EQ(m.cluster("NOT-A-TAG", TagPosition::word), ClusterMap::word_fallback());
  EXPECT_EQ(m.cluster("NP", TagPosition::phrase), 13u);
  EXPECT_EQ(m.cluster("NP-SBJ-1", TagPosition::phrase), 13u);
  EXPECT_EQ(m.cluster("NP@", TagPosition::phrase), 13u);
  EXPECT_EQ(m.cluster("ROOT", TagPosition::phrase), 12u);
  EXPECT_EQ(m.cluster("WEIRD", TagPosition::phrase), ClusterMap::phrase_fallback());
}

TEST(ClusterMap, TextRoundTripAndShippedFileMatch) {
  const ClusterMap& m = clusters();
  EXPECT_EQ(ClusterMap::parse(m.to_text()), m);
  EXPECT_EQ(ClusterMap::load(SATA_SOURCE_DIR "/data/cluster_map.tsv"), m);
}

TEST(ClusterMap, MalformedLinesReportLineNumbers) {
  try {
    ClusterMap::parse("[word]\nNN\tNOUN\nVB VERB\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(ClusterMap::parse("[word]\nNN\tNOUNISH\n"), FormatError);
  EXPECT_THROW(ClusterMap::parse("NN\tNOUN\n"), FormatError);
}

TEST(BinaryTree, PostOrderLayoutAndSpans) {
  const BinaryTree t = BinaryTree::from_parse(parse_sexpr("(S (NP (DT the) (NN cat)) (VBZ sits))"), clusters());
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t.leaf_count(), 3u);
  EXPECT_EQ(t.node(2).tag, "NP");
  EXPECT_EQ(t.node(2).left, 0);
  EXPECT_EQ(t.node(2).right, 1);
  EXPECT_EQ(t.root().tag, "S");
  EXPECT_EQ(t.root().begin, 0u);
  EXPECT_EQ(t.root().end, 3u);
  EXPECT_EQ(t.tokens(), (std::vector<std::string>{"the", "cat", "sits"}));
  EXPECT_EQ(BinaryTree::from_parse(t.to_parse(), clusters()), t);
}

TEST(BinaryTree, RejectsNonBinaryAndBadNodeArrays) {
  EXPECT_THROW(BinaryTree::from_parse(parse_sexpr("(S (A a) (B b) (C c))"), clusters()), StructuralError);
  std::vector<BinaryNode> nodes(2);
  EXPECT_THROW(BinaryTree{nodes}, StructuralError);
}

TEST(Transitions, ThreeLeafProgram) {
  const BinaryTree t = BinaryTree::from_parse(parse_sexpr("(S (NP (DT the) (NN cat)) (VBZ sits))"), clusters());
  const TransitionSequence seq = to_transitions(t);
  std::vector<Op> ops;
  for (const auto& tr : seq) ops.push_back(tr.op);
  EXPECT_EQ(ops, (std::vector<Op>{Op::shift, Op::shift, Op::reduce, Op::shift, Op::reduce}));
  EXPECT_EQ(seq[3].token, 2);
  EXPECT_EQ(seq[2].tag, "NP");
}

TEST(Transitions, ValidationRejectsBadPrograms) {
  using T = Transition;
  EXPECT_THROW(validate_transitions({T::shift(0, 0, "A"), T::reduce(12, "S")}), StructuralError);  // underflow
  EXPECT_THROW(validate_transitions({T::shift(0, 0, "A"), T::shift(0, 0, "B"), T::reduce(12, "S")}),
               StructuralError);  // token out of order
  EXPECT_THROW(validate_transitions({T::shift(0, 0, "A"), T::shift(1, 0, "B")}), StructuralError);  // depth 2
  EXPECT_THROW(validate_transitions({T::shift(0, 0, "A"), T::noop(), T::shift(1, 0, "B"), T::reduce(12, "S")}),
               StructuralError);  // NOOP before the end
  EXPECT_EQ(validate_transitions({T::shift(0, 0, "A"), T::shift(1, 0, "B"), T::reduce(12, "S"), T::noop()}), 2u);
}

// Properties over random trees: binarize is idempotent and keeps leaf order;
// transition programs satisfy the prefix rule and round-trip exactly.
TEST(TreebankProperties, ThousandRandomTrees) {
  Rng rng(2024);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
    const ParseTree raw = verify::random_nary_parse(n, rng);
    const ParseTree bin = binarize(raw);
    ASSERT_TRUE(is_binary(bin));
    ASSERT_EQ(binarize(bin), bin);
    ASSERT_EQ(leaf_tokens(bin), leaf_tokens(raw));
    const BinaryTree tree = BinaryTree::from_parse(bin, clusters());
    ASSERT_EQ(tree.size(), 2 * n - 1);
    const TransitionSequence seq = to_transitions(tree);
    int depth = 0, shifts = 0;
    for (const Transition& t : seq) {
      depth += t.op == Op::shift ? 1 : -1;
      shifts += t.op == Op::shift;
      ASSERT_GE(depth, 1);
      ASSERT_LE(shifts * 2 - 1, static_cast<int>(seq.size()));
    }
    ASSERT_EQ(depth, 1);
    ASSERT_EQ(validate_transitions(seq), n);
    ASSERT_EQ(from_transitions(seq, tree.tokens()), tree);
  }
}

TEST(Sst, MergeAttachesNodeLabelsAndSst2DropsNeutral) {
  const BinaryTree parse = BinaryTree::from_parse(parse_sexpr("(S (NP (DT a) (NN film)) (VBZ shines))"), clusters());
  auto ex = merge_sst_labels("(4 (2 (2 a) (2 film)) (4 shines))", parse, LabelScheme::sst5);
  ASSERT_TRUE(ex);
  EXPECT_EQ(ex->label, 4);
  EXPECT_EQ(ex->node_labels, (std::vector<int>{2, 2, 2, 4, 4}));
  auto ex2 = merge_sst_labels("(4 (2 (2 a) (2 film)) (4 shines))", parse, LabelScheme::sst2);
  EXPECT_EQ(ex2->label, 1);
  EXPECT_EQ(ex2->node_labels, (std::vector<int>{-1, -1, -1, 1, 1}));
  EXPECT_FALSE(merge_sst_labels("(2 (2 (2 a) (2 film)) (2 shines))", parse, LabelScheme::sst2));
  EXPECT_THROW(merge_sst_labels("(7 (2 a) (2 film))", parse, LabelScheme::sst5), ParseError);
}

TEST(Interchange, LineErrorsNameTheLine) {
  const std::string good = R"j({"label":1,"sexpr":"(S (DT a) (NN b))","tokens":["a","b"]})j";
  const std::string bad_tokens = R"j({"label":1,"sexpr":"(S (DT a) (NN b))","tokens":["a","c"]})j";
  const std::string not_binary = R"j({"label":1,"sexpr":"(S (DT a) (NN b) (NN c))"})j";
  const std::string bad_labels = R"j({"label":1,"sexpr":"(S (DT a) (NN b))","node_labels":[1]})j";
  for (const std::string& bad : {bad_tokens, not_binary, bad_labels, std::string("{not json")}) {
    try {
      parse_dataset(good + "\n" + bad + "\n", clusters());
      FAIL() << bad;
    } catch (const FormatError& e) {
      EXPECT_EQ(e.line(), 2u) << e.what();
    }
  }
  std::vector<std::string> warnings;
  parse_dataset(R"j({"label":0,"sexpr":"(NN a)","extra":3})j", clusters(), &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("extra"), std::string::npos);
}

TEST(Interchange, RandomExamplesRoundTripExactly) {
  Rng rng(77);
  Dataset data;
  for (int k = 0; k < 100; ++k) {
    Example ex;
    ex.sentence = verify::random_sentence(std::uniform_int_distribution<std::size_t>(1, 12)(rng), rng);
    ex.label = static_cast<int>(rng() % 5);
    if (k % 2 == 0)
      for (std::size_t i = 0; i < ex.sentence.tree.size(); ++i) ex.node_labels.push_back(static_cast<int>(rng() % 6) - 1);
    if (k % 3 == 0) ex.hypothesis = verify::random_sentence(3, rng);
    data.examples.push_back(ex);
  }
  const std::string text = serialize_dataset(data);
  const Dataset back = parse_dataset(text, clusters());
  EXPECT_EQ(back, data);
  EXPECT_EQ(serialize_dataset(back), text);
}
