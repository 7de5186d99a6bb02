#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "sata/cli.hpp"

using namespace sata;
using namespace sata::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sata_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) const {
    const std::string p = (dir_ / name).string();
    std::ofstream(p) << text;
    return p;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small run config writing into the temp dir; extra JSON merged on top.
  std::string tiny_config(const std::string& train, const std::string& out_dir, const nlohmann::json& extra = {}) const {
    nlohmann::json j = {
        {"encoder", {{"d_w", 4}, {"d_h", 3}, {"d_t", 2}}},
        {"head", {{"d_s", 4}, {"num_classes", 2}}},
        {"train", {{"epochs", 2}, {"batch_size", 4}, {"lr", 0.01}}},
        {"paths", {{"train", train}, {"out_dir", out_dir}}},
    };
    if (extra.is_object()) j.merge_patch(extra);
    return write("config.json", j.dump());
  }

  fs::path dir_;
};

const char* kParses =
    "(S (NP (DT the) (NN film)) (VP (VBD was) (JJ good)))\n"
    "(S (NP (DT the) (NN plot)) (VP (VBD was) (JJ bad)))\n"
    "(S (NP (PRP it)) (VP (VBZ runs)))\n";

}  // namespace

TEST_F(CliTest, ConvertLabelsFormat) {
  ConvertOptions o{write("p.txt", kParses), write("l.txt", "pos\nneg\npos\n"), "labels", path("out.jsonl"), ""};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_convert(o, out, err), 0) << err.str();
  EXPECT_NE(out.str().find("records: 3"), std::string::npos);
  EXPECT_NE(out.str().find("dropped: 0"), std::string::npos);
  const treebank::Dataset d = treebank::load_dataset(o.out, treebank::ClusterMap::default_map());
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.examples[0].label, d.examples[2].label);
  EXPECT_NE(d.examples[0].label, d.examples[1].label);
  EXPECT_EQ(d.examples[2].sentence.tokens, (std::vector<std::string>{"it", "runs"}));
}

TEST_F(CliTest, ConvertSst2DropsNeutralRoots) {
  const std::string sst =
      "(4 (2 (2 the) (2 film)) (4 (2 was) (4 good)))\n"
      "(2 (2 (2 the) (2 plot)) (2 (2 was) (1 bad)))\n"
      "(1 (2 it) (1 runs))\n";
  ConvertOptions o{write("p.txt", kParses), write("l.txt", sst), "sst2", path("out.jsonl"), ""};
  std::ostringstream out, err;
  ASSERT_EQ(cmd_convert(o, out, err), 0) << err.str();
  EXPECT_NE(out.str().find("records: 2"), std::string::npos);
  EXPECT_NE(out.str().find("dropped: 1"), std::string::npos);
  const treebank::Dataset d = treebank::load_dataset(o.out, treebank::ClusterMap::default_map());
  EXPECT_EQ(d.examples[0].label, 1);
  EXPECT_EQ(d.examples[1].label, 0);
  EXPECT_EQ(d.examples[0].node_labels.size(), 7u);
  EXPECT_EQ(d.examples[0].node_labels[0], -1);  // neutral phrase "the"
}

TEST_F(CliTest, ConvertLineCountMismatchWritesNothing) {
  ConvertOptions o{write("p.txt", kParses), write("l.txt", "pos\nneg\n"), "labels", path("out.jsonl"), ""};
  std::ostringstream out, err;
  EXPECT_EQ(cmd_convert(o, out, err), 1);
  EXPECT_NE(err.str().find("mismatch"), std::string::npos);
  EXPECT_FALSE(fs::exists(o.out));
}

TEST_F(CliTest, ConvertBadParseReportsItsLine) {
  ConvertOptions o{write("p.txt", "(NN a)\n(NP (DT a)\n"), write("l.txt", "0\n1\n"), "labels", path("out.jsonl"), ""};
  try {
    convert(o);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST_F(CliTest, ConvertSnliPairsDropsDash) {
  const std::string pairs = std::string("(NP (DT a) (NN cat))\t(NN cat)\n") + "(NN dog)\t(NN cat)\n" + "(NN dog)\t(NN dog)\n";
  ConvertOptions o{write("p.txt", pairs), write("l.txt", "entailment\n-\ncontradiction\n"), "snli", path("out.jsonl"),
                   ""};
  const ConvertReport r = convert(o);
  EXPECT_EQ(r.data.size(), 2u);
  EXPECT_EQ(r.dropped, 1u);
  ASSERT_TRUE(r.data.examples[0].hypothesis.has_value());
  EXPECT_NE(r.data.examples[0].label, r.data.examples[1].label);
}

TEST_F(CliTest, TrainEvalAndDigestRefusal) {
  const std::string data = std::string(SATA_SOURCE_DIR) + "/data/toy/train.jsonl";
  const std::string cfg = tiny_config(data, path("run"));
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(TrainOptions{cfg, {}, ""}, out, err), 0) << err.str();
  EXPECT_TRUE(fs::exists(path("run/last.ckpt")));
  EXPECT_TRUE(fs::exists(path("run/best.ckpt")));
  EXPECT_EQ(io::read_lines(path("run/metrics.jsonl")).size(), 2u);

  std::ostringstream eout, eerr;
  ASSERT_EQ(cmd_eval(EvalOptions{cfg, {}, path("run/last.ckpt"), data}, eout, eerr), 0) << eerr.str();
  EXPECT_NE(eout.str().find("accuracy "), std::string::npos);

  std::ostringstream mout, merr;
  EXPECT_EQ(cmd_eval(EvalOptions{cfg, {"encoder.d_h=5"}, path("run/last.ckpt"), data}, mout, merr), 2);
  EXPECT_NE(merr.str().find("digest"), std::string::npos);
  EXPECT_NE(merr.str().find("/encoder/d_h"), std::string::npos);

  std::ostringstream rout, rerr;
  ASSERT_EQ(cmd_train(TrainOptions{cfg, {"train.epochs=3"}, path("run/last.ckpt")}, rout, rerr), 0) << rerr.str();
  EXPECT_NE(rout.str().find("resumed at epoch 2"), std::string::npos);
  EXPECT_EQ(io::read_lines(path("run/metrics.jsonl")).size(), 3u);
}

TEST_F(CliTest, InspectTwoTokenSentence) {
  const std::string data = std::string(SATA_SOURCE_DIR) + "/data/toy/train.jsonl";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(TrainOptions{tiny_config(data, path("run"), {{"train", {{"epochs", 1}}}}), {}, ""}, out, err), 0)
      << err.str();
  std::ostringstream iout, ierr;
  ASSERT_EQ(cmd_inspect(InspectOptions{path("run/last.ckpt"), "(NP (DT the) (NN film))", "", ""}, iout, ierr), 0)
      << ierr.str();
  std::vector<std::string> lines;
  std::istringstream in(iout.str());
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "node_span_text,tag,x,y");
  EXPECT_EQ(lines[1].rfind("the,DT,", 0), 0u);
  EXPECT_EQ(lines[3].rfind("the film,NP,", 0), 0u);

  std::ostringstream one, oneerr;
  ASSERT_EQ(cmd_inspect(InspectOptions{path("run/last.ckpt"), "(NN film)", "", ""}, one, oneerr), 0);
  EXPECT_NE(one.str().find("film,NN,0,0"), std::string::npos);
}

TEST_F(CliTest, CountParamsPrintsTotal) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_count_params(CountParamsOptions{std::string(SATA_SOURCE_DIR) + "/configs/snli_300d.json", {}, 0, false},
                             out, err),
            0)
      << err.str();
  EXPECT_NE(out.str().find("total"), std::string::npos);
  EXPECT_NE(out.str().find("3291567"), std::string::npos);
  EXPECT_NE(out.str().find("tag_embedding"), std::string::npos);
}

TEST_F(CliTest, CsvFieldQuoting) {
  EXPECT_EQ(cli::csv_field("plain"), "plain");
  EXPECT_EQ(cli::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(cli::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST_F(CliTest, UnknownConfigKeyIsAnError) {
  std::ostringstream out, err;
  const std::string cfg = write("bad.json", R"({"encoder": {"hidden": 3}})");
  EXPECT_EQ(cmd_count_params(CountParamsOptions{cfg, {}, 0, false}, out, err), 1);
  EXPECT_NE(err.str().find("hidden"), std::string::npos);
}
