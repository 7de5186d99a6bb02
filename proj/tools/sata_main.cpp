#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sata/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SATA Tree-LSTM: data conversion, training, evaluation and self-checks"};
  app.require_subcommand(1);

  sata::cli::ConvertOptions conv;
  auto* convert = app.add_subcommand("convert", "join parser output with labels into the interchange format");
  convert->add_option("--parses", conv.parses, "one S-expression per line (premise<TAB>hypothesis for snli)")->required();
  convert->add_option("--labels", conv.labels, "one label per line (SST sentiment trees for sst2/sst5)")->required();
  convert->add_option("--format", conv.format, "sst2 | sst5 | labels | snli")->required();
  convert->add_option("--out", conv.out, "output .jsonl")->required();
  convert->add_option("--cluster-map", conv.cluster_map, "tag cluster table (default: built in)");

  sata::cli::TrainOptions tr;
  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", tr.config, "JSON run config")->required();
  train->add_option("--set", tr.overrides, "override, e.g. train.lr=0.01 (repeatable)");
  train->add_option("--resume", tr.resume, "continue from a checkpoint");

  sata::cli::EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--config", ev.config, "JSON run config")->required();
  eval->add_option("--set", ev.overrides, "config override (repeatable)");
  eval->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  eval->add_option("--data", ev.data, "dataset (default: paths.test, then paths.dev)");

  sata::cli::GradcheckOptions gc;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every differentiable component");
  grad->add_option("--seed", gc.seed, "seed for the random tiny models");
  grad->add_option("--tolerance", gc.tolerance, "maximum relative error");

  sata::cli::EquivOptions eq;
  auto* equiv = app.add_subcommand("equiv", "compare shift-reduce and recursive execution");
  equiv->add_option("--trees,-k", eq.trees, "number of random trees");
  equiv->add_option("--seed", eq.seed, "seed");
  equiv->add_option("--max-leaves", eq.max_leaves, "largest sentence length");
  equiv->add_option("--tolerance", eq.tolerance, "maximum absolute deviation");

  sata::cli::InspectOptions in;
  auto* inspect = app.add_subcommand("inspect", "2-D PCA projection of every node state as CSV");
  inspect->add_option("--checkpoint", in.checkpoint, "checkpoint file")->required();
  auto* parse_opt = inspect->add_option("--parse", in.parse, "S-expression of one sentence");
  inspect->add_option("--parse-file", in.parse_file, "file holding the S-expression")->excludes(parse_opt);
  inspect->add_option("--out", in.out, "CSV path (default: stdout)");

  sata::cli::CountParamsOptions cp;
  auto* count = app.add_subcommand("count-params", "itemized trainable parameter count");
  count->add_option("--config", cp.config, "JSON run config (default: built-in defaults)");
  count->add_option("--set", cp.overrides, "config override (repeatable)");
  count->add_option("--vocab-size", cp.vocab_size, "rows of a trained word embedding");
  count->add_flag("--no-head", cp.no_head, "exclude the task head");

  CLI11_PARSE(app, argc, argv);

  if (*convert) return sata::cli::cmd_convert(conv, std::cout, std::cerr);
  if (*train) return sata::cli::cmd_train(tr, std::cout, std::cerr);
  if (*eval) return sata::cli::cmd_eval(ev, std::cout, std::cerr);
  if (*grad) return sata::cli::cmd_gradcheck(gc, std::cout, std::cerr);
  if (*equiv) return sata::cli::cmd_equiv(eq, std::cout, std::cerr);
  if (*inspect) return sata::cli::cmd_inspect(in, std::cout, std::cerr);
  if (*count) return sata::cli::cmd_count_params(cp, std::cout, std::cerr);
  return 1;
}
