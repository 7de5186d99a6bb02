#pragma once

// Command implementations behind the `sata` binary. Each returns a process
// exit code and writes results to `out`, diagnostics to `err`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sata/config.hpp"
#include "sata/core/error.hpp"
#include "sata/core/pca.hpp"
#include "sata/embeddings.hpp"
#include "sata/io.hpp"
#include "sata/model.hpp"
#include "sata/training/checkpoint.hpp"
#include "sata/training/trainer.hpp"
#include "sata/treebank/example.hpp"
#include "sata/verify.hpp"

namespace sata::cli {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline treebank::ClusterMap cluster_map_from(const std::string& path) {
  return path.empty() ? treebank::ClusterMap::default_map() : treebank::ClusterMap::load(path);
}

inline std::string hex_digest(std::uint64_t d) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << d;
  return os.str();
}

// Powers of ten as "1e-4"; anything else in default stream format.
inline std::string compact_number(double v) {
  if (v > 0.0) {
    const double k = std::round(std::log10(v));
    if (std::pow(10.0, k) == v && k != 0.0) return "1e" + std::to_string(static_cast<int>(k));
  }
  std::ostringstream os;
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- convert

struct ConvertOptions {
  std::string parses;
  std::string labels;
  std::string format;  // sst2 | sst5 | labels | snli
  std::string out;
  std::string cluster_map;
};

struct ConvertReport {
  treebank::Dataset data;
  std::size_t dropped = 0;
  std::map<std::string, int> label_ids;  // named labels, "labels" format only
};

inline int snli_label(const std::string& s) {
  if (s == "entailment") return 0;
  if (s == "neutral") return 1;
  if (s == "contradiction") return 2;
  return -1;
}

inline ConvertReport convert(const ConvertOptions& o) {
  if (o.format != "sst2" && o.format != "sst5" && o.format != "labels" && o.format != "snli") {
    throw ConfigError("unknown format '" + o.format + "' (sst2, sst5, labels, snli)");
  }
  const treebank::ClusterMap map = cluster_map_from(o.cluster_map);
  const std::vector<std::string> parses = io::read_lines(o.parses);
  const std::vector<std::string> labels = io::read_lines(o.labels);
  if (parses.size() != labels.size()) {
    throw FormatError("line count mismatch: " + std::to_string(parses.size()) + " parses vs " +
                          std::to_string(labels.size()) + " labels",
                      std::min(parses.size(), labels.size()) + 1);
  }
  ConvertReport rep;
  for (std::size_t k = 0; k < parses.size(); ++k) {
    const std::size_t line = k + 1;
    try {
      if (o.format == "snli") {
        const int label = snli_label(labels[k]);
        if (labels[k] == "-") {
          ++rep.dropped;
          continue;
        }
        if (label < 0) throw FormatError("unknown SNLI label '" + labels[k] + "'", line);
        const std::size_t tab = parses[k].find('\t');
        if (tab == std::string::npos) throw FormatError("expected premise<TAB>hypothesis parses", line);
        treebank::Example ex;
        ex.label = label;
        ex.sentence = treebank::sentence_from_sexpr(std::string_view(parses[k]).substr(0, tab), map);
        ex.hypothesis = treebank::sentence_from_sexpr(std::string_view(parses[k]).substr(tab + 1), map);
        rep.data.examples.push_back(std::move(ex));
        continue;
      }
      const treebank::Sentence s = treebank::sentence_from_sexpr(parses[k], map);
      if (o.format == "labels") {
        treebank::Example ex;
        ex.sentence = s;
        const std::string& raw = labels[k];
        const bool numeric = !raw.empty() && std::all_of(raw.begin(), raw.end(), [](char c) { return c >= '0' && c <= '9'; });
        if (numeric) {
          ex.label = std::stoi(raw);
        } else {
          if (raw.empty()) throw FormatError("empty label", line);
          auto [it, inserted] = rep.label_ids.emplace(raw, static_cast<int>(rep.label_ids.size()));
          ex.label = it->second;
        }
        rep.data.examples.push_back(std::move(ex));
        continue;
      }
      const auto scheme = o.format == "sst2" ? treebank::LabelScheme::sst2 : treebank::LabelScheme::sst5;
      std::optional<treebank::Example> ex = treebank::merge_sst_labels(labels[k], s.tree, scheme);
      if (!ex) {
        ++rep.dropped;
        continue;
      }
      rep.data.examples.push_back(std::move(*ex));
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw FormatError(e.what(), line);
    }
  }
  return rep;
}

inline int cmd_convert(const ConvertOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ConvertReport rep = convert(o);
    treebank::write_dataset(o.out, rep.data);
    out << "records: " << rep.data.size() << "\n";
    out << "dropped: " << rep.dropped << "\n";
    for (const auto& [name, id] : rep.label_ids) out << "label " << id << " = " << name << "\n";
    return 0;
  });
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string resume;
};

// Config stored in checkpoints: everything except file paths, so the same
// settings always give the same bytes.
inline nlohmann::json checkpoint_config(const RunConfig& cfg) {
  nlohmann::json j = to_json(cfg);
  j.erase("paths");
  return j;
}

inline SataModel build_model(const RunConfig& cfg, const treebank::Dataset& train, const treebank::ClusterMap& map,
                             std::ostream& out) {
  SataModel model = SataModel::create(cfg.model, WordVocab::from_dataset(train), map, cfg.train.seed);
  if (!cfg.paths.embeddings.empty()) {
    const PretrainedCoverage cov = load_pretrained(cfg.paths.embeddings, model.encoder.vocab, model.encoder.word_embedding);
    out << "embeddings: " << cov.found << "/" << cov.vocab_size << " vocabulary entries found\n";
  }
  return model;
}

inline treebank::Dataset load_split(const std::string& path, const treebank::ClusterMap& map, std::ostream& err) {
  std::vector<std::string> warnings;
  treebank::Dataset d = treebank::load_dataset(path, map, &warnings);
  for (const std::string& w : warnings) err << "warning: " << path << ": " << w << "\n";
  return d;
}

inline int run_cross_validation(const RunConfig& cfg, const treebank::Dataset& data, const treebank::ClusterMap& map,
                                std::ostream& out) {
  const std::size_t folds = cfg.train.cv_folds;
  nlohmann::json summary = {{"folds", folds}, {"accuracy", nlohmann::json::array()}};
  double total = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    auto [train, held] = cv_split(data, folds, f, cfg.train.seed);
    SataModel model = build_model(cfg, train, map, out);
    Trainer tr(model, cfg.train, checkpoint_config(cfg));
    // The held-out fold is only scored, never used for selection.
    tr.fit(train);
    const double acc = evaluate(model, held, cfg.train.workers).accuracy;
    summary["accuracy"].push_back(acc);
    total += acc;
    out << "fold " << f + 1 << "/" << folds << " accuracy " << acc << "\n";
  }
  summary["mean_accuracy"] = total / static_cast<double>(folds);
  out << "cv mean accuracy " << total / static_cast<double>(folds) << "\n";
  io::write_file_atomic(cfg.paths.out_dir + "/cv.json", summary.dump(2) + "\n");
  return 0;
}

inline int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_run_config(o.config, o.overrides);
    if (cfg.paths.train.empty()) throw ConfigError("paths.train is required");
    const treebank::ClusterMap map = cluster_map_from(cfg.paths.cluster_map);
    const treebank::Dataset train = load_split(cfg.paths.train, map, err);
    if (train.empty()) throw ConfigError("training set " + cfg.paths.train + " is empty");
    if (cfg.train.cv_folds >= 2) return run_cross_validation(cfg, train, map, out);
    std::optional<treebank::Dataset> dev;
    if (!cfg.paths.dev.empty()) dev = load_split(cfg.paths.dev, map, err);

    SataModel model = build_model(cfg, train, map, out);
    Trainer tr(model, cfg.train, checkpoint_config(cfg));
    const std::string dir = cfg.paths.out_dir;
    const std::string metrics_path = dir + "/metrics.jsonl";
    std::string metrics;
    if (!o.resume.empty()) {
      tr.restore(load_checkpoint(o.resume));
      if (std::filesystem::exists(metrics_path)) {
        for (const std::string& line : io::read_lines(metrics_path)) {
          const auto j = nlohmann::json::parse(line, nullptr, false);
          if (!j.is_discarded() && j.value("epoch", std::size_t{0}) <= tr.epoch()) metrics += line + "\n";
        }
      }
      out << "resumed at epoch " << tr.epoch() << "\n";
    }
    tr.fit(train, dev ? &*dev : nullptr, [&](const EpochMetrics& m, Trainer& t) {
      const std::string line = to_json(m).dump();
      metrics += line + "\n";
      io::write_file_atomic(metrics_path, metrics);
      save_checkpoint(dir + "/last.ckpt", t.checkpoint());
      if (t.best() && t.best()->epoch == m.epoch) save_checkpoint(dir + "/best.ckpt", *t.best());
      out << line << "\n";
      return true;
    });
    out << "best " << cfg.train.selection << " " << tr.best_metric() << "\n";
    return 0;
  });
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string data;
};

inline int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_run_config(o.config, o.overrides);
    const Checkpoint ckpt = load_checkpoint(o.checkpoint);
    const std::uint64_t want = config_digest(cfg.model);
    if (ckpt.digest != want) {
      err << "error: checkpoint " << o.checkpoint << " has config digest " << hex_digest(ckpt.digest)
          << " but the given config has " << hex_digest(want) << "; the model settings differ";
      if (ckpt.meta.contains("config")) {
        const nlohmann::json saved = to_json(run_config_from_json(ckpt.meta.at("config")).model);
        for (const auto& op : nlohmann::json::diff(saved, to_json(cfg.model))) {
          err << "\n  " << op.value("path", std::string{}) << ": checkpoint "
              << saved.value(nlohmann::json::json_pointer(op.value("path", std::string{})), nlohmann::json()).dump()
              << ", config " << op.value("value", nlohmann::json()).dump();
        }
      }
      err << "\n";
      return 2;
    }
    SataModel model = model_from_checkpoint(ckpt);
    const std::string path = !o.data.empty() ? o.data : !cfg.paths.test.empty() ? cfg.paths.test : cfg.paths.dev;
    if (path.empty()) throw ConfigError("no evaluation data: pass --data or set paths.test / paths.dev");
    const treebank::Dataset data = load_split(path, model.clusters, err);
    const EvalResult r = evaluate(model, data, cfg.train.workers);
    out << "accuracy " << r.accuracy << " (" << r.correct << "/" << r.total << ")\n";
    out << "loss " << r.mean_loss << "\n";
    out << "confusion (rows gold, columns predicted)\n";
    for (const auto& row : r.confusion) {
      for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
      out << "\n";
    }
    return 0;
  });
}

// ---------------------------------------------------------------- gradcheck / equiv

struct GradcheckOptions {
  std::uint64_t seed = 7;
  double tolerance = 1e-4;
};

inline int cmd_gradcheck(const GradcheckOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const verify::GradSuite suite = verify::gradient_suite(o.seed);
    for (const verify::GradCase& c : suite.cases) {
      out << "  " << std::left << std::setw(32) << c.name << " max_rel_err " << c.result.max_rel_err << " ("
          << c.result.coordinates << " coords)\n";
    }
    out << std::right;
    if (suite.passed(o.tolerance)) {
      out << "PASS max_rel_err < " << compact_number(o.tolerance) << " (" << suite.max_rel_err << ")\n";
      return 0;
    }
    out << "FAIL max_rel_err = " << suite.max_rel_err << " >= " << compact_number(o.tolerance) << "\n";
    return 1;
  });
}

struct EquivOptions {
  std::size_t trees = 100;
  std::uint64_t seed = 11;
  std::size_t max_leaves = 12;
  double tolerance = 1e-12;
};

inline int cmd_equiv(const EquivOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const verify::EquivalenceReport rep = verify::equivalence_suite(o.trees, o.seed, o.max_leaves);
    out << "trees " << rep.trees << ", node states compared " << rep.nodes << "\n";
    if (rep.max_dev <= o.tolerance) {
      out << "PASS max_dev = " << rep.max_dev << "\n";
      return 0;
    }
    out << "FAIL max_dev = " << rep.max_dev << " > " << compact_number(o.tolerance) << "\n";
    return 1;
  });
}

// ---------------------------------------------------------------- inspect

struct InspectOptions {
  std::string checkpoint;
  std::string parse;       // S-expression text
  std::string parse_file;  // or a file whose first non-blank line is one
  std::string out;         // CSV path; stdout when empty
};

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

inline std::string inspect_csv(SataModel& model, const std::string& sexpr) {
  const treebank::Sentence s = treebank::sentence_from_sexpr(sexpr, model.clusters);
  Tape tape;
  const EncodeResult enc = encode_sentence(tape, s, model.encoder, ForwardMode::eval());
  const std::size_t n = enc.nodes.size(), d = model.config.encoder.d_h;
  Tensor xy({n, 2}, 0.0);
  if (n >= 2) {
    Tensor points({n, d});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) points[i * d + j] = enc.nodes[i].word.h.value()[j];
    xy = pca_project(points, 2);
  }
  std::ostringstream os;
  os << std::setprecision(17);
  os << "node_span_text,tag,x,y\n";
  for (std::size_t i = 0; i < n; ++i) {
    const treebank::BinaryNode& node = s.tree.node(i);
    std::string span;
    for (std::size_t t = node.begin; t < node.end; ++t) span += (t > node.begin ? " " : "") + s.tokens[t];
    os << csv_field(span) << "," << csv_field(node.tag) << "," << xy[i * 2] << "," << xy[i * 2 + 1] << "\n";
  }
  return os.str();
}

inline int cmd_inspect(const InspectOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::string sexpr = o.parse;
    if (sexpr.empty() && !o.parse_file.empty()) {
      for (const std::string& line : io::read_lines(o.parse_file)) {
        if (line.find_first_not_of(" \t") != std::string::npos) {
          sexpr = line;
          break;
        }
      }
    }
    if (sexpr.empty()) throw ConfigError("inspect needs --parse or --parse-file");
    SataModel model = model_from_checkpoint(load_checkpoint(o.checkpoint));
    const std::string csv = inspect_csv(model, sexpr);
    if (o.out.empty()) {
      out << csv;
    } else {
      io::write_file_atomic(o.out, csv);
      out << "wrote " << o.out << "\n";
    }
    return 0;
  });
}

// ---------------------------------------------------------------- count-params

struct CountParamsOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::size_t vocab_size = 0;
  bool no_head = false;
};

inline int cmd_count_params(const CountParamsOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_run_config(o.config, o.overrides);
    const std::vector<ParamCount> items = count_params(cfg.model, o.vocab_size, !o.no_head);
    for (const ParamCount& p : items) out << std::left << std::setw(22) << p.name << std::setw(12) << shape_string(p.shape) << std::right << std::setw(10) << p.count << "\n";
    out << std::left << std::setw(34) << "total" << std::right << std::setw(10) << total_params(items) << "\n";
    return 0;
  });
}

}  // namespace sata::cli
