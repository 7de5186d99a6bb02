#pragma once

// Labelled examples and the line-delimited JSON interchange format:
//   {"label":1,"node_labels":[...],"sexpr":"(S ...)","tokens":["..."]}
// plus "hypothesis_sexpr"/"hypothesis_tokens" for sentence-pair tasks.
// node_labels follow post-order and use -1 for unlabelled nodes.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sata/core/error.hpp"
#include "sata/io.hpp"
#include "sata/treebank/binary_tree.hpp"
#include "sata/treebank/cluster_map.hpp"
#include "sata/treebank/parse_tree.hpp"

namespace sata::treebank {

struct Sentence {
  std::vector<std::string> tokens;
  BinaryTree tree;

  static Sentence from_tree(BinaryTree tree) {
    Sentence s;
    s.tokens = tree.tokens();
    s.tree = std::move(tree);
    return s;
  }
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Example {
  int label = 0;
  Sentence sentence;
  std::vector<int> node_labels;
  std::optional<Sentence> hypothesis;

  friend bool operator==(const Example&, const Example&) = default;
};

struct Dataset {
  std::vector<Example> examples;

  std::size_t size() const noexcept { return examples.size(); }
  bool empty() const noexcept { return examples.empty(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Parse, binarize and cluster one S-expression.
inline Sentence sentence_from_sexpr(std::string_view text, const ClusterMap& map) {
  return Sentence::from_tree(BinaryTree::from_parse(binarize(parse_sexpr(text)), map));
}

enum class LabelScheme { sst2, sst5 };

namespace detail {

inline int sentiment_value(const std::string& tag) {
  if (tag.size() != 1 || tag[0] < '0' || tag[0] > '4') {
    throw ParseError("malformed sentiment label '" + tag + "'", 0);
  }
  return tag[0] - '0';
}

// SST-2 folds {0,1} to 0 and {3,4} to 1; neutral becomes -1.
inline int scheme_label(int value, LabelScheme scheme) {
  if (scheme == LabelScheme::sst5) return value;
  if (value < 2) return 0;
  if (value > 2) return 1;
  return -1;
}

inline void post_order(const ParseTree& t, std::vector<const ParseTree*>& out) {
  for (const ParseTree& c : t.children) post_order(c, out);
  out.push_back(&t);
}

}  // namespace detail

// Joins a sentiment-labelled tree "(3 (2 It) ...)" with a tagged parse of the
// same sentence. Returns nullopt when SST-2 drops a neutral root. Per-node
// labels are attached only when both trees have the same shape.
inline std::optional<Example> merge_sst_labels(std::string_view sst_line, const BinaryTree& parse, LabelScheme scheme) {
  const ParseTree labelled = binarize(parse_sexpr(sst_line));
  std::vector<const ParseTree*> order;
  detail::post_order(labelled, order);
  std::vector<int> values;
  values.reserve(order.size());
  for (const ParseTree* n : order) values.push_back(detail::sentiment_value(n->tag));

  const int root = detail::scheme_label(values.back(), scheme);
  if (root < 0) return std::nullopt;

  Example ex;
  ex.label = root;
  ex.sentence = Sentence::from_tree(parse);
  bool aligned = order.size() == parse.size();
  for (std::size_t i = 0; aligned && i < order.size(); ++i) aligned = order[i]->is_leaf() == parse.node(i).is_leaf();
  if (aligned) {
    for (int v : values) ex.node_labels.push_back(detail::scheme_label(v, scheme));
  }
  return ex;
}

namespace detail {

inline Sentence read_sentence(const nlohmann::json& record, const char* sexpr_key, const char* tokens_key,
                              const ClusterMap& map, std::size_t line_no) {
  if (!record.contains(sexpr_key) || !record[sexpr_key].is_string()) {
    throw FormatError(std::string("missing string field '") + sexpr_key + "'", line_no);
  }
  Sentence s;
  try {
    const ParseTree parsed = parse_sexpr(record[sexpr_key].get<std::string>());
    if (!is_binary(parsed)) throw FormatError(std::string("'") + sexpr_key + "' is not a binary tree", line_no);
    s = Sentence::from_tree(BinaryTree::from_parse(parsed, map));
  } catch (const ParseError& e) {
    throw FormatError(e.what(), line_no);
  }
  if (record.contains(tokens_key)) {
    if (!record[tokens_key].is_array()) throw FormatError(std::string("'") + tokens_key + "' must be a list", line_no);
    std::vector<std::string> tokens;
    for (const auto& t : record[tokens_key]) {
      if (!t.is_string()) throw FormatError(std::string("'") + tokens_key + "' must hold strings", line_no);
      tokens.push_back(t.get<std::string>());
    }
    if (tokens != s.tokens) throw FormatError(std::string("'") + tokens_key + "' disagree with tree leaves", line_no);
  }
  return s;
}

}  // namespace detail

inline std::string to_json_line(const Example& ex) {
  nlohmann::json record;
  record["label"] = ex.label;
  record["tokens"] = ex.sentence.tokens;
  record["sexpr"] = ex.sentence.tree.to_sexpr();
  if (!ex.node_labels.empty()) record["node_labels"] = ex.node_labels;
  if (ex.hypothesis) {
    record["hypothesis_tokens"] = ex.hypothesis->tokens;
    record["hypothesis_sexpr"] = ex.hypothesis->tree.to_sexpr();
  }
  return record.dump();
}

// Unknown fields are skipped; a warning is appended when warnings is given.
inline Example from_json_line(std::string_view line, const ClusterMap& map, std::size_t line_no,
                              std::vector<std::string>* warnings = nullptr) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what(), line_no);
  }
  if (!record.is_object()) throw FormatError("record is not an object", line_no);
  static const std::vector<std::string> known = {"label", "tokens", "sexpr", "node_labels", "hypothesis_tokens",
                                                 "hypothesis_sexpr"};
  for (const auto& [key, value] : record.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end() && warnings) {
      warnings->push_back("line " + std::to_string(line_no) + ": ignoring unknown field '" + key + "'");
    }
  }
  if (!record.contains("label") || !record["label"].is_number_integer()) {
    throw FormatError("missing integer field 'label'", line_no);
  }
  Example ex;
  ex.label = record["label"].get<int>();
  ex.sentence = detail::read_sentence(record, "sexpr", "tokens", map, line_no);
  if (record.contains("node_labels")) {
    const auto& labels = record["node_labels"];
    if (!labels.is_array()) throw FormatError("'node_labels' must be a list", line_no);
    for (const auto& v : labels) {
      if (!v.is_number_integer()) throw FormatError("'node_labels' must hold integers", line_no);
      ex.node_labels.push_back(v.get<int>());
    }
    if (ex.node_labels.size() != ex.sentence.tree.size()) {
      throw FormatError("'node_labels' has " + std::to_string(ex.node_labels.size()) + " entries for " +
                            std::to_string(ex.sentence.tree.size()) + " nodes",
                        line_no);
    }
  }
  if (record.contains("hypothesis_sexpr")) {
    ex.hypothesis = detail::read_sentence(record, "hypothesis_sexpr", "hypothesis_tokens", map, line_no);
  }
  return ex;
}

inline std::string serialize_dataset(const Dataset& data) {
  std::string out;
  for (const Example& ex : data.examples) {
    out += to_json_line(ex);
    out += '\n';
  }
  return out;
}

inline Dataset parse_dataset(std::string_view text, const ClusterMap& map, std::vector<std::string>* warnings = nullptr) {
  Dataset data;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t stop = text.find('\n', start);
    if (stop == std::string_view::npos) stop = text.size();
    std::string_view line = text.substr(start, stop - start);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      data.examples.push_back(from_json_line(line, map, line_no, warnings));
    }
    start = stop + 1;
  }
  return data;
}

inline Dataset load_dataset(const std::string& path, const ClusterMap& map, std::vector<std::string>* warnings = nullptr) {
  return parse_dataset(io::read_file(path), map, warnings);
}

inline void write_dataset(const std::string& path, const Dataset& data) {
  io::write_file_atomic(path, serialize_dataset(data));
}

}  // namespace sata::treebank
