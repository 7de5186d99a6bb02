#pragma once

#include <cstddef>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "sata/core/error.hpp"
#include "sata/core/init.hpp"
#include "sata/core/tape.hpp"
#include "sata/treebank/cluster_map.hpp"
#include "sata/treebank/example.hpp"

namespace sata {

class WordVocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  WordVocab() {
    add(kPadToken);
    add(kUnkToken);
  }

  // From the training split only; other splits map unseen words to UNK.
  static WordVocab from_dataset(const treebank::Dataset& data) {
    WordVocab vocab;
    for (const treebank::Example& ex : data.examples) {
      for (const std::string& t : ex.sentence.tokens) vocab.add(t);
      if (ex.hypothesis)
        for (const std::string& t : ex.hypothesis->tokens) vocab.add(t);
    }
    return vocab;
  }

  static WordVocab from_tokens(const std::vector<std::string>& tokens) {
    WordVocab vocab;
    for (const std::string& t : tokens) vocab.add(t);
    return vocab;
  }

  std::size_t add(const std::string& token) {
    auto [it, inserted] = index_.emplace(token, tokens_.size());
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  std::size_t id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  std::vector<std::size_t> ids(const std::vector<std::string>& tokens) const {
    std::vector<std::size_t> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) out.push_back(id(t));
    return out;
  }

  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }

  friend bool operator==(const WordVocab& a, const WordVocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr double kOovInitBound = 0.05;
inline constexpr double kTagInitBound = 0.005;

// |V| x d_w rows, excluded from weight decay.
inline Parameter make_word_embedding(const WordVocab& vocab, std::size_t dim, bool trainable, Rng& rng) {
  Parameter p("word_embedding", uniform_init({vocab.size(), dim}, -kOovInitBound, kOovInitBound, rng), false);
  p.trainable = trainable;
  return p;
}

// 23 x d_T, always trainable.
inline Parameter make_tag_embedding(std::size_t dim, Rng& rng) {
  return Parameter("tag_embedding", uniform_init({treebank::kTagCategories, dim}, -kTagInitBound, kTagInitBound, rng),
                   false);
}

struct PretrainedCoverage {
  std::size_t vocab_size = 0;
  std::size_t found = 0;
  std::size_t lines = 0;
  std::vector<std::string> oov;  // vocabulary entries without a pretrained row
};

// Text vectors, one "token v1 ... vd" per line, whitespace separated. A
// leading "count dim" header line is detected and skipped. Rows not in the
// file keep their small-uniform initialisation.
inline PretrainedCoverage load_pretrained(std::istream& in, const WordVocab& vocab, Parameter& embedding) {
  const std::size_t dim = embedding.value.cols();
  if (embedding.value.rows() != vocab.size()) {
    throw DimensionError("embedding has " + std::to_string(embedding.value.rows()) + " rows for a vocabulary of " +
                         std::to_string(vocab.size()));
  }
  PretrainedCoverage cov;
  cov.vocab_size = vocab.size();
  std::vector<bool> seen(vocab.size(), false);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fields.clear();
    std::istringstream split(line);
    for (std::string f; split >> f;) fields.push_back(std::move(f));
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && fields[0].find_first_not_of("0123456789") == std::string::npos &&
        fields[1].find_first_not_of("0123456789") == std::string::npos) {
      continue;
    }
    ++cov.lines;
    if (fields.size() != dim + 1) {
      throw FormatError("expected " + std::to_string(dim) + " values, found " + std::to_string(fields.size() - 1),
                        line_no);
    }
    if (!vocab.contains(fields[0])) continue;
    const std::size_t row = vocab.id(fields[0]);
    for (std::size_t j = 0; j < dim; ++j) {
      char* end = nullptr;
      const double v = std::strtod(fields[j + 1].c_str(), &end);
      if (end == fields[j + 1].c_str() || *end != '\0') {
        throw FormatError("malformed value '" + fields[j + 1] + "'", line_no);
      }
      embedding.value.at(row, j) = v;
    }
    if (!seen[row]) {
      seen[row] = true;
      ++cov.found;
    }
  }
  for (std::size_t i = 0; i < vocab.size(); ++i)
    if (!seen[i]) cov.oov.push_back(vocab.token(i));
  return cov;
}

inline PretrainedCoverage load_pretrained(const std::string& path, const WordVocab& vocab, Parameter& embedding) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pretrained vectors " + path);
  return load_pretrained(in, vocab, embedding);
}

inline std::vector<Var> lookup_words(Tape& tape, Parameter& embedding, const std::vector<std::size_t>& ids) {
  std::vector<Var> rows;
  rows.reserve(ids.size());
  for (std::size_t id : ids) rows.push_back(tape.row(embedding, id));
  return rows;
}

inline Var lookup_tag(Tape& tape, Parameter& tag_embedding, std::size_t cluster) {
  return tape.row(tag_embedding, cluster);
}

}  // namespace sata
