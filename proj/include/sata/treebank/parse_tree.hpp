#pragma once

// PTB-style constituency trees: "(S (NP (DT the) (NN film)) (VP ...))".

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sata/core/error.hpp"

namespace sata::treebank {

// A leaf is a preterminal: it carries a POS tag and a token and has no
// children. Internal nodes carry a phrase tag and at least one child.
struct ParseTree {
  std::string tag;
  std::string token;
  std::vector<ParseTree> children;

  bool is_leaf() const noexcept { return children.empty(); }

  static ParseTree leaf(std::string tag, std::string token) { return ParseTree{std::move(tag), std::move(token), {}}; }
  static ParseTree node(std::string tag, std::vector<ParseTree> children) {
    return ParseTree{std::move(tag), {}, std::move(children)};
  }

  friend bool operator==(const ParseTree&, const ParseTree&) = default;
};

inline std::string unescape_token(std::string_view token) {
  if (token == "-LRB-") return "(";
  if (token == "-RRB-") return ")";
  if (token == "-LCB-") return "{";
  if (token == "-RCB-") return "}";
  if (token == "-LSB-") return "[";
  if (token == "-RSB-") return "]";
  return std::string(token);
}

inline std::string escape_token(std::string_view token) {
  if (token == "(") return "-LRB-";
  if (token == ")") return "-RRB-";
  return std::string(token);
}

namespace detail {

class SexprReader {
 public:
  explicit SexprReader(std::string_view text) : text_(text) {}

  ParseTree read_root() {
    skip_space();
    if (at_end()) throw ParseError("empty input", pos_);
    ParseTree tree = read_node(true);
    skip_space();
    if (!at_end()) throw ParseError("trailing characters after tree", pos_);
    return tree;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  std::string_view read_atom() {
    const std::size_t start = pos_;
    while (!at_end()) {
      const char c = text_[pos_];
      if (c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c))) break;
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }
  void expect_close(std::size_t open_at) {
    skip_space();
    if (at_end()) throw ParseError("unbalanced parenthesis opened at " + std::to_string(open_at), pos_);
    if (text_[pos_] != ')') throw ParseError("expected ')'", pos_);
    ++pos_;
  }

  ParseTree read_node(bool is_root) {
    const std::size_t open_at = pos_;
    if (at_end() || text_[pos_] != '(') throw ParseError("expected '('", pos_);
    ++pos_;
    skip_space();
    if (at_end()) throw ParseError("unbalanced parenthesis opened at " + std::to_string(open_at), pos_);
    if (text_[pos_] == ')') throw ParseError("empty node", open_at);

    std::string tag;
    if (text_[pos_] != '(') tag = std::string(read_atom());
    skip_space();
    if (at_end()) throw ParseError("unbalanced parenthesis opened at " + std::to_string(open_at), pos_);

    if (text_[pos_] != '(' && text_[pos_] != ')') {
      if (tag.empty()) throw ParseError("node without a tag", open_at);
      const std::string token = unescape_token(read_atom());
      skip_space();
      if (!at_end() && text_[pos_] == '(') throw ParseError("leaf '" + tag + "' has children", pos_);
      if (!at_end() && text_[pos_] != ')') throw ParseError("leaf '" + tag + "' has more than one token", pos_);
      expect_close(open_at);
      return ParseTree::leaf(std::move(tag), token);
    }
    if (text_[pos_] == ')') throw ParseError("node '" + tag + "' has no children", open_at);

    std::vector<ParseTree> children;
    while (true) {
      skip_space();
      if (at_end()) throw ParseError("unbalanced parenthesis opened at " + std::to_string(open_at), pos_);
      if (text_[pos_] == ')') break;
      if (text_[pos_] != '(') throw ParseError("bare token inside phrase node", pos_);
      children.push_back(read_node(false));
    }
    ++pos_;
    if (tag.empty()) {
      // PTB wraps each tree in an untagged "( ... )"; accept it only there.
      if (!is_root || children.size() != 1) throw ParseError("node without a tag", open_at);
      return std::move(children.front());
    }
    return ParseTree::node(std::move(tag), std::move(children));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void write_sexpr(const ParseTree& t, std::string& out) {
  out += '(';
  out += t.tag;
  if (t.is_leaf()) {
    out += ' ';
    out += escape_token(t.token);
  } else {
    for (const ParseTree& c : t.children) {
      out += ' ';
      write_sexpr(c, out);
    }
  }
  out += ')';
}

}  // namespace detail

// Whitespace-insensitive; bracket escapes in tokens become literal brackets.
inline ParseTree parse_sexpr(std::string_view text) { return detail::SexprReader(text).read_root(); }

inline std::string to_sexpr(const ParseTree& tree) {
  std::string out;
  detail::write_sexpr(tree, out);
  return out;
}

inline void collect_tokens(const ParseTree& t, std::vector<std::string>& out) {
  if (t.is_leaf()) {
    out.push_back(t.token);
    return;
  }
  for (const ParseTree& c : t.children) collect_tokens(c, out);
}

inline std::vector<std::string> leaf_tokens(const ParseTree& t) {
  std::vector<std::string> out;
  collect_tokens(t, out);
  return out;
}

inline std::size_t leaf_count(const ParseTree& t) {
  if (t.is_leaf()) return 1;
  std::size_t n = 0;
  for (const ParseTree& c : t.children) n += leaf_count(c);
  return n;
}

inline bool is_binary(const ParseTree& t) {
  if (t.is_leaf()) return true;
  if (t.children.size() != 2) return false;
  return is_binary(t.children[0]) && is_binary(t.children[1]);
}

// Tag given to intermediate nodes introduced by binarization.
inline std::string intermediate_tag(std::string_view tag) {
  std::string out(tag);
  if (out.empty() || out.back() != '@') out += '@';
  return out;
}

// Left-binarizes: A(x1..xk) with k > 2 becomes A(A@(...(A@(x1,x2),x3)...), xk).
// Unary chains collapse into their topmost node, which keeps its tag. A unary
// chain ending in a preterminal collapses into that preterminal, since leaves
// must keep a word-level tag.
inline ParseTree binarize(const ParseTree& tree) {
  if (tree.is_leaf()) return tree;
  const ParseTree* bottom = &tree;
  while (bottom->children.size() == 1) {
    bottom = &bottom->children.front();
    if (bottom->is_leaf()) return *bottom;
  }
  std::vector<ParseTree> kids;
  kids.reserve(bottom->children.size());
  for (const ParseTree& c : bottom->children) kids.push_back(binarize(c));

  const std::string mid = intermediate_tag(tree.tag);
  ParseTree acc = std::move(kids[0]);
  for (std::size_t i = 1; i + 1 < kids.size(); ++i) {
    acc = ParseTree::node(mid, {std::move(acc), std::move(kids[i])});
  }
  return ParseTree::node(tree.tag, {std::move(acc), std::move(kids.back())});
}

}  // namespace sata::treebank
