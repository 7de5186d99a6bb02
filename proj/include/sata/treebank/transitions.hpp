#pragma once

// Shift-reduce linearisation of binary trees. SHIFT pushes the next leaf,
// REDUCE pops two subtrees and joins them under a new parent. Each transition
// also carries the node's tag so the tree can be rebuilt exactly.

#include <cstddef>
#include <string>
#include <vector>

#include "sata/core/error.hpp"
#include "sata/treebank/binary_tree.hpp"

namespace sata::treebank {

enum class Op { shift, reduce, noop };

struct Transition {
  Op op = Op::noop;
  // SHIFT: token index. REDUCE/NOOP: -1.
  int token = -1;
  std::size_t cluster = 0;
  std::string tag;

  static Transition shift(int token, std::size_t cluster, std::string tag) {
    return Transition{Op::shift, token, cluster, std::move(tag)};
  }
  static Transition reduce(std::size_t cluster, std::string tag) {
    return Transition{Op::reduce, -1, cluster, std::move(tag)};
  }
  static Transition noop() { return Transition{}; }

  friend bool operator==(const Transition&, const Transition&) = default;
};

using TransitionSequence = std::vector<Transition>;

namespace detail {

inline void linearise(const BinaryTree& tree, std::size_t i, TransitionSequence& out) {
  const BinaryNode& n = tree.node(i);
  if (n.is_leaf()) {
    out.push_back(Transition::shift(n.leaf, n.cluster, n.tag));
    return;
  }
  linearise(tree, static_cast<std::size_t>(n.left), out);
  linearise(tree, static_cast<std::size_t>(n.right), out);
  out.push_back(Transition::reduce(n.cluster, n.tag));
}

}  // namespace detail

inline TransitionSequence to_transitions(const BinaryTree& tree) {
  TransitionSequence out;
  out.reserve(tree.size());
  detail::linearise(tree, tree.root_index(), out);
  return out;
}

// Checks the stack discipline: every prefix has more SHIFTs than REDUCEs,
// SHIFT token indices count up from 0, the program ends with one entry on the
// stack. Trailing NOOPs (batch padding) are allowed; a NOOP before the end of
// the program is not. Returns the number of leaves.
inline std::size_t validate_transitions(const TransitionSequence& seq) {
  std::size_t depth = 0, shifts = 0;
  bool padding = false;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Transition& t = seq[i];
    if (t.op == Op::noop) {
      padding = true;
      continue;
    }
    if (padding) throw StructuralError("transition " + std::to_string(i) + " follows padding");
    if (t.op == Op::shift) {
      if (t.token != static_cast<int>(shifts)) {
        throw StructuralError("SHIFT at " + std::to_string(i) + " expected token " + std::to_string(shifts));
      }
      ++shifts;
      ++depth;
    } else {
      if (depth < 2) throw StructuralError("REDUCE at " + std::to_string(i) + " underflows the stack");
      --depth;
    }
  }
  if (shifts == 0) throw StructuralError("transition sequence has no SHIFT");
  if (depth != 1) throw StructuralError("transition sequence leaves " + std::to_string(depth) + " stack entries");
  return shifts;
}

// Rebuilds the tree; tokens[i] is the word for SHIFT(i).
inline BinaryTree from_transitions(const TransitionSequence& seq, const std::vector<std::string>& tokens) {
  const std::size_t leaves = validate_transitions(seq);
  if (leaves != tokens.size()) {
    throw StructuralError("transitions shift " + std::to_string(leaves) + " tokens but " +
                          std::to_string(tokens.size()) + " were given");
  }
  std::vector<BinaryNode> nodes;
  std::vector<std::size_t> stack;
  for (const Transition& t : seq) {
    if (t.op == Op::noop) continue;
    BinaryNode n;
    n.tag = t.tag;
    n.cluster = t.cluster;
    if (t.op == Op::shift) {
      const auto k = static_cast<std::size_t>(t.token);
      n.token = tokens[k];
      n.leaf = t.token;
      n.begin = k;
      n.end = k + 1;
    } else {
      const std::size_t right = stack.back();
      stack.pop_back();
      const std::size_t left = stack.back();
      stack.pop_back();
      n.left = static_cast<int>(left);
      n.right = static_cast<int>(right);
      n.begin = nodes[left].begin;
      n.end = nodes[right].end;
    }
    nodes.push_back(std::move(n));
    stack.push_back(nodes.size() - 1);
  }
  return BinaryTree(std::move(nodes));
}

}  // namespace sata::treebank
