#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sata/core/error.hpp"
#include "sata/treebank/cluster_map.hpp"
#include "sata/treebank/parse_tree.hpp"

namespace sata::treebank {

struct BinaryNode {
  std::string tag;
  std::size_t cluster = 0;
  // Leaves: token and its position in the sentence. Internal: child indices.
  std::string token;
  int leaf = -1;
  int left = -1;
  int right = -1;
  // Leaf span [begin, end) covered by the node.
  std::size_t begin = 0;
  std::size_t end = 0;

  bool is_leaf() const noexcept { return leaf >= 0; }
  friend bool operator==(const BinaryNode&, const BinaryNode&) = default;
};

// Binarized, clustered tree stored as a post-order node array; the root is
// the last node and a node's index is its post-order index.
class BinaryTree {
 public:
  BinaryTree() = default;
  explicit BinaryTree(std::vector<BinaryNode> nodes) : nodes_(std::move(nodes)) { validate(); }

  // Requires a binary tree (see binarize()).
  static BinaryTree from_parse(const ParseTree& tree, const ClusterMap& map) {
    if (!is_binary(tree)) throw StructuralError("tree is not binary: " + treebank::to_sexpr(tree));
    std::vector<BinaryNode> nodes;
    std::size_t next_leaf = 0;
    build(tree, map, nodes, next_leaf);
    return BinaryTree(std::move(nodes));
  }

  const std::vector<BinaryNode>& nodes() const noexcept { return nodes_; }
  const BinaryNode& node(std::size_t i) const { return nodes_.at(i); }
  const BinaryNode& root() const { return nodes_.back(); }
  std::size_t root_index() const { return nodes_.size() - 1; }
  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t leaf_count() const noexcept { return (nodes_.size() + 1) / 2; }

  std::vector<std::string> tokens() const {
    std::vector<std::string> out;
    for (const BinaryNode& n : nodes_)
      if (n.is_leaf()) out.push_back(n.token);
    return out;
  }

  ParseTree to_parse() const {
    if (nodes_.empty()) throw StructuralError("empty tree");
    return to_parse(root_index());
  }

  std::string to_sexpr() const { return treebank::to_sexpr(to_parse()); }

  friend bool operator==(const BinaryTree&, const BinaryTree&) = default;

 private:
  static std::size_t build(const ParseTree& t, const ClusterMap& map, std::vector<BinaryNode>& out,
                           std::size_t& next_leaf) {
    BinaryNode n;
    n.tag = t.tag;
    if (t.is_leaf()) {
      n.cluster = map.cluster(t.tag, TagPosition::word);
      n.token = t.token;
      n.leaf = static_cast<int>(next_leaf);
      n.begin = next_leaf;
      n.end = ++next_leaf;
    } else {
      const std::size_t l = build(t.children[0], map, out, next_leaf);
      const std::size_t r = build(t.children[1], map, out, next_leaf);
      n.cluster = map.cluster(t.tag, TagPosition::phrase);
      n.left = static_cast<int>(l);
      n.right = static_cast<int>(r);
      n.begin = out[l].begin;
      n.end = out[r].end;
    }
    out.push_back(std::move(n));
    return out.size() - 1;
  }

  ParseTree to_parse(std::size_t i) const {
    const BinaryNode& n = nodes_[i];
    if (n.is_leaf()) return ParseTree::leaf(n.tag, n.token);
    return ParseTree::node(n.tag, {to_parse(static_cast<std::size_t>(n.left)), to_parse(static_cast<std::size_t>(n.right))});
  }

  void validate() const {
    if (nodes_.empty()) throw StructuralError("binary tree without nodes");
    if (nodes_.size() % 2 == 0) throw StructuralError("binary tree must have an odd node count");
    std::size_t leaves = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const BinaryNode& n = nodes_[i];
      if (n.tag.empty()) throw StructuralError("node " + std::to_string(i) + " has an empty tag");
      if (n.is_leaf()) {
        if (static_cast<std::size_t>(n.leaf) != leaves++) throw StructuralError("leaves out of order");
        if (n.cluster >= kWordGroups) throw StructuralError("leaf cluster outside word groups");
      } else {
        if (n.left < 0 || n.right < 0 || static_cast<std::size_t>(n.left) >= i || static_cast<std::size_t>(n.right) >= i) {
          throw StructuralError("node " + std::to_string(i) + " children are not earlier in post-order");
        }
        if (n.cluster < kWordGroups || n.cluster >= kTagCategories) {
          throw StructuralError("internal cluster outside phrase groups");
        }
      }
    }
    if (leaves != leaf_count()) throw StructuralError("leaf count does not match node count");
    std::vector<int> parents(nodes_.size(), 0);
    for (const BinaryNode& n : nodes_) {
      if (n.is_leaf()) continue;
      ++parents[static_cast<std::size_t>(n.left)];
      ++parents[static_cast<std::size_t>(n.right)];
    }
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
      if (parents[i] != 1) throw StructuralError("node " + std::to_string(i) + " does not have exactly one parent");
    }
    if (parents.back() != 0) throw StructuralError("root has a parent");
  }

  std::vector<BinaryNode> nodes_;
};

}  // namespace sata::treebank
