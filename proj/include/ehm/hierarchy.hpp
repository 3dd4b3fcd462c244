// Copyright 2026 The ehm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EHM_HIERARCHY_HPP_
#define EHM_HIERARCHY_HPP_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "ehm/core.hpp"

namespace ehm {

// Group-to-group similarity rule used while merging.
//   children_average: new similarities average the two merged rows with equal
//     weight, the recursive children mean.
//   leaf_average: rows are weighted by descendant leaf counts, i.e. the plain
//     mean of the source similarity over the two leaf spans.
enum class Linkage { children_average, leaf_average };

struct TreeNode {
  int id = 0;
  int level = 1;  // leaves are level 1, parents max(child levels) + 1
  int parent = -1;
  std::array<int, 2> children{-1, -1};  // -1,-1 for leaves
  std::vector<int> leaf_span;           // descendant leaves, raster order
  // Cached similarity of the two children at merge time; NaN for leaves.
  double merge_similarity = std::numeric_limits<double>::quiet_NaN();

  bool is_leaf() const { return children[0] < 0; }
};

// Binary merge tree over N leaves. Node ids 0..N-1 are the leaves in raster
// order; node N+k is the (k+1)-th merge; the last node is the root.
struct HierarchyTree {
  int leaf_count = 0;
  int root_id = 0;
  std::vector<TreeNode> nodes;  // exactly 2N-1 entries, indexed by id

  int height() const { return nodes[root_id].level; }
};

// Builds the tree by N-1 greedy merges of the currently most similar active
// pair. Ties pick the smallest (min id, max id) pair. Active similarities are
// kept in an incrementally updated cache, one row per live node.
// Requires S square, exactly symmetric, nonnegative, nonempty.
HierarchyTree build_tree(const Eigen::Ref<const Matd>& S,
                         Linkage linkage = Linkage::children_average);

// Maps build_tree over a batch of independent matrices. Results do not
// depend on execution order.
std::vector<HierarchyTree> build_trees(std::span<const Matd> batch,
                                       Linkage linkage);

// Similarity of two disjoint subtrees evaluated from scratch:
// children_average by full recursion into child pairs, leaf_average as the
// mean of S over the cartesian product of the two leaf spans. This is the
// slow reference the incremental cache in build_tree is checked against.
double pair_similarity_recursive(const HierarchyTree& tree,
                                 const Eigen::Ref<const Matd>& S, int a, int b,
                                 Linkage linkage);

// All maximal nodes of level <= depth: every node whose level is <= depth
// and whose parent (if any) has level > depth. Their leaf spans partition
// the leaves. Ordered by the smallest leaf id in each span.
std::vector<int> frontier_cut(const HierarchyTree& tree, int depth);

inline int tree_height(const HierarchyTree& tree) { return tree.height(); }

bool is_ancestor(const HierarchyTree& tree, int ancestor, int node);

// Text serialization. Header lines (magic EHMT 1, leaf_count, root_id,
// height), then one "node" line per node ordered by id carrying level,
// parent, children, merge similarity (6 significant digits, "-" for leaves)
// and the leaf span. Writing a freshly parsed tree reproduces the file byte
// for byte.
void write_tree(const HierarchyTree& tree, std::ostream& out);
void write_tree(const HierarchyTree& tree, const std::filesystem::path& path);
HierarchyTree read_tree(std::istream& in);
HierarchyTree read_tree(const std::filesystem::path& path);

}  // namespace ehm

#endif  // EHM_HIERARCHY_HPP_
