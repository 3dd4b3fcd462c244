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

#include "ehm/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ehm {

namespace {

void validate_similarity(const Eigen::Ref<const Matd>& s) {
  if (s.rows() == 0 || s.cols() == 0) {
    throw Error(Errc::empty_matrix, "similarity matrix is empty");
  }
  if (s.rows() != s.cols()) {
    throw Error(Errc::not_symmetric, "similarity matrix is not square");
  }
  const int n = static_cast<int>(s.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = s(i, j);
      if (std::isnan(v)) {
        throw Error(Errc::invalid_value, "NaN similarity");
      }
      if (v < 0.0) {
        throw Error(Errc::negative_entry, "negative similarity");
      }
      if (j > i && s(i, j) != s(j, i)) {
        throw Error(Errc::not_symmetric, "similarity matrix is asymmetric");
      }
    }
  }
}

std::vector<int> merged_span(const std::vector<int>& a,
                             const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

HierarchyTree build_tree(const Eigen::Ref<const Matd>& S, Linkage linkage) {
  validate_similarity(S);
  const int n = static_cast<int>(S.rows());

  HierarchyTree tree;
  tree.leaf_count = n;
  tree.nodes.resize(2 * n - 1);
  for (int i = 0; i < n; ++i) {
    tree.nodes[i].id = i;
    tree.nodes[i].level = 1;
    tree.nodes[i].leaf_span = {i};
  }
  tree.root_id = 2 * n - 2;
  if (n == 1) return tree;

  // Active-pair similarity cache, indexed by node id. Only rows of live
  // nodes are meaningful.
  Matd cache(2 * n - 1, 2 * n - 1);
  cache.topLeftCorner(n, n) = S;

  std::vector<int> active(n);
  for (int i = 0; i < n; ++i) active[i] = i;

  for (int k = 0; k < n - 1; ++k) {
    // Active ids are ascending, so scanning pairs in order makes the first
    // maximum the lexicographically smallest (min id, max id) tie winner.
    double best = -1.0;
    size_t best_i = 0, best_j = 1;
    for (size_t i = 0; i + 1 < active.size(); ++i) {
      for (size_t j = i + 1; j < active.size(); ++j) {
        const double v = cache(active[i], active[j]);
        if (v > best) {
          best = v;
          best_i = i;
          best_j = j;
        }
      }
    }
    const int a = active[best_i];
    const int b = active[best_j];
    const int id = n + k;

    TreeNode& node = tree.nodes[id];
    node.id = id;
    node.level = std::max(tree.nodes[a].level, tree.nodes[b].level) + 1;
    node.children = {a, b};
    node.leaf_span = merged_span(tree.nodes[a].leaf_span,
                                 tree.nodes[b].leaf_span);
    node.merge_similarity = best;
    tree.nodes[a].parent = id;
    tree.nodes[b].parent = id;

    active.erase(active.begin() + best_j);
    active.erase(active.begin() + best_i);
    const double wa = static_cast<double>(tree.nodes[a].leaf_span.size());
    const double wb = static_cast<double>(tree.nodes[b].leaf_span.size());
    for (int m : active) {
      const double v =
          linkage == Linkage::children_average
              ? 0.5 * (cache(a, m) + cache(b, m))
              : (wa * cache(a, m) + wb * cache(b, m)) / (wa + wb);
      cache(id, m) = v;
      cache(m, id) = v;
    }
    active.push_back(id);
  }
  return tree;
}

std::vector<HierarchyTree> build_trees(std::span<const Matd> batch,
                                       Linkage linkage) {
  std::vector<HierarchyTree> trees;
  trees.reserve(batch.size());
  for (const Matd& s : batch) trees.push_back(build_tree(s, linkage));
  return trees;
}

bool is_ancestor(const HierarchyTree& tree, int ancestor, int node) {
  for (int cur = node; cur >= 0; cur = tree.nodes[cur].parent) {
    if (cur == ancestor) return true;
  }
  return false;
}

namespace {

double recursive_children_average(const HierarchyTree& tree,
                                  const Eigen::Ref<const Matd>& s, int a,
                                  int b) {
  const TreeNode& na = tree.nodes[a];
  const TreeNode& nb = tree.nodes[b];
  if (na.is_leaf() && nb.is_leaf()) return s(a, b);
  // A leaf counts as its own single child.
  const std::array<int, 2> ca = na.is_leaf() ? std::array<int, 2>{a, -1}
                                             : na.children;
  const std::array<int, 2> cb = nb.is_leaf() ? std::array<int, 2>{b, -1}
                                             : nb.children;
  double sum = 0.0;
  int count = 0;
  for (int u : ca) {
    if (u < 0) continue;
    for (int v : cb) {
      if (v < 0) continue;
      sum += recursive_children_average(tree, s, u, v);
      ++count;
    }
  }
  return sum / count;
}

}  // namespace

double pair_similarity_recursive(const HierarchyTree& tree,
                                 const Eigen::Ref<const Matd>& S, int a, int b,
                                 Linkage linkage) {
  if (a < 0 || b < 0 || a >= static_cast<int>(tree.nodes.size()) ||
      b >= static_cast<int>(tree.nodes.size())) {
    throw Error(Errc::range_out_of_bounds, "node id out of range");
  }
  if (a == b || is_ancestor(tree, a, b) || is_ancestor(tree, b, a)) {
    throw Error(Errc::ancestor_pair, "nodes are not disjoint subtrees");
  }
  if (S.rows() != tree.leaf_count || S.cols() != tree.leaf_count) {
    throw Error(Errc::grid_mismatch,
                "similarity matrix does not match the tree's leaves");
  }
  if (linkage == Linkage::children_average) {
    return recursive_children_average(tree, S, a, b);
  }
  const std::vector<int>& sa = tree.nodes[a].leaf_span;
  const std::vector<int>& sb = tree.nodes[b].leaf_span;
  double sum = 0.0;
  for (int i : sa) {
    for (int j : sb) sum += S(i, j);
  }
  return sum / (static_cast<double>(sa.size()) * sb.size());
}

std::vector<int> frontier_cut(const HierarchyTree& tree, int depth) {
  if (depth < 1) {
    throw Error(Errc::depth_out_of_range, "depth must be >= 1");
  }
  std::vector<int> frontier;
  std::vector<int> stack{tree.root_id};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const TreeNode& node = tree.nodes[id];
    if (node.level <= depth) {
      frontier.push_back(id);
    } else {
      stack.push_back(node.children[0]);
      stack.push_back(node.children[1]);
    }
  }
  std::sort(frontier.begin(), frontier.end(), [&](int a, int b) {
    return tree.nodes[a].leaf_span.front() < tree.nodes[b].leaf_span.front();
  });
  return frontier;
}

void write_tree(const HierarchyTree& tree, std::ostream& out) {
  out << "EHMT 1\n";
  out << "leaf_count " << tree.leaf_count << "\n";
  out << "root_id " << tree.root_id << "\n";
  out << "height " << tree.height() << "\n";
  for (const TreeNode& node : tree.nodes) {
    out << "node " << node.id << " level " << node.level << " parent ";
    if (node.parent < 0) {
      out << '-';
    } else {
      out << node.parent;
    }
    out << " children ";
    if (node.is_leaf()) {
      out << "- -";
    } else {
      out << node.children[0] << ' ' << node.children[1];
    }
    out << " sim ";
    if (node.is_leaf()) {
      out << '-';
    } else {
      out << format_g6(node.merge_similarity);
    }
    out << " span";
    for (int leaf : node.leaf_span) out << ' ' << leaf;
    out << '\n';
  }
  if (!out) {
    throw Error(Errc::io_error, "write failed");
  }
}

void write_tree(const HierarchyTree& tree,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::io_error, "cannot open " + path.string() +
                                    " for writing");
  }
  write_tree(tree, out);
}

namespace {

void expect_word(std::istringstream& line, const char* word) {
  std::string token;
  if (!(line >> token) || token != word) {
    throw Error(Errc::invalid_value,
                std::string("expected '") + word + "' in tree file");
  }
}

int read_id_or_dash(std::istringstream& line) {
  std::string token;
  if (!(line >> token)) {
    throw Error(Errc::invalid_value, "truncated node line in tree file");
  }
  if (token == "-") return -1;
  return std::stoi(token);
}

}  // namespace

HierarchyTree read_tree(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "EHMT 1") {
    throw Error(Errc::malformed_header, "missing EHMT header");
  }
  auto read_field = [&](const char* key) -> long long {
    if (!std::getline(in, line)) {
      throw Error(Errc::malformed_header, "truncated tree header");
    }
    std::istringstream ls(line);
    expect_word(ls, key);
    long long value;
    if (!(ls >> value)) {
      throw Error(Errc::malformed_header, std::string("bad ") + key);
    }
    return value;
  };
  const long long leaf_count = read_field("leaf_count");
  const long long root_id = read_field("root_id");
  const long long height = read_field("height");
  if (leaf_count < 1 || root_id != 2 * leaf_count - 2) {
    throw Error(Errc::malformed_header, "inconsistent tree header");
  }

  HierarchyTree tree;
  tree.leaf_count = static_cast<int>(leaf_count);
  tree.root_id = static_cast<int>(root_id);
  tree.nodes.resize(2 * leaf_count - 1);

  for (int id = 0; id < 2 * leaf_count - 1; ++id) {
    if (!std::getline(in, line)) {
      throw Error(Errc::dimension_mismatch, "missing node lines in tree file");
    }
    std::istringstream ls(line);
    TreeNode node;
    expect_word(ls, "node");
    ls >> node.id;
    expect_word(ls, "level");
    ls >> node.level;
    expect_word(ls, "parent");
    node.parent = read_id_or_dash(ls);
    expect_word(ls, "children");
    node.children[0] = read_id_or_dash(ls);
    node.children[1] = read_id_or_dash(ls);
    expect_word(ls, "sim");
    std::string sim;
    ls >> sim;
    if (sim != "-") node.merge_similarity = std::strtod(sim.c_str(), nullptr);
    expect_word(ls, "span");
    int leaf;
    while (ls >> leaf) node.leaf_span.push_back(leaf);
    if (node.id != id || node.level < 1 || node.leaf_span.empty()) {
      throw Error(Errc::invalid_value, "bad node line in tree file");
    }
    tree.nodes[id] = std::move(node);
  }

  // Cross-check the declared structure before trusting it.
  for (int id = 0; id < 2 * leaf_count - 1; ++id) {
    const TreeNode& node = tree.nodes[id];
    if (id < leaf_count) {
      if (!node.is_leaf() || node.level != 1 ||
          node.leaf_span != std::vector<int>{id}) {
        throw Error(Errc::invalid_value, "bad leaf node in tree file");
      }
    } else {
      const int c0 = node.children[0];
      const int c1 = node.children[1];
      if (c0 < 0 || c1 < 0 || c0 >= id || c1 >= id || c0 == c1 ||
          tree.nodes[c0].parent != id || tree.nodes[c1].parent != id) {
        throw Error(Errc::invalid_value, "bad children in tree file");
      }
      if (node.level !=
          std::max(tree.nodes[c0].level, tree.nodes[c1].level) + 1) {
        throw Error(Errc::invalid_value, "level rule violated in tree file");
      }
      if (node.leaf_span !=
          merged_span(tree.nodes[c0].leaf_span, tree.nodes[c1].leaf_span)) {
        throw Error(Errc::invalid_value, "leaf span mismatch in tree file");
      }
    }
    if ((node.parent < 0) != (id == tree.root_id)) {
      throw Error(Errc::invalid_value, "parent links broken in tree file");
    }
  }
  if (tree.height() != height) {
    throw Error(Errc::invalid_value, "declared height is wrong");
  }
  return tree;
}

HierarchyTree read_tree(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_error, "cannot open " + path.string());
  }
  return read_tree(in);
}

}  // namespace ehm
