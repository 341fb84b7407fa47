#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "capos/structure.hpp"

namespace capos {

inline double gini(std::size_t pos, std::size_t neg) {
  if (pos + neg == 0) throw degenerate_error("gini of an empty node");
  const double p = static_cast<double>(pos) / static_cast<double>(pos + neg);
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

struct CartNode {
  std::size_t id = 0;
  std::size_t level = 0;
  NodeScope scope;
  std::optional<std::size_t> split_attribute;
  std::optional<std::pair<std::size_t, std::size_t>> children;  // (absent, present)
  std::optional<int> majority;  // nullopt on a tie
  double impurity = 0.0;
  Region region = Region::boundary;
  double positive_fraction = 0.0;
  std::size_t size = 0;
  std::size_t positives = 0;

  bool is_leaf() const { return !children.has_value(); }
};

// Greedy Gini comparator over the same binarized context. Shares the
// three-way structure's stopping controls and path-local attribute exclusion
// so the two trees differ only in how the split attribute is chosen.
struct CartTree {
  std::vector<std::string> attributes;
  std::size_t n_objects = 0;
  BuildParams params;
  BinarizationMap binarization;
  std::string fingerprint;
  std::vector<CartNode> nodes;

  const CartNode& root() const { return nodes.front(); }
};

namespace detail {

constexpr double kGiniEps = 1e-12;

// Size-weighted impurity reduction of splitting the scope on m, or nullopt
// when a side is empty.
inline std::optional<double> gini_reduction(const FormalDecisionContext& ctx,
                                            const NodeScope& scope, std::size_t m) {
  const ObjectSet present = scope.objects & ctx.column(m);
  const std::size_t n_present = present.count();
  const std::size_t n = scope.size();
  if (n_present == 0 || n_present == n) return std::nullopt;
  const std::size_t n_absent = n - n_present;
  const std::size_t pos = (scope.objects & ctx.decision()).count();
  const std::size_t pos_present = (present & ctx.decision()).count();
  const std::size_t pos_absent = pos - pos_present;
  const double parent = gini(pos, n - pos);
  const double weighted =
      (static_cast<double>(n_present) * gini(pos_present, n_present - pos_present) +
       static_cast<double>(n_absent) * gini(pos_absent, n_absent - pos_absent)) /
      static_cast<double>(n);
  return parent - weighted;
}

inline std::size_t build_cart_node(const FormalDecisionContext& ctx,
                                   const BuildParams& params, NodeScope scope,
                                   std::size_t depth, std::vector<CartNode>& nodes) {
  const std::size_t id = nodes.size();
  nodes.emplace_back();
  {
    CartNode& node = nodes[id];
    node.id = id;
    node.level = depth;
    node.size = scope.size();
    node.positives = (scope.objects & ctx.decision()).count();
    node.positive_fraction =
        node.size == 0 ? 0.0
                       : static_cast<double>(node.positives) / static_cast<double>(node.size);
    node.impurity = gini(node.positives, node.size - node.positives);
    node.region = classify_region(node.positive_fraction, params);
    const std::size_t negatives = node.size - node.positives;
    if (node.positives > negatives) node.majority = 1;
    else if (negatives > node.positives) node.majority = 0;
    node.scope = std::move(scope);
  }

  if (nodes[id].region != Region::boundary) return id;
  if (nodes[id].size < params.min_split) return id;
  if (params.max_depth && depth >= *params.max_depth) return id;

  std::optional<std::size_t> best;
  double best_reduction = 0.0;
  for (std::size_t a = 0; a < ctx.n_attributes(); ++a) {
    if (nodes[id].scope.conditions_on(a)) continue;
    const auto reduction = gini_reduction(ctx, nodes[id].scope, a);
    if (!reduction || *reduction <= kGiniEps) continue;
    if (!best || *reduction > best_reduction + kGiniEps) {
      best = a;
      best_reduction = *reduction;
    }
  }
  if (!best) return id;  // no split strictly decreases impurity

  auto [absent, present] = split(ctx, nodes[id].scope, *best);
  nodes[id].split_attribute = *best;
  const std::size_t left = build_cart_node(ctx, params, std::move(absent), depth + 1, nodes);
  const std::size_t right = build_cart_node(ctx, params, std::move(present), depth + 1, nodes);
  nodes[id].children = {left, right};
  return id;
}

}  // namespace detail

inline CartTree build_cart(const FormalDecisionContext& ctx, const BuildParams& params,
                           BinarizationMap binarization = {}) {
  params.validate();
  if (ctx.n_objects() == 0) throw degenerate_error("context has no objects");
  CartTree tree;
  tree.attributes = ctx.attributes();
  tree.n_objects = ctx.n_objects();
  tree.params = params;
  tree.binarization = std::move(binarization);
  tree.fingerprint = ctx.fingerprint();
  detail::build_cart_node(ctx, params, NodeScope::full(ctx), 0, tree.nodes);
  return tree;
}

}  // namespace capos
