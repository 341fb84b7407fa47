#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "capos/binarize.hpp"
#include "capos/causal.hpp"

namespace capos {

enum class Region { positive, negative, boundary };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::positive: return "POSITIVE";
    case Region::negative: return "NEGATIVE";
    case Region::boundary: return "BOUNDARY";
  }
  return "?";
}

enum class LeafReason {
  pure_region,
  min_samples,
  no_defined_candidate,
  attribute_exhausted,
  max_depth,
};

inline const char* leaf_reason_name(LeafReason r) {
  switch (r) {
    case LeafReason::pure_region: return "pure-region";
    case LeafReason::min_samples: return "min-samples";
    case LeafReason::no_defined_candidate: return "no-defined-candidate";
    case LeafReason::attribute_exhausted: return "attribute-exhausted";
    case LeafReason::max_depth: return "max-depth";
  }
  return "?";
}

struct BuildParams {
  double alpha = 0.90;  // positive-region threshold
  double beta = 0.15;   // negative-region threshold
  std::size_t min_split = 4;
  std::optional<std::size_t> max_depth;

  void validate() const {
    if (!(beta >= 0.0 && beta < alpha && alpha <= 1.0))
      throw input_error("build parameters require 0 <= beta < alpha <= 1");
    if (min_split < 1) throw input_error("min-split must be at least 1");
  }

  // Literal pure/boundary reading: a node is kept only when uniformly decided.
  static BuildParams strict_purity() {
    BuildParams p;
    p.alpha = 1.0;
    p.beta = 0.0;
    p.min_split = 2;
    return p;
  }
};

inline Region classify_region(double positive_fraction, const BuildParams& params) {
  params.validate();
  if (positive_fraction >= params.alpha) return Region::positive;
  if (positive_fraction <= params.beta) return Region::negative;
  return Region::boundary;
}

struct StructureNode {
  std::size_t id = 0;
  std::size_t level = 0;  // root at 0, its children at 1
  NodeScope scope;
  std::optional<std::size_t> split_attribute;
  std::optional<CausalScore> split_score;
  // (absent-branch child id, present-branch child id)
  std::optional<std::pair<std::size_t, std::size_t>> children;
  Region region = Region::boundary;
  double positive_fraction = 0.0;
  std::size_t size = 0;
  std::size_t positives = 0;
  std::optional<LeafReason> leaf_reason;

  bool is_leaf() const { return !children.has_value(); }
};

// The recursively grown three-way structure: nodes in preorder (absent branch
// first), flat indices doubling as node ids.
struct Structure {
  std::vector<std::string> attributes;
  std::size_t n_objects = 0;
  BuildParams params;
  BinarizationMap binarization;
  std::string fingerprint;
  std::vector<StructureNode> nodes;

  const StructureNode& root() const { return nodes.front(); }

  std::size_t leaf_count() const {
    std::size_t n = 0;
    for (const StructureNode& node : nodes)
      if (node.is_leaf()) ++n;
    return n;
  }

  std::size_t depth() const {
    std::size_t d = 0;
    for (const StructureNode& node : nodes) d = std::max(d, node.level);
    return d;
  }
};

// Bipartition of the scope by one attribute: (absent side, present side).
inline std::pair<NodeScope, NodeScope> split(const FormalDecisionContext& ctx,
                                             const NodeScope& scope, std::size_t m) {
  if (scope.conditions_on(m))
    throw std::logic_error("attribute already conditioned on this path");
  NodeScope present{scope.objects & ctx.column(m), scope.conditioned};
  NodeScope absent{scope.objects - ctx.column(m), scope.conditioned};
  present.conditioned.emplace_back(m, true);
  absent.conditioned.emplace_back(m, false);
  if (present.objects.none() || absent.objects.none())
    throw std::logic_error("split on " + ctx.attribute_name(m) +
                           " leaves one side empty");
  return {std::move(absent), std::move(present)};
}

// Best partition attribute for the scope: maximal nc among defined scores,
// declaration order on ties. A defined score implies both sides of the split
// are nonempty (an empty side makes one conditional undefined). Returns
// nullopt when nothing is scorable.
inline std::optional<CausalScore> select_split(const FormalDecisionContext& ctx,
                                               std::span<const std::size_t> candidates,
                                               const NodeScope& scope) {
  if (candidates.empty()) return std::nullopt;
  const std::vector<CausalScore> ranked = rank_attributes(ctx, candidates, scope);
  if (ranked.empty() || !ranked.front().defined) return std::nullopt;
  return ranked.front();
}

namespace detail {

inline std::size_t build_node(const FormalDecisionContext& ctx,
                              const BuildParams& params, NodeScope scope,
                              std::size_t depth, std::vector<StructureNode>& nodes) {
  const std::size_t id = nodes.size();
  nodes.emplace_back();
  {
    StructureNode& node = nodes[id];
    node.id = id;
    node.level = depth;
    node.size = scope.size();
    node.positives = (scope.objects & ctx.decision()).count();
    node.positive_fraction =
        node.size == 0 ? 0.0
                       : static_cast<double>(node.positives) / static_cast<double>(node.size);
    node.region = classify_region(node.positive_fraction, params);
    node.scope = std::move(scope);
  }

  const auto leaf = [&](LeafReason reason) {
    nodes[id].leaf_reason = reason;
    return id;
  };

  if (nodes[id].region != Region::boundary) return leaf(LeafReason::pure_region);
  if (nodes[id].size < params.min_split) return leaf(LeafReason::min_samples);
  if (params.max_depth && depth >= *params.max_depth) return leaf(LeafReason::max_depth);

  // Candidates: attributes not yet conditioned along this path.
  std::vector<std::size_t> candidates;
  for (std::size_t a = 0; a < ctx.n_attributes(); ++a)
    if (!nodes[id].scope.conditions_on(a)) candidates.push_back(a);
  if (candidates.empty()) return leaf(LeafReason::attribute_exhausted);

  const auto selected = select_split(ctx, candidates, nodes[id].scope);
  if (!selected) return leaf(LeafReason::no_defined_candidate);

  auto [absent, present] = split(ctx, nodes[id].scope, selected->attribute_index);
  nodes[id].split_attribute = selected->attribute_index;
  nodes[id].split_score = *selected;
  const std::size_t left = build_node(ctx, params, std::move(absent), depth + 1, nodes);
  const std::size_t right = build_node(ctx, params, std::move(present), depth + 1, nodes);
  nodes[id].children = {left, right};
  return id;
}

}  // namespace detail

inline Structure build_structure(const FormalDecisionContext& ctx,
                                 const BuildParams& params,
                                 BinarizationMap binarization = {}) {
  params.validate();
  if (ctx.n_objects() == 0) throw degenerate_error("context has no objects");
  Structure s;
  s.attributes = ctx.attributes();
  s.n_objects = ctx.n_objects();
  s.params = params;
  s.binarization = std::move(binarization);
  s.fingerprint = ctx.fingerprint();
  detail::build_node(ctx, params, NodeScope::full(ctx), 0, s.nodes);
  return s;
}

}  // namespace capos
