#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "capos/context.hpp"

namespace capos {

// Causal strength of one attribute against the decision.
//
// cf       ratio p(c | attribute absent) / p(c | attribute present); the
//          absent-side conditional is the operational do() estimate
// log_abs  |ln cf|, saturated to the largest double when cf == 0
// nc       sigmoid of log_abs, in [1/2, 1]; cf == 0 maps to the supremum 1
// defined  false when either conditional has an empty denominator or when
//          p(c | attribute present) is 0 (no correlation, hence no causality)
struct CausalScore {
  std::size_t attribute_index = 0;
  std::string attribute;
  double cf = 0.0;
  double log_abs = 0.0;
  double nc = 0.0;
  bool defined = false;
};

inline double normalized_causality(double cf) {
  if (cf == 0.0) return 1.0;
  return 1.0 / (1.0 + std::exp(-std::fabs(std::log(cf))));
}

inline std::optional<double> normalized_causality(std::optional<double> cf) {
  if (!cf) return std::nullopt;
  return normalized_causality(*cf);
}

// Counts-level scoring shared by the context path and the cut search.
inline CausalScore score_from_counts(std::size_t pos_with, std::size_t with,
                                     std::size_t pos_without, std::size_t without) {
  CausalScore s;
  if (with == 0 || without == 0 || pos_with == 0) return s;  // undefined
  const double conditional = static_cast<double>(pos_with) / static_cast<double>(with);
  const double interventional =
      static_cast<double>(pos_without) / static_cast<double>(without);
  s.defined = true;
  s.cf = interventional / conditional;
  s.log_abs = s.cf == 0.0 ? std::numeric_limits<double>::max()
                          : std::fabs(std::log(s.cf));
  s.nc = normalized_causality(s.cf);
  return s;
}

// The object subset a structure node works on, plus the (attribute, presence)
// conditions that produced it.
struct NodeScope {
  ObjectSet objects;
  std::vector<std::pair<std::size_t, bool>> conditioned;

  static NodeScope full(const FormalDecisionContext& ctx) {
    return NodeScope{ctx.all_objects(), {}};
  }

  bool conditions_on(std::size_t attribute) const {
    for (const auto& [a, present] : conditioned)
      if (a == attribute) return true;
    return false;
  }

  std::size_t size() const { return objects.count(); }
};

enum class DoEstimator {
  complement,  // p(c | attribute absent within scope)
  backdoor,    // experimental: adjust over a user-supplied attribute set
};

struct CausalOptions {
  DoEstimator estimator = DoEstimator::complement;
  std::vector<std::size_t> adjustment;  // backdoor only
};

namespace detail {

inline void check_scorable(const FormalDecisionContext& ctx, std::size_t m,
                           const NodeScope& scope) {
  if (m >= ctx.n_attributes()) throw input_error("attribute index out of range");
  if (scope.conditions_on(m))
    throw std::logic_error("attribute already conditioned on this path");
}

}  // namespace detail

// p(decision | m present) within the scope; empty denominator -> nullopt.
inline std::optional<double> conditional_prob(const FormalDecisionContext& ctx,
                                              std::size_t m, const NodeScope& scope) {
  detail::check_scorable(ctx, m, scope);
  const ObjectSet with = scope.objects & ctx.column(m);
  const std::size_t denom = with.count();
  if (denom == 0) return std::nullopt;
  return static_cast<double>((with & ctx.decision()).count()) /
         static_cast<double>(denom);
}

// Do-estimate of p(decision | do(m)) within the scope. The default estimator
// conditions on the attribute's absence; the backdoor variant standardizes
// p(c | m, z) over the adjustment attributes' value patterns.
inline std::optional<double> interventional_prob(const FormalDecisionContext& ctx,
                                                 std::size_t m, const NodeScope& scope,
                                                 const CausalOptions& opts = {}) {
  detail::check_scorable(ctx, m, scope);
  if (opts.estimator == DoEstimator::complement) {
    const ObjectSet without = scope.objects - ctx.column(m);
    const std::size_t denom = without.count();
    if (denom == 0) return std::nullopt;
    return static_cast<double>((without & ctx.decision()).count()) /
           static_cast<double>(denom);
  }

  // Backdoor adjustment: group scope objects by their pattern over the
  // adjustment attributes; any pattern without an m-present object breaks
  // positivity and the estimate is undefined.
  const std::size_t total = scope.size();
  if (total == 0) return std::nullopt;
  std::map<std::vector<bool>, std::pair<std::size_t, std::pair<std::size_t, std::size_t>>>
      groups;  // pattern -> (group size, (m-present count, m-present positives))
  for (auto o = scope.objects.find_first(); o != ObjectSet::npos;
       o = scope.objects.find_next(o)) {
    std::vector<bool> pattern;
    pattern.reserve(opts.adjustment.size());
    for (std::size_t z : opts.adjustment) pattern.push_back(ctx.column(z).test(o));
    auto& g = groups[pattern];
    ++g.first;
    if (ctx.column(m).test(o)) {
      ++g.second.first;
      if (ctx.decision().test(o)) ++g.second.second;
    }
  }
  double estimate = 0.0;
  for (const auto& [pattern, g] : groups) {
    const auto [size, present] = g;
    if (present.first == 0) return std::nullopt;  // positivity violation
    const double weight = static_cast<double>(size) / static_cast<double>(total);
    estimate += weight * static_cast<double>(present.second) /
                static_cast<double>(present.first);
  }
  return estimate;
}

inline CausalScore causal_factor(const FormalDecisionContext& ctx, std::size_t m,
                                 const NodeScope& scope,
                                 const CausalOptions& opts = {}) {
  detail::check_scorable(ctx, m, scope);
  CausalScore s;
  s.attribute_index = m;
  s.attribute = ctx.attribute_name(m);
  const auto conditional = conditional_prob(ctx, m, scope);
  const auto interventional = interventional_prob(ctx, m, scope, opts);
  if (!conditional || !interventional || *conditional == 0.0) return s;
  s.defined = true;
  s.cf = *interventional / *conditional;
  s.log_abs = s.cf == 0.0 ? std::numeric_limits<double>::max()
                          : std::fabs(std::log(s.cf));
  s.nc = normalized_causality(s.cf);
  return s;
}

inline CausalScore causal_factor(const FormalDecisionContext& ctx,
                                 std::string_view name, const NodeScope& scope,
                                 const CausalOptions& opts = {}) {
  return causal_factor(ctx, ctx.attribute_index(name), scope, opts);
}

// Scores every candidate within the scope. Defined scores first, by nc
// descending; equal scores and undefined scores keep declaration order.
inline std::vector<CausalScore> rank_attributes(const FormalDecisionContext& ctx,
                                                std::span<const std::size_t> candidates,
                                                const NodeScope& scope,
                                                const CausalOptions& opts = {}) {
  std::vector<CausalScore> scores;
  scores.reserve(candidates.size());
  for (std::size_t m : candidates) scores.push_back(causal_factor(ctx, m, scope, opts));
  std::stable_sort(scores.begin(), scores.end(),
                   [](const CausalScore& a, const CausalScore& b) {
                     if (a.defined != b.defined) return a.defined;
                     if (!a.defined) return false;
                     return a.nc > b.nc;
                   });
  return scores;
}

inline std::vector<std::size_t> all_attribute_indices(const FormalDecisionContext& ctx) {
  std::vector<std::size_t> idx(ctx.n_attributes());
  for (std::size_t a = 0; a < idx.size(); ++a) idx[a] = a;
  return idx;
}

}  // namespace capos
