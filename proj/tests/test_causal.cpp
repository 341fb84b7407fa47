#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include <capos/capos.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace capos;
using oracle::round3;

namespace {

struct Expected {
  const char* attribute;
  double cf;
  double log_abs;
  double nc;
};

// Causal correlation table of the watermelon context, 3-decimal rounded.
constexpr Expected kExpected[] = {
    {"clear", 0.141, 1.962, 0.877},
    {"concave", 0.560, 0.580, 0.641},
    {"black", 0.682, 0.383, 0.595},
    {"curled", 0.711, 0.341, 0.584},
    {"turbid", 0.714, 0.336, 0.583},
    {"hard slippery", 1.200, 0.182, 0.545},
};

}  // namespace

TEST_CASE("worked watermelon probabilities match the counting oracle") {
  const auto [ctx, map] = fixtures::watermelon();
  const NodeScope scope = NodeScope::full(ctx);
  const auto rows = oracle::watermelon_rows();
  const auto decision = oracle::watermelon_decision();

  const std::size_t clear = ctx.attribute_index("clear");
  const auto cells = oracle::count_cells(rows, decision, clear);

  // p(good | clear) = 8/9 and the do-estimate = 1/8, exactly
  REQUIRE(oracle::conditional(cells).num == 8);
  REQUIRE(oracle::conditional(cells).den == 9);
  REQUIRE(oracle::complement_conditional(cells).num == 1);
  REQUIRE(oracle::complement_conditional(cells).den == 8);
  REQUIRE(*conditional_prob(ctx, clear, scope) == 8.0 / 9.0);
  REQUIRE(*interventional_prob(ctx, clear, scope) == 1.0 / 8.0);

  const std::size_t turbid = ctx.attribute_index("turbid");
  REQUIRE(*conditional_prob(ctx, turbid, scope) == 6.0 / 10.0);

  const std::size_t concave = ctx.attribute_index("concave");
  REQUIRE(*interventional_prob(ctx, concave, scope) == 4.0 / 10.0);
  REQUIRE(causal_factor(ctx, concave, scope).cf == Catch::Approx(0.4 / (5.0 / 7.0)));
}

TEST_CASE("causal factor equals the counting oracle on every watermelon attribute") {
  const auto [ctx, map] = fixtures::watermelon();
  const NodeScope scope = NodeScope::full(ctx);
  const auto rows = oracle::watermelon_rows();
  const auto decision = oracle::watermelon_decision();
  for (std::size_t a = 0; a < ctx.n_attributes(); ++a) {
    const auto expected = oracle::causal_factor(oracle::count_cells(rows, decision, a));
    const CausalScore got = causal_factor(ctx, a, scope);
    REQUIRE(got.defined == expected.defined);
    if (expected.defined) REQUIRE(got.cf == Catch::Approx(expected.cf).epsilon(1e-14));
  }
}

TEST_CASE("watermelon causal table reproduces at 3 decimals") {
  const auto [ctx, map] = fixtures::watermelon();
  const NodeScope scope = NodeScope::full(ctx);
  for (const Expected& e : kExpected) {
    const CausalScore s = causal_factor(ctx, e.attribute, scope);
    REQUIRE(s.defined);
    REQUIRE(round3(s.cf) == e.cf);
    REQUIRE(round3(s.log_abs) == e.log_abs);
    REQUIRE(round3(s.nc) == e.nc);
  }
}

TEST_CASE("probabilities distinguish undefined from zero") {
  auto ctx = FormalDecisionContext::from_rows(
      {"everywhere", "nowhere", "m"},
      {{1, 0, 1}, {1, 0, 0}, {1, 0, 1}}, {1, 0, 1});
  const NodeScope scope = NodeScope::full(ctx);
  REQUIRE_FALSE(conditional_prob(ctx, 1, scope).has_value());  // nobody has it
  REQUIRE_FALSE(interventional_prob(ctx, 0, scope).has_value());  // everybody has it
  REQUIRE(conditional_prob(ctx, 0, scope).has_value());
  // score is undefined whenever a denominator is empty
  REQUIRE_FALSE(causal_factor(ctx, 0, scope).defined);
  REQUIRE_FALSE(causal_factor(ctx, 1, scope).defined);
}

TEST_CASE("p(c|m) = 0 makes the score undefined") {
  auto ctx = FormalDecisionContext::from_rows({"m"}, {{1}, {1}, {0}, {0}}, {0, 0, 1, 0});
  REQUIRE_FALSE(causal_factor(ctx, std::size_t{0}, NodeScope::full(ctx)).defined);
}

TEST_CASE("an attribute identical to the decision is a focus causal attribute") {
  auto ctx = FormalDecisionContext::from_rows({"m"}, {{1}, {1}, {0}}, {1, 1, 0});
  const CausalScore s = causal_factor(ctx, std::size_t{0}, NodeScope::full(ctx));
  REQUIRE(s.defined);
  REQUIRE(s.cf == 0.0);
  REQUIRE(s.nc == 1.0);
  REQUIRE(s.log_abs == std::numeric_limits<double>::max());
}

TEST_CASE("normalized causality") {
  SECTION("watermelon clear value, as the exact ratio 9/64") {
    const double nc = normalized_causality(9.0 / 64.0);
    REQUIRE(round3(std::fabs(std::log(9.0 / 64.0))) == 1.962);
    REQUIRE(round3(nc) == 0.877);
  }
  SECTION("fixed points") {
    REQUIRE(normalized_causality(1.0) == 0.5);
    REQUIRE(normalized_causality(0.0) == 1.0);
    REQUIRE(round3(normalized_causality(1.2)) == 0.545);
  }
  SECTION("undefined passes through") {
    REQUIRE_FALSE(normalized_causality(std::optional<double>{}).has_value());
  }
  SECTION("sigmoid identity holds to 1e-12") {
    for (double cf : {0.01, 0.141, 0.5, 0.99, 1.0, 1.2, 3.7, 250.0}) {
      const double expected = 1.0 / (1.0 + std::exp(-std::fabs(std::log(cf))));
      REQUIRE(normalized_causality(cf) == Catch::Approx(expected).margin(1e-12));
    }
  }
  SECTION("range is [1/2, 1] with 1/2 only at cf = 1") {
    for (double cf = 0.0; cf <= 8.0; cf += 0.05) {
      const double nc = normalized_causality(cf);
      REQUIRE(nc >= 0.5);
      REQUIRE(nc <= 1.0);
      if (cf != 1.0) REQUIRE(nc > 0.5);
    }
  }
}

TEST_CASE("ranking sorts by nc with declaration order on ties") {
  const auto [ctx, map] = fixtures::watermelon();
  const auto ranked =
      rank_attributes(ctx, all_attribute_indices(ctx), NodeScope::full(ctx));
  REQUIRE(ranked.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    REQUIRE(ranked[i].attribute == kExpected[i].attribute);
    REQUIRE(round3(ranked[i].nc) == kExpected[i].nc);
  }
}

TEST_CASE("a single candidate ranks alone") {
  const auto [ctx, map] = fixtures::watermelon();
  const std::size_t one[] = {ctx.attribute_index("black")};
  const auto ranked = rank_attributes(ctx, one, NodeScope::full(ctx));
  REQUIRE(ranked.size() == 1);
  REQUIRE(ranked[0].attribute == "black");
}

TEST_CASE("duplicated columns score identically and keep declaration order") {
  auto ctx = FormalDecisionContext::from_rows(
      {"m", "m_copy", "other"},
      {{1, 1, 0}, {1, 1, 1}, {0, 0, 1}, {0, 0, 0}, {1, 1, 1}}, {1, 0, 1, 0, 1});
  const NodeScope scope = NodeScope::full(ctx);
  const CausalScore a = causal_factor(ctx, std::size_t{0}, scope);
  const CausalScore b = causal_factor(ctx, std::size_t{1}, scope);
  REQUIRE(a.defined == b.defined);
  REQUIRE(a.cf == b.cf);
  REQUIRE(a.nc == b.nc);
  const auto ranked = rank_attributes(ctx, all_attribute_indices(ctx), scope);
  const auto pos = [&](const std::string& name) {
    for (std::size_t i = 0; i < ranked.size(); ++i)
      if (ranked[i].attribute == name) return i;
    return std::size_t(99);
  };
  REQUIRE(pos("m") < pos("m_copy"));

  // same equality inside a restricted scope: objects without "other" = {0, 3}
  NodeScope sub = scope;
  sub.conditioned.emplace_back(2, false);
  sub.objects.reset(1);
  sub.objects.reset(2);
  sub.objects.reset(4);
  const CausalScore a2 = causal_factor(ctx, std::size_t{0}, sub);
  const CausalScore b2 = causal_factor(ctx, std::size_t{1}, sub);
  REQUIRE(a2.defined == b2.defined);
  if (a2.defined) REQUIRE(a2.cf == b2.cf);
}

TEST_CASE("undefined scores rank last") {
  auto ctx = FormalDecisionContext::from_rows(
      {"constant", "useful"}, {{1, 1}, {1, 0}, {1, 1}, {1, 0}}, {1, 0, 1, 0});
  const auto ranked = rank_attributes(ctx, all_attribute_indices(ctx), NodeScope::full(ctx));
  REQUIRE(ranked[0].attribute == "useful");
  REQUIRE(ranked[0].defined);
  REQUIRE_FALSE(ranked[1].defined);
}

TEST_CASE("cf is monotone in the do-estimate at fixed conditional") {
  // grid over empirical counts: conditional fixed at 3/5, do-estimate sweeps
  double previous = -1.0;
  for (std::size_t k = 0; k <= 6; ++k) {
    const CausalScore s = score_from_counts(3, 5, k, 6);
    REQUIRE(s.defined);
    REQUIRE(s.cf > previous);
    previous = s.cf;
    const double conditional = 3.0 / 5.0;
    const double interventional = static_cast<double>(k) / 6.0;
    if (interventional < conditional) REQUIRE(s.cf < 1.0);
    if (interventional > conditional) REQUIRE(s.cf > 1.0);
  }
  // crossing the conditional crosses cf = 1
  REQUIRE(score_from_counts(3, 5, 3, 5).cf == 1.0);
}

TEST_CASE("backdoor adjustment is available as an experimental estimator") {
  // z confounds m and the decision
  auto ctx = FormalDecisionContext::from_rows(
      {"z", "m"},
      {{1, 1}, {1, 1}, {1, 1}, {1, 0}, {0, 1}, {0, 0}, {0, 0}, {0, 0}},
      {1, 1, 0, 1, 0, 0, 0, 1});
  const NodeScope scope = NodeScope::full(ctx);
  const std::size_t m = 1;

  SECTION("adjusting for z changes the estimate") {
    CausalOptions opts;
    opts.estimator = DoEstimator::backdoor;
    opts.adjustment = {0};
    const auto adjusted = interventional_prob(ctx, m, scope, opts);
    REQUIRE(adjusted.has_value());
    REQUIRE(*adjusted == Catch::Approx(1.0 / 3.0));
    const CausalScore s = causal_factor(ctx, m, scope, opts);
    REQUIRE(s.cf == Catch::Approx(2.0 / 3.0));
    REQUIRE(causal_factor(ctx, m, scope).cf == Catch::Approx(1.0));
  }
  SECTION("the empty adjustment set collapses to the plain conditional") {
    CausalOptions opts;
    opts.estimator = DoEstimator::backdoor;
    const CausalScore s = causal_factor(ctx, m, scope, opts);
    REQUIRE(s.defined);
    REQUIRE(s.cf == Catch::Approx(1.0));
  }
  SECTION("positivity violations are undefined") {
    // within z = 0 nobody has m2
    auto ctx2 = FormalDecisionContext::from_rows(
        {"z", "m2"}, {{1, 1}, {1, 0}, {0, 0}, {0, 0}}, {1, 0, 1, 0});
    CausalOptions opts;
    opts.estimator = DoEstimator::backdoor;
    opts.adjustment = {0};
    REQUIRE_FALSE(interventional_prob(ctx2, 1, NodeScope::full(ctx2), opts).has_value());
  }
}

TEST_CASE("scoring a conditioned attribute is a logic error") {
  const auto [ctx, map] = fixtures::watermelon();
  NodeScope scope = NodeScope::full(ctx);
  scope.conditioned.emplace_back(ctx.attribute_index("clear"), true);
  scope.objects &= ctx.column(ctx.attribute_index("clear"));
  REQUIRE_THROWS_AS(causal_factor(ctx, ctx.attribute_index("clear"), scope),
                    std::logic_error);
}
