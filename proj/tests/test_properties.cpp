#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include <capos/capos.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace capos;

namespace {

FormalDecisionContext enumerated_context(std::size_t n, unsigned incidence,
                                         unsigned decision) {
  std::vector<std::vector<int>> rows(n, std::vector<int>(2));
  std::vector<int> dec(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i][0] = (incidence >> (2 * i)) & 1;
    rows[i][1] = (incidence >> (2 * i + 1)) & 1;
    dec[i] = (decision >> i) & 1;
  }
  return FormalDecisionContext::from_rows({"m0", "m1"}, rows, dec);
}

FormalDecisionContext random_context(std::mt19937& rng) {
  const std::size_t n = 1 + rng() % 64;
  const std::size_t attrs = 1 + rng() % 10;
  const double density = 0.2 + 0.6 * (rng() % 3) / 2.0;
  std::vector<std::vector<int>> rows(n, std::vector<int>(attrs));
  std::vector<int> dec(n);
  std::bernoulli_distribution incidence(density);
  std::bernoulli_distribution decision(0.3 + 0.4 * (rng() % 2));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < attrs; ++a) rows[i][a] = incidence(rng);
    dec[i] = decision(rng);
  }
  std::vector<std::string> names;
  for (std::size_t a = 0; a < attrs; ++a) names.push_back("a" + std::to_string(a));
  return FormalDecisionContext::from_rows(names, rows, dec);
}

BuildParams random_params(std::mt19937& rng) {
  BuildParams p;
  switch (rng() % 3) {
    case 0: break;
    case 1: p.alpha = 1.0; p.beta = 0.0; break;
    case 2: p.alpha = 0.7; p.beta = 0.3; break;
  }
  p.min_split = 1 + rng() % 4;
  if (rng() % 3 == 0) p.max_depth = 1 + rng() % 4;
  return p;
}

}  // namespace

TEST_CASE("causal factor matches the counting oracle on every tiny context") {
  std::size_t checked = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (unsigned incidence = 0; incidence < (1u << (2 * n)); ++incidence) {
      for (unsigned decision = 0; decision < (1u << n); ++decision) {
        const FormalDecisionContext ctx = enumerated_context(n, incidence, decision);
        std::vector<std::vector<int>> rows(n, std::vector<int>(2));
        std::vector<int> dec(n);
        for (std::size_t i = 0; i < n; ++i) {
          rows[i][0] = ctx.has(i, 0);
          rows[i][1] = ctx.has(i, 1);
          dec[i] = ctx.decision().test(i);
        }
        for (std::size_t a = 0; a < 2; ++a) {
          const auto expected = oracle::causal_factor(oracle::count_cells(rows, dec, a));
          const CausalScore got = causal_factor(ctx, a, NodeScope::full(ctx));
          if (expected.defined != got.defined ||
              (expected.defined && std::fabs(expected.cf - got.cf) > 1e-14)) {
            CAPTURE(n, incidence, decision, a);
            REQUIRE(expected.defined == got.defined);
            if (expected.defined)
              REQUIRE(got.cf == Catch::Approx(expected.cf).margin(1e-14));
          }
          ++checked;
        }
      }
    }
  }
  REQUIRE(checked == 2 * (8 + 64 + 512 + 4096));
}

TEST_CASE("ranking by nc and by |log cf| pick the same maximum") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const FormalDecisionContext ctx = random_context(rng);
    const auto ranked =
        rank_attributes(ctx, all_attribute_indices(ctx), NodeScope::full(ctx));
    if (ranked.empty() || !ranked.front().defined) continue;
    for (const CausalScore& s : ranked) {
      if (!s.defined) continue;
      REQUIRE(s.nc >= 0.5);
      REQUIRE(s.nc <= 1.0);
      REQUIRE(ranked.front().nc >= s.nc);
      // allow the last-ulp log() asymmetry between cf and 1/cf
      REQUIRE(ranked.front().log_abs >=
              s.log_abs - 1e-9 * std::max(1.0, s.log_abs));
      if (s.cf == 1.0) REQUIRE(s.nc == 0.5);
    }
  }
}

TEST_CASE("structure invariants hold on randomized contexts") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const FormalDecisionContext ctx = random_context(rng);
    const BuildParams params = random_params(rng);
    const Structure s = build_structure(ctx, params);

    ObjectSet covered(ctx.n_objects());
    for (const StructureNode& node : s.nodes) {
      // scope matches its recorded counts
      REQUIRE(node.scope.objects.count() == node.size);
      REQUIRE((node.scope.objects & ctx.decision()).count() == node.positives);
      REQUIRE(node.is_leaf() == !node.split_attribute.has_value());
      REQUIRE(node.children.has_value() == node.split_attribute.has_value());

      // the scope is exactly the subset satisfying the conditioned path
      ObjectSet from_path = ctx.all_objects();
      for (const auto& [attr, present] : node.scope.conditioned) {
        if (present) from_path &= ctx.column(attr);
        else from_path -= ctx.column(attr);
      }
      REQUIRE(from_path == node.scope.objects);

      if (node.is_leaf()) {
        REQUIRE(node.leaf_reason.has_value());
        // leaves partition the training objects
        REQUIRE((covered & node.scope.objects).none());
        covered |= node.scope.objects;
      } else {
        // positive/negative nodes never split
        REQUIRE(node.region == Region::boundary);
        REQUIRE(node.size >= params.min_split);
        const std::size_t attr = *node.split_attribute;
        REQUIRE_FALSE(node.scope.conditions_on(attr));
        const StructureNode& absent = s.nodes[node.children->first];
        const StructureNode& present = s.nodes[node.children->second];
        REQUIRE(absent.size + present.size == node.size);
        REQUIRE((absent.scope.objects & present.scope.objects).none());
        REQUIRE((absent.scope.objects | present.scope.objects) == node.scope.objects);
        REQUIRE(present.scope.objects.is_subset_of(ctx.column(attr)));
        REQUIRE((absent.scope.objects & ctx.column(attr)).none());

        // the chosen attribute attains the maximal nc among candidates
        std::vector<std::size_t> candidates;
        for (std::size_t a = 0; a < ctx.n_attributes(); ++a)
          if (!node.scope.conditions_on(a)) candidates.push_back(a);
        const auto best = select_split(ctx, candidates, node.scope);
        REQUIRE(best.has_value());
        REQUIRE(best->nc == node.split_score->nc);

        // upper layers causally cover lower ones at selection time
        for (const StructureNode* child : {&absent, &present}) {
          if (child->is_leaf()) continue;
          const CausalScore child_at_parent =
              causal_factor(ctx, *child->split_attribute, node.scope);
          if (child_at_parent.defined)
            REQUIRE(node.split_score->nc >= child_at_parent.nc);
        }
      }
      // no attribute repeats along any path
      std::set<std::size_t> seen;
      for (const auto& [a, present] : node.scope.conditioned)
        REQUIRE(seen.insert(a).second);
      REQUIRE(node.scope.conditioned.size() <= ctx.n_attributes());
    }
    REQUIRE(covered.count() == ctx.n_objects());

    // identical inputs rebuild the identical tree
    const Structure again = build_structure(ctx, params);
    REQUIRE(export_json(again) == export_json(s));

    if (trial % 20 == 0) {
      const Structure loaded = std::get<Structure>(load_model(export_json(s)));
      REQUIRE(export_json(loaded) == export_json(s));
    }

    // predictions are total and resubstitution accuracy matches the records
    const EvalReport resub = resubstitution(s, ctx);
    std::size_t correct = 0;
    for (const FoldRecord& f : resub.per_fold) correct += f.predicted == f.truth;
    REQUIRE(resub.acc ==
            Catch::Approx(double(correct) / double(ctx.n_objects())).margin(1e-12));
  }
}

TEST_CASE("metric identities hold for arbitrary counts") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t tp = rng() % 20, fp = rng() % 20, fn = rng() % 20, tn = rng() % 20;
    if (tp + fp + fn + tn == 0) continue;
    const EvalReport r = EvalReport::from_counts(tp, fp, fn, tn);
    REQUIRE(r.acc == Catch::Approx(double(tp + tn) / double(tp + fp + fn + tn))
                         .margin(1e-12));
    if (r.rec_defined) REQUIRE(r.rec == Catch::Approx(double(tp) / double(tp + fn)).margin(1e-12));
    if (r.pre_defined) REQUIRE(r.pre == Catch::Approx(double(tp) / double(tp + fp)).margin(1e-12));
    if (r.fpr_defined) REQUIRE(r.fpr == Catch::Approx(double(fp) / double(tn + fp)).margin(1e-12));
    if (r.f1_defined) {
      // harmonic form agrees with the count form
      REQUIRE(r.f1 == Catch::Approx(2.0 * tp / double(2 * tp + fp + fn)).margin(1e-12));
    }
  }
}

TEST_CASE("leave-one-out accounting: predictions plus skips cover every row") {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 4 + rng() % 9;
    std::ostringstream text;
    text << "cat,x,d\n";
    std::vector<int> dec(n);
    for (std::size_t i = 0; i < n; ++i) dec[i] = i % 2;  // both classes present
    for (std::size_t i = 0; i < n; ++i) {
      text << "v" << (rng() % 3) << "," << (rng() % 4) * 0.5 << "," << dec[i] << "\n";
    }
    Schema schema;
    schema.decision = "d";
    RawDataset raw;
    try {
      raw = parse_dataset(text.str(), schema);
    } catch (const degenerate_error&) {
      continue;  // the random column collapsed entirely
    }
    LoocvResult result;
    try {
      result = loocv(raw, BuildParams{});
    } catch (const degenerate_error&) {
      continue;
    }
    const EvalReport& report = *result.three_way;
    REQUIRE(report.per_fold.size() + report.skipped.size() == raw.n_rows);
    REQUIRE(report.evaluated() == report.per_fold.size());
  }
}

TEST_CASE("strict purity misclassifies only duplicate clashes") {
  std::mt19937 rng(53);
  const char* values[] = {"a", "b", "c"};
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + rng() % 12;
    const std::size_t cols = 1 + rng() % 3;
    std::ostringstream text;
    for (std::size_t c = 0; c < cols; ++c) text << "f" << c << ",";
    text << "d\n";
    std::vector<std::vector<std::string>> raw_rows(n);
    std::vector<int> dec(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < cols; ++c) {
        raw_rows[i].push_back(values[rng() % 2]);
        text << raw_rows[i][c] << ",";
      }
      dec[i] = rng() % 2;
      text << dec[i] << "\n";
    }
    Schema schema;
    schema.decision = "d";
    RawDataset raw;
    try {
      raw = parse_dataset(text.str(), schema);
    } catch (const degenerate_error&) {
      continue;
    }
    const auto [ctx, map] = build_context(raw);
    BuildParams params = BuildParams::strict_purity();
    params.min_split = 1;
    const Structure s = build_structure(ctx, params, map);
    const EvalReport resub = resubstitution(s, ctx);
    for (const FoldRecord& f : resub.per_fold) {
      if (f.predicted == f.truth) continue;
      // a miss must have an identical-row object of the opposite class
      bool clash = false;
      for (std::size_t j = 0; j < n && !clash; ++j)
        clash = j != f.object && raw_rows[j] == raw_rows[f.object] && dec[j] != dec[f.object];
      CAPTURE(trial, f.object);
      REQUIRE(clash);
    }
  }
}

TEST_CASE("galois closure holds on random contexts") {
  std::mt19937 rng(61);
  for (int trial = 0; trial < 40; ++trial) {
    const FormalDecisionContext ctx = random_context(rng);
    ObjectSet objs(ctx.n_objects());
    for (std::size_t i = 0; i < ctx.n_objects(); ++i)
      if (rng() % 4 == 0) objs.set(i);
    REQUIRE(objs.is_subset_of(extent(ctx, intent(ctx, objs))));
  }
}
