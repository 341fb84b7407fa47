#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "capos/binarize.hpp"
#include "capos/cart.hpp"
#include "capos/structure.hpp"

namespace capos {

struct Prediction {
  int label = 0;
  std::size_t leaf_id = 0;
  std::vector<std::pair<std::string, bool>> trace;  // (attribute, presence) taken
  double confidence = 0.0;  // leaf positive fraction, complemented for label 0
};

namespace detail {

// Majority vote at the leaf; ties walk back up the routing path and finally
// fall to 0 (the global prior is the root's own majority).
template <typename Node>
inline int resolve_label(const std::vector<const Node*>& path) {
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    const std::size_t pos = (*it)->positives;
    const std::size_t neg = (*it)->size - pos;
    if (pos > neg) return 1;
    if (neg > pos) return 0;
  }
  return 0;
}

template <typename Tree>
inline Prediction route(const Tree& tree, std::span<const char> sample) {
  if (sample.size() != tree.attributes.size())
    throw input_error("sample provides " + std::to_string(sample.size()) +
                      " attribute values, structure uses " +
                      std::to_string(tree.attributes.size()));
  using Node = std::remove_cvref_t<decltype(tree.nodes.front())>;
  std::vector<const Node*> path;
  const Node* node = &tree.nodes.front();
  Prediction pred;
  while (true) {
    path.push_back(node);
    if (node->is_leaf()) break;
    const std::size_t attr = *node->split_attribute;
    const bool present = sample[attr] != 0;
    pred.trace.emplace_back(tree.attributes[attr], present);
    node = &tree.nodes[present ? node->children->second : node->children->first];
  }
  pred.leaf_id = node->id;
  switch (node->region) {
    case Region::positive: pred.label = 1; break;
    case Region::negative: pred.label = 0; break;
    case Region::boundary: pred.label = resolve_label(path); break;
  }
  pred.confidence =
      pred.label == 1 ? node->positive_fraction : 1.0 - node->positive_fraction;
  return pred;
}

}  // namespace detail

inline Prediction predict(const Structure& s, std::span<const char> sample) {
  return detail::route(s, sample);
}

inline Prediction predict_cart(const CartTree& tree, std::span<const char> sample) {
  return detail::route(tree, sample);
}

struct FoldRecord {
  std::size_t object = 0;
  int predicted = 0;
  int truth = 0;
  std::size_t leaf_id = 0;
  std::vector<std::pair<std::string, bool>> trace;
};

struct SkippedFold {
  std::size_t object = 0;
  std::string reason;
};

struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double acc = 0, rec = 0, fpr = 0, pre = 0, f1 = 0;
  // A metric with an empty denominator reports 0 and clears its flag.
  bool rec_defined = true, fpr_defined = true, pre_defined = true, f1_defined = true;
  std::vector<FoldRecord> per_fold;
  std::vector<SkippedFold> skipped;

  std::size_t evaluated() const { return tp + fp + fn + tn; }

  static EvalReport from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                std::size_t tn) {
    EvalReport r;
    r.tp = tp; r.fp = fp; r.fn = fn; r.tn = tn;
    const std::size_t total = tp + fp + fn + tn;
    r.acc = total ? static_cast<double>(tp + tn) / total : 0.0;
    if (tp + fn) r.rec = static_cast<double>(tp) / (tp + fn); else r.rec_defined = false;
    if (tn + fp) r.fpr = static_cast<double>(fp) / (tn + fp); else r.fpr_defined = false;
    if (tp + fp) r.pre = static_cast<double>(tp) / (tp + fp); else r.pre_defined = false;
    if (r.rec_defined && r.pre_defined && r.rec + r.pre > 0.0)
      r.f1 = 2.0 * r.rec * r.pre / (r.rec + r.pre);
    else
      r.f1_defined = false;
    return r;
  }
};

inline EvalReport metrics(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw input_error("prediction/truth length mismatch");
  if (predicted.empty()) throw input_error("metrics of an empty prediction list");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] && truth[i]) ++tp;
    else if (predicted[i]) ++fp;
    else if (truth[i]) ++fn;
    else ++tn;
  }
  return EvalReport::from_counts(tp, fp, fn, tn);
}

inline EvalReport metrics(const std::vector<Prediction>& predictions,
                          std::span<const int> truth) {
  std::vector<int> labels;
  labels.reserve(predictions.size());
  for (const Prediction& p : predictions) labels.push_back(p.label);
  return metrics(labels, truth);
}

enum class ModelKind { three_way, cart };

struct LoocvResult {
  std::optional<EvalReport> three_way;
  std::optional<EvalReport> cart;
};

// Leave-one-out over the raw dataset. Each fold refits the whole pipeline on
// the n-1 remaining rows (cut points included) and predicts the held-out row
// through the fold's own binarization map. Folds whose pipeline cannot be
// built (e.g. a continuous column collapsing to one value) are skipped and
// disclosed. When both models are requested they consume the same per-fold
// context.
inline LoocvResult loocv(const RawDataset& raw, const BuildParams& params,
                         bool run_three_way = true, bool run_cart = false) {
  params.validate();
  if (raw.n_rows < 2) throw degenerate_error("leave-one-out needs at least 2 rows");
  bool has_pos = false, has_neg = false;
  for (char d : raw.decision) (d ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw degenerate_error("leave-one-out needs both decision classes");

  LoocvResult result;
  if (run_three_way) result.three_way.emplace();
  if (run_cart) result.cart.emplace();
  std::vector<int> truths, pred_tw, pred_cart;

  for (std::size_t i = 0; i < raw.n_rows; ++i) {
    const RawDataset fold = raw.without_row(i);
    FormalDecisionContext ctx;
    BinarizationMap map;
    try {
      std::tie(ctx, map) = build_context(fold);
    } catch (const degenerate_error& e) {
      if (result.three_way) result.three_way->skipped.push_back({i, e.what()});
      if (result.cart) result.cart->skipped.push_back({i, e.what()});
      continue;
    }
    const std::vector<char> sample = map.apply(raw.row_fields(i));
    const int truth = raw.decision[i];
    truths.push_back(truth);
    std::optional<std::string> tw_fingerprint;
    if (result.three_way) {
      const Structure s = build_structure(ctx, params, map);
      tw_fingerprint = s.fingerprint;
      const Prediction p = predict(s, sample);
      result.three_way->per_fold.push_back({i, p.label, truth, p.leaf_id, p.trace});
      pred_tw.push_back(p.label);
    }
    if (result.cart) {
      const CartTree t = build_cart(ctx, params, map);
      if (tw_fingerprint && *tw_fingerprint != t.fingerprint)
        throw std::logic_error("comparator consumed a different context");
      const Prediction p = predict_cart(t, sample);
      result.cart->per_fold.push_back({i, p.label, truth, p.leaf_id, p.trace});
      pred_cart.push_back(p.label);
    }
  }

  const auto finalize = [&](EvalReport& report, const std::vector<int>& preds) {
    if (preds.empty()) throw degenerate_error("every leave-one-out fold was skipped");
    auto skipped = std::move(report.skipped);
    auto per_fold = std::move(report.per_fold);
    report = metrics(preds, truths);
    report.skipped = std::move(skipped);
    report.per_fold = std::move(per_fold);
  };
  if (result.three_way) finalize(*result.three_way, pred_tw);
  if (result.cart) finalize(*result.cart, pred_cart);
  return result;
}

// Train-on-all, test-on-all report for one already-built model.
template <typename Tree>
inline EvalReport resubstitution(const Tree& tree, const FormalDecisionContext& ctx) {
  std::vector<int> preds, truths;
  preds.reserve(ctx.n_objects());
  EvalReport report;
  for (std::size_t i = 0; i < ctx.n_objects(); ++i) {
    const std::vector<char> sample = ctx.row_bits(i);
    const Prediction p = detail::route(tree, sample);
    preds.push_back(p.label);
    truths.push_back(ctx.decision().test(i) ? 1 : 0);
    report.per_fold.push_back({i, p.label, truths.back(), p.leaf_id, p.trace});
  }
  auto per_fold = std::move(report.per_fold);
  report = metrics(preds, truths);
  report.per_fold = std::move(per_fold);
  return report;
}

}  // namespace capos
