#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "capos/causal.hpp"
#include "capos/context.hpp"

namespace capos {

// Outcome of the cut search over one continuous column.
struct ThresholdResult {
  BinRule rule;             // kind == threshold
  std::vector<char> bits;   // value >= cut, one per row
  CausalScore score;        // score of the produced attribute
};

namespace detail {

struct CutScore {
  double cut = 0.0;
  CausalScore score;
  double margin = 0.0;  // |p(c|m) - p(c|m absent)|
};

}  // namespace detail

// Searches every midpoint between consecutive distinct values and keeps the
// cut whose binary attribute has maximal normalized causality. Ties prefer
// the larger conditional/do separation, then the smaller cut. Returns nullopt
// (column dropped) when no candidate is scorable.
inline std::optional<ThresholdResult> binarize_continuous(
    const RawColumn& col, const std::vector<char>& decision,
    std::string* drop_reason = nullptr) {
  if (col.numbers.size() != decision.size())
    throw input_error("column " + col.name + ": row count mismatch");
  std::vector<double> distinct(col.numbers);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2)
    throw degenerate_error("column " + col.name +
                           ": all values identical, no cut point exists");

  std::optional<detail::CutScore> best;
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    const double cut = (distinct[i] + distinct[i + 1]) / 2.0;
    std::size_t with = 0, pos_with = 0, without = 0, pos_without = 0;
    for (std::size_t r = 0; r < col.numbers.size(); ++r) {
      if (col.numbers[r] >= cut) {
        ++with;
        if (decision[r]) ++pos_with;
      } else {
        ++without;
        if (decision[r]) ++pos_without;
      }
    }
    if (with == 0 || without == 0) continue;  // constant candidate
    const CausalScore score = score_from_counts(pos_with, with, pos_without, without);
    if (!score.defined) continue;  // p(c|m) == 0: unrelated, skip
    detail::CutScore cand;
    cand.cut = cut;
    cand.score = score;
    cand.margin = std::fabs(static_cast<double>(pos_with) / static_cast<double>(with) -
                            static_cast<double>(pos_without) / static_cast<double>(without));
    if (!best || cand.score.nc > best->score.nc ||
        (cand.score.nc == best->score.nc && cand.margin > best->margin) ||
        (cand.score.nc == best->score.nc && cand.margin == best->margin &&
         cand.cut < best->cut))
      best = cand;
  }
  if (!best) {
    if (drop_reason) *drop_reason = "no scorable cut candidate";
    return std::nullopt;
  }

  ThresholdResult out;
  out.rule.kind = BinRule::Kind::threshold;
  out.rule.source = col.name;
  out.rule.cut = best->cut;
  out.rule.attribute = col.name + ">=" + format_number(best->cut);
  out.bits.resize(col.numbers.size());
  for (std::size_t r = 0; r < col.numbers.size(); ++r)
    out.bits[r] = col.numbers[r] >= best->cut ? 1 : 0;
  out.score = best->score;
  out.score.attribute = out.rule.attribute;
  return out;
}

// Converts a parsed dataset into a formal decision context. 0/1 columns map
// by identity, other discrete columns one-hot per value, continuous columns
// get a single searched cut. Every produced attribute is recorded as a rule.
inline std::pair<FormalDecisionContext, BinarizationMap> build_context(
    const RawDataset& raw) {
  BinarizationMap map;
  std::vector<std::string> attributes;
  std::vector<std::vector<char>> columns;

  const auto add = [&](BinRule rule, std::vector<char> bits) {
    attributes.push_back(rule.attribute);
    map.rules.push_back(std::move(rule));
    columns.push_back(std::move(bits));
  };

  for (std::size_t c = 0; c < raw.columns.size(); ++c) {
    if (c == raw.decision_column) continue;
    const RawColumn& col = raw.columns[c];
    if (col.is_binary()) {
      BinRule rule;
      rule.kind = BinRule::Kind::identity;
      rule.source = col.name;
      rule.attribute = col.name;
      std::vector<char> bits(col.values.size());
      for (std::size_t r = 0; r < col.values.size(); ++r)
        bits[r] = *parse_number(col.values[r]) == 1.0 ? 1 : 0;
      add(std::move(rule), std::move(bits));
    } else if (col.kind == ColumnKind::discrete) {
      for (auto& [rule, bits] : binarize_discrete(col))
        add(std::move(rule), std::move(bits));
    } else {
      std::string reason;
      auto result = binarize_continuous(col, raw.decision, &reason);
      if (!result) {
        map.dropped.push_back({col.name, reason});
        continue;
      }
      add(std::move(result->rule), std::move(result->bits));
    }
  }

  const std::size_t n = raw.n_rows;
  std::vector<ObjectSet> sets;
  sets.reserve(columns.size());
  for (const std::vector<char>& bits : columns) {
    ObjectSet s(n);
    for (std::size_t r = 0; r < n; ++r)
      if (bits[r]) s.set(r);
    sets.push_back(std::move(s));
  }
  ObjectSet dec(n);
  for (std::size_t r = 0; r < n; ++r)
    if (raw.decision[r]) dec.set(r);

  return {FormalDecisionContext(std::move(attributes), std::move(sets), std::move(dec)),
          std::move(map)};
}

// Text report in the "attribute / rule / number of objects" layout.
inline std::string binarization_report(const FormalDecisionContext& ctx,
                                       const BinarizationMap& map) {
  std::string out;
  out += "objects: " + std::to_string(ctx.n_objects()) +
         "  binary attributes: " + std::to_string(ctx.n_attributes()) + "\n";
  std::size_t name_width = 9;
  for (const BinRule& r : map.rules) name_width = std::max(name_width, r.attribute.size());
  out += "attribute";
  out.append(name_width - 9 + 2, ' ');
  out += "rule                      g(m)\n";
  for (std::size_t a = 0; a < map.rules.size(); ++a) {
    const BinRule& r = map.rules[a];
    std::string rule_text;
    switch (r.kind) {
      case BinRule::Kind::identity:
        rule_text = "identity " + r.source;
        break;
      case BinRule::Kind::one_hot:
        rule_text = r.source + " = " + r.value;
        break;
      case BinRule::Kind::threshold:
        rule_text = r.source + " >= " + format_number(r.cut);
        break;
    }
    if (rule_text.size() < 24) rule_text.append(24 - rule_text.size(), ' ');
    out += r.attribute;
    out.append(name_width - r.attribute.size() + 2, ' ');
    out += rule_text + "  " + std::to_string(ctx.column(a).count()) + "\n";
  }
  for (const DroppedColumn& d : map.dropped)
    out += "dropped: " + d.source + " (" + d.reason + ")\n";
  return out;
}

}  // namespace capos
