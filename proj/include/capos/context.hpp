#pragma once

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "capos/common.hpp"

namespace capos {

enum class ColumnKind { discrete, continuous };

struct RawColumn {
  std::string name;
  ColumnKind kind = ColumnKind::discrete;
  std::vector<std::string> values;   // as read (trimmed)
  std::vector<double> numbers;       // filled for continuous columns

  bool is_binary() const {
    for (const std::string& v : values) {
      const auto n = parse_number(v);
      if (!n || (*n != 0.0 && *n != 1.0)) return false;
    }
    return !values.empty();
  }
};

// A parsed tabular dataset: typed condition columns plus a binary decision.
struct RawDataset {
  std::vector<std::string> column_names;  // includes the decision column
  std::vector<RawColumn> columns;         // parallel to column_names
  std::size_t decision_column = 0;
  std::vector<char> decision;             // mapped to {0,1}
  std::string positive_label;
  std::string negative_label;
  std::size_t n_rows = 0;
  std::size_t dropped_rows = 0;           // rows discarded for missing entries

  // Dataset with row `drop` removed; used by leave-one-out refits.
  RawDataset without_row(std::size_t drop) const {
    RawDataset out;
    out.column_names = column_names;
    out.decision_column = decision_column;
    out.positive_label = positive_label;
    out.negative_label = negative_label;
    out.n_rows = n_rows - 1;
    out.columns.reserve(columns.size());
    for (const RawColumn& c : columns) {
      RawColumn cc;
      cc.name = c.name;
      cc.kind = c.kind;
      for (std::size_t i = 0; i < c.values.size(); ++i)
        if (i != drop) cc.values.push_back(c.values[i]);
      for (std::size_t i = 0; i < c.numbers.size(); ++i)
        if (i != drop) cc.numbers.push_back(c.numbers[i]);
      out.columns.push_back(std::move(cc));
    }
    for (std::size_t i = 0; i < decision.size(); ++i)
      if (i != drop) out.decision.push_back(decision[i]);
    return out;
  }

  // Raw fields of one row keyed by column name (decision column included).
  std::map<std::string, std::string> row_fields(std::size_t row) const {
    std::map<std::string, std::string> out;
    for (const RawColumn& c : columns) out[c.name] = c.values[row];
    return out;
  }
};

struct Schema {
  std::string decision;                  // column name, required
  std::optional<std::string> positive_label;
  std::vector<std::string> discrete;     // declared kinds; the rest auto-type
  std::vector<std::string> continuous;
  char delimiter = ',';
};

namespace detail {

inline bool missing_field(const std::string& v) { return v.empty() || v == "?"; }

inline bool numeric_column(const std::vector<std::string>& values) {
  for (const std::string& v : values)
    if (!parse_number(v)) return false;
  return !values.empty();
}

}  // namespace detail

inline RawDataset parse_dataset(std::istream& in, const Schema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty input: missing header row");
  std::vector<std::string> names = split_fields(line, schema.delimiter);
  {
    std::set<std::string> seen;
    for (const std::string& n : names) {
      if (n.empty()) throw input_error("header contains an empty column name");
      if (!seen.insert(n).second) throw input_error("duplicate column name: " + n);
    }
  }

  const auto col_of = [&](const std::string& n) -> std::size_t {
    const auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) throw input_error("unknown column: " + n);
    return static_cast<std::size_t>(it - names.begin());
  };
  const std::size_t decision_col = col_of(schema.decision);

  RawDataset ds;
  ds.column_names = names;
  ds.decision_column = decision_col;
  ds.columns.resize(names.size());
  for (std::size_t c = 0; c < names.size(); ++c) ds.columns[c].name = names[c];

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_fields(line, schema.delimiter);
    if (fields.size() != names.size())
      throw input_error("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(names.size()) + " fields, got " +
                        std::to_string(fields.size()));
    bool missing = false;
    for (const std::string& f : fields)
      if (detail::missing_field(f)) { missing = true; break; }
    if (missing) {
      ++ds.dropped_rows;
      continue;
    }
    for (std::size_t c = 0; c < fields.size(); ++c)
      ds.columns[c].values.push_back(std::move(fields[c]));
    ++ds.n_rows;
  }
  if (ds.n_rows == 0) throw degenerate_error("no usable data rows");

  // Column kinds: explicit declarations win, the rest auto-type on parseability.
  for (const std::string& n : schema.discrete) {
    if (std::find(schema.continuous.begin(), schema.continuous.end(), n) !=
        schema.continuous.end())
      throw input_error("column " + n + " declared both discrete and continuous");
    ds.columns[col_of(n)].kind = ColumnKind::discrete;
  }
  for (const std::string& n : schema.continuous) {
    RawColumn& col = ds.columns[col_of(n)];
    col.kind = ColumnKind::continuous;
  }
  for (std::size_t c = 0; c < ds.columns.size(); ++c) {
    if (c == decision_col) continue;
    RawColumn& col = ds.columns[c];
    const bool declared =
        std::find(schema.discrete.begin(), schema.discrete.end(), col.name) != schema.discrete.end() ||
        std::find(schema.continuous.begin(), schema.continuous.end(), col.name) != schema.continuous.end();
    if (!declared)
      col.kind = detail::numeric_column(col.values) ? ColumnKind::continuous
                                                    : ColumnKind::discrete;
    if (col.kind == ColumnKind::continuous) {
      col.numbers.reserve(col.values.size());
      for (const std::string& v : col.values) {
        const auto n = parse_number(v);
        if (!n)
          throw input_error("column " + col.name +
                            ": non-numeric value '" + v + "' in a continuous column");
        col.numbers.push_back(*n);
      }
    }
  }

  // Map the decision to {0,1}.
  std::vector<std::string> distinct;
  for (const std::string& v : ds.columns[decision_col].values)
    if (std::find(distinct.begin(), distinct.end(), v) == distinct.end())
      distinct.push_back(v);
  if (distinct.size() != 2)
    throw degenerate_error("decision column " + schema.decision + " has " +
                           std::to_string(distinct.size()) +
                           " distinct value(s); exactly 2 required");
  std::string positive;
  if (schema.positive_label) {
    positive = *schema.positive_label;
    if (std::find(distinct.begin(), distinct.end(), positive) == distinct.end())
      throw input_error("positive label '" + positive +
                        "' does not occur in the decision column");
  } else if (std::find(distinct.begin(), distinct.end(), "1") != distinct.end()) {
    positive = "1";
  } else {
    throw input_error("decision values are {" + distinct[0] + ", " + distinct[1] +
                      "}; --positive-label is required");
  }
  ds.positive_label = positive;
  ds.negative_label = distinct[0] == positive ? distinct[1] : distinct[0];
  ds.decision.reserve(ds.n_rows);
  for (const std::string& v : ds.columns[decision_col].values)
    ds.decision.push_back(v == positive ? 1 : 0);
  return ds;
}

inline RawDataset parse_dataset(const std::string& text, const Schema& schema) {
  std::istringstream in(text);
  return parse_dataset(in, schema);
}

// ---------------------------------------------------------------------------

// Binary decision table (G, M, I, D): objects, named attributes, one incidence
// column per attribute, and a 0/1 decision over the objects.
class FormalDecisionContext {
 public:
  FormalDecisionContext() = default;

  FormalDecisionContext(std::vector<std::string> attributes,
                        std::vector<ObjectSet> columns, ObjectSet decision,
                        std::vector<std::string> object_labels = {})
      : attributes_(std::move(attributes)),
        columns_(std::move(columns)),
        decision_(std::move(decision)),
        object_labels_(std::move(object_labels)) {
    n_objects_ = decision_.size();
    if (attributes_.size() != columns_.size())
      throw input_error("attribute/column count mismatch");
    std::set<std::string> seen;
    for (const std::string& a : attributes_)
      if (!seen.insert(a).second)
        throw input_error("duplicate attribute name: " + a);
    for (const ObjectSet& c : columns_)
      if (c.size() != n_objects_)
        throw input_error("incidence column size mismatch");
    if (object_labels_.empty()) {
      object_labels_.reserve(n_objects_);
      for (std::size_t i = 0; i < n_objects_; ++i)
        object_labels_.push_back(std::to_string(i + 1));
    } else if (object_labels_.size() != n_objects_) {
      throw input_error("object label count mismatch");
    }
  }

  // Row-major construction, convenient for tests and small tables.
  static FormalDecisionContext from_rows(std::vector<std::string> attributes,
                                         const std::vector<std::vector<int>>& rows,
                                         const std::vector<int>& decision) {
    const std::size_t n = rows.size();
    std::vector<ObjectSet> cols(attributes.size(), ObjectSet(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != attributes.size())
        throw input_error("row width mismatch");
      for (std::size_t a = 0; a < attributes.size(); ++a)
        if (rows[i][a]) cols[a].set(i);
    }
    ObjectSet dec(n);
    for (std::size_t i = 0; i < n; ++i)
      if (decision[i]) dec.set(i);
    return FormalDecisionContext(std::move(attributes), std::move(cols), std::move(dec));
  }

  std::size_t n_objects() const { return n_objects_; }
  std::size_t n_attributes() const { return attributes_.size(); }
  const std::vector<std::string>& attributes() const { return attributes_; }
  const std::string& attribute_name(std::size_t a) const { return attributes_.at(a); }
  const ObjectSet& column(std::size_t a) const { return columns_.at(a); }
  const ObjectSet& decision() const { return decision_; }
  const std::vector<std::string>& object_labels() const { return object_labels_; }

  std::size_t attribute_index(std::string_view name) const {
    for (std::size_t a = 0; a < attributes_.size(); ++a)
      if (attributes_[a] == name) return a;
    throw input_error("unknown attribute name: " + std::string(name));
  }

  bool has(std::size_t object, std::size_t attribute) const {
    return columns_.at(attribute).test(object);
  }

  ObjectSet all_objects() const {
    ObjectSet s(n_objects_);
    s.set();
    return s;
  }

  std::vector<char> row_bits(std::size_t object) const {
    std::vector<char> bits(attributes_.size());
    for (std::size_t a = 0; a < attributes_.size(); ++a)
      bits[a] = columns_[a].test(object) ? 1 : 0;
    return bits;
  }

  // Stable content hash over names, incidence and decision.
  std::string fingerprint() const {
    std::uint64_t h = fnv1a_init();
    for (const std::string& a : attributes_) {
      fnv1a_update(h, a);
      fnv1a_update(h, "\x1f");
    }
    std::string bits;
    bits.reserve(n_objects_);
    for (const ObjectSet& c : columns_) {
      bits.clear();
      for (std::size_t i = 0; i < n_objects_; ++i) bits.push_back(c.test(i) ? '1' : '0');
      fnv1a_update(h, bits);
      fnv1a_update(h, "\x1e");
    }
    bits.clear();
    for (std::size_t i = 0; i < n_objects_; ++i) bits.push_back(decision_.test(i) ? '1' : '0');
    fnv1a_update(h, bits);
    return hex64(h);
  }

 private:
  std::vector<std::string> attributes_;
  std::vector<ObjectSet> columns_;
  ObjectSet decision_;
  std::vector<std::string> object_labels_;
  std::size_t n_objects_ = 0;
};

// Objects carrying every attribute in attrs; the empty set maps to all objects.
inline ObjectSet extent(const FormalDecisionContext& ctx,
                        std::span<const std::size_t> attrs) {
  ObjectSet result = ctx.all_objects();
  for (std::size_t a : attrs) {
    if (a >= ctx.n_attributes())
      throw input_error("attribute index out of range");
    result &= ctx.column(a);
  }
  return result;
}

inline ObjectSet extent(const FormalDecisionContext& ctx,
                        std::initializer_list<std::string_view> names) {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (auto n : names) idx.push_back(ctx.attribute_index(n));
  return extent(ctx, idx);
}

// Attributes shared by every object in objs; the empty set maps to all attributes.
inline std::vector<std::size_t> intent(const FormalDecisionContext& ctx,
                                       const ObjectSet& objs) {
  if (objs.size() != ctx.n_objects())
    throw input_error("object set size mismatch");
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < ctx.n_attributes(); ++a)
    if (objs.is_subset_of(ctx.column(a))) out.push_back(a);
  return out;
}

inline std::vector<std::size_t> intent(const FormalDecisionContext& ctx,
                                       std::span<const std::size_t> objects) {
  ObjectSet s(ctx.n_objects());
  for (std::size_t o : objects) {
    if (o >= ctx.n_objects())
      throw input_error("unknown object identifier: " + std::to_string(o));
    s.set(o);
  }
  return intent(ctx, s);
}

// ---------------------------------------------------------------------------

// One produced binary attribute and where it came from.
struct BinRule {
  enum class Kind { identity, one_hot, threshold };
  Kind kind = Kind::identity;
  std::string source;     // original column
  std::string attribute;  // produced attribute name
  std::string value;      // one_hot: matched value
  double cut = 0.0;       // threshold: cut point, kept at full precision

  bool applies(const std::string& field) const {
    switch (kind) {
      case Kind::identity: {
        const auto n = parse_number(field);
        if (!n || (*n != 0.0 && *n != 1.0))
          throw input_error("column " + source + ": value '" + field +
                            "' is not binary");
        return *n == 1.0;
      }
      case Kind::one_hot:
        return field == value;
      case Kind::threshold: {
        const auto n = parse_number(field);
        if (!n)
          throw input_error("column " + source + ": non-numeric value '" +
                            field + "'");
        return *n >= cut;
      }
    }
    return false;
  }
};

struct DroppedColumn {
  std::string source;
  std::string reason;
};

struct BinarizationMap {
  std::vector<BinRule> rules;           // one per produced attribute, in order
  std::vector<DroppedColumn> dropped;

  // Binarize one raw row (fields keyed by source column name).
  std::vector<char> apply(const std::map<std::string, std::string>& fields) const {
    std::vector<char> bits;
    bits.reserve(rules.size());
    for (const BinRule& r : rules) {
      const auto it = fields.find(r.source);
      if (it == fields.end())
        throw input_error("sample is missing column: " + r.source);
      bits.push_back(r.applies(it->second) ? 1 : 0);
    }
    return bits;
  }
};

// One binary attribute per distinct value, in first-occurrence order.
inline std::vector<std::pair<BinRule, std::vector<char>>> binarize_discrete(
    const RawColumn& col) {
  if (col.values.empty()) throw degenerate_error("column " + col.name + " is empty");
  std::vector<std::string> order;
  for (const std::string& v : col.values)
    if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);
  std::vector<std::pair<BinRule, std::vector<char>>> out;
  out.reserve(order.size());
  for (const std::string& v : order) {
    BinRule rule;
    rule.kind = BinRule::Kind::one_hot;
    rule.source = col.name;
    rule.value = v;
    rule.attribute = col.name + "_" + v;
    std::vector<char> bits(col.values.size());
    for (std::size_t i = 0; i < col.values.size(); ++i)
      bits[i] = col.values[i] == v ? 1 : 0;
    out.emplace_back(std::move(rule), std::move(bits));
  }
  return out;
}

}  // namespace capos
