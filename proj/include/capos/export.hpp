#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "capos/cart.hpp"
#include "capos/classify.hpp"
#include "capos/structure.hpp"

namespace capos {

using ordered_json = nlohmann::ordered_json;

// Renderer-neutral view of a tree: labelled nodes plus present/absent edges,
// always rooted at node 0.
struct DiagramDoc {
  struct Node {
    std::size_t id = 0;
    std::string label;
    std::string region;
    std::size_t size = 0;
    double positive_fraction = 0.0;
    std::optional<double> nc;  // internal nodes only
  };
  struct Edge {
    std::size_t parent = 0;
    std::size_t child = 0;
    bool present = false;
  };
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::string metadata;
};

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

inline std::string params_text(const BuildParams& p) {
  std::string out = "alpha=" + format_number(p.alpha) + " beta=" + format_number(p.beta) +
                    " min_split=" + std::to_string(p.min_split);
  if (p.max_depth) out += " max_depth=" + std::to_string(*p.max_depth);
  return out;
}

template <typename Tree>
inline DiagramDoc diagram_of(const Tree& tree, const char* kind) {
  DiagramDoc doc;
  doc.metadata = std::string(kind) + "; " + params_text(tree.params) +
                 "; fingerprint=" + tree.fingerprint;
  for (const auto& node : tree.nodes) {
    DiagramDoc::Node n;
    n.id = node.id;
    n.region = region_name(node.region);
    n.size = node.size;
    n.positive_fraction = node.positive_fraction;
    const std::string counts = "n=" + std::to_string(node.size) +
                               " v=" + format_fixed(node.positive_fraction, 3);
    if (node.is_leaf()) {
      n.label = std::string(region_name(node.region)) + "\n" + counts;
    } else {
      n.label = tree.attributes[*node.split_attribute] + "\n" + counts;
      if constexpr (requires { node.split_score; }) {
        if (node.split_score) n.nc = node.split_score->nc;
      }
      doc.edges.push_back({node.id, node.children->first, false});
      doc.edges.push_back({node.id, node.children->second, true});
    }
    doc.nodes.push_back(std::move(n));
  }
  return doc;
}

}  // namespace detail

inline DiagramDoc to_diagram(const Structure& s) { return detail::diagram_of(s, "3wcapos"); }
inline DiagramDoc to_diagram(const CartTree& t) { return detail::diagram_of(t, "cart"); }

inline std::string render_dot(const DiagramDoc& doc,
                              const std::string& graph_name = "structure",
                              const std::string& stamp = {}) {
  std::string out = "digraph " + graph_name + " {\n";
  out += "  // " + doc.metadata + "\n";
  if (!stamp.empty()) out += "  // stamp: " + stamp + "\n";
  out += "  node [shape=box, style=filled, fontname=\"Helvetica\"];\n";
  for (const DiagramDoc::Node& n : doc.nodes) {
    const char* fill = n.region == "POSITIVE" ? "#c8e6c9"
                       : n.region == "NEGATIVE" ? "#ffcdd2"
                                                : "#fff9c4";
    out += "  n" + std::to_string(n.id) + " [label=\"" + detail::dot_escape(n.label) +
           "\", fillcolor=\"" + fill + "\", region=\"" + n.region + "\"";
    if (n.nc) out += ", nc=\"" + format_number(*n.nc) + "\"";
    out += "];\n";
  }
  for (const DiagramDoc::Edge& e : doc.edges) {
    out += "  n" + std::to_string(e.parent) + " -> n" + std::to_string(e.child) +
           " [label=\"" + (e.present ? "present" : "absent") + "\"];\n";
  }
  out += "}\n";
  return out;
}

inline std::string export_dot(const Structure& s, const std::string& stamp = {}) {
  return render_dot(to_diagram(s), "three_way_structure", stamp);
}

inline std::string export_dot(const CartTree& t, const std::string& stamp = {}) {
  return render_dot(to_diagram(t), "cart_baseline", stamp);
}

// --- JSON ------------------------------------------------------------------

namespace detail {

inline ordered_json params_json(const BuildParams& p) {
  ordered_json j;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["min_split"] = p.min_split;
  j["max_depth"] = p.max_depth ? ordered_json(*p.max_depth) : ordered_json(nullptr);
  return j;
}

inline BuildParams params_from_json(const ordered_json& j) {
  BuildParams p;
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.min_split = j.at("min_split").get<std::size_t>();
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<std::size_t>();
  return p;
}

inline ordered_json map_json(const BinarizationMap& map) {
  ordered_json rules = ordered_json::array();
  for (const BinRule& r : map.rules) {
    ordered_json j;
    switch (r.kind) {
      case BinRule::Kind::identity:
        j["kind"] = "identity";
        j["source"] = r.source;
        break;
      case BinRule::Kind::one_hot:
        j["kind"] = "one_hot";
        j["source"] = r.source;
        j["value"] = r.value;
        break;
      case BinRule::Kind::threshold:
        j["kind"] = "threshold";
        j["source"] = r.source;
        j["cut"] = r.cut;
        break;
    }
    j["attribute"] = r.attribute;
    rules.push_back(std::move(j));
  }
  ordered_json dropped = ordered_json::array();
  for (const DroppedColumn& d : map.dropped)
    dropped.push_back({{"source", d.source}, {"reason", d.reason}});
  return ordered_json{{"rules", std::move(rules)}, {"dropped", std::move(dropped)}};
}

inline BinarizationMap map_from_json(const ordered_json& j) {
  BinarizationMap map;
  for (const auto& r : j.at("rules")) {
    BinRule rule;
    const std::string kind = r.at("kind").get<std::string>();
    rule.source = r.at("source").get<std::string>();
    rule.attribute = r.at("attribute").get<std::string>();
    if (kind == "identity") {
      rule.kind = BinRule::Kind::identity;
    } else if (kind == "one_hot") {
      rule.kind = BinRule::Kind::one_hot;
      rule.value = r.at("value").get<std::string>();
    } else if (kind == "threshold") {
      rule.kind = BinRule::Kind::threshold;
      rule.cut = r.at("cut").get<double>();
    } else {
      throw input_error("unknown binarization rule kind: " + kind);
    }
    map.rules.push_back(std::move(rule));
  }
  for (const auto& d : j.at("dropped"))
    map.dropped.push_back({d.at("source").get<std::string>(),
                           d.at("reason").get<std::string>()});
  return map;
}

inline ordered_json scope_path_json(const NodeScope& scope,
                                    const std::vector<std::string>& attributes) {
  ordered_json path = ordered_json::array();
  for (const auto& [attr, present] : scope.conditioned)
    path.push_back(ordered_json::array({attributes[attr], present}));
  return path;
}

inline ordered_json object_array(const ObjectSet& objects) {
  ordered_json arr = ordered_json::array();
  for (std::size_t i : set_indices(objects)) arr.push_back(i);
  return arr;
}

inline ObjectSet objects_from_json(const ordered_json& arr, std::size_t n) {
  ObjectSet s(n);
  for (const auto& v : arr) s.set(v.get<std::size_t>());
  return s;
}

inline Region region_from_name(const std::string& name) {
  if (name == "POSITIVE") return Region::positive;
  if (name == "NEGATIVE") return Region::negative;
  if (name == "BOUNDARY") return Region::boundary;
  throw input_error("unknown region: " + name);
}

inline LeafReason leaf_reason_from_name(const std::string& name) {
  for (LeafReason r : {LeafReason::pure_region, LeafReason::min_samples,
                       LeafReason::no_defined_candidate, LeafReason::attribute_exhausted,
                       LeafReason::max_depth})
    if (name == leaf_reason_name(r)) return r;
  throw input_error("unknown leaf reason: " + name);
}

}  // namespace detail

inline ordered_json to_json(const EvalReport& report) {
  ordered_json j;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["tn"] = report.tn;
  j["acc"] = report.acc;
  j["rec"] = report.rec;
  j["fpr"] = report.fpr;
  j["pre"] = report.pre;
  j["f1"] = report.f1;
  ordered_json undefined = ordered_json::array();
  if (!report.rec_defined) undefined.push_back("rec");
  if (!report.fpr_defined) undefined.push_back("fpr");
  if (!report.pre_defined) undefined.push_back("pre");
  if (!report.f1_defined) undefined.push_back("f1");
  j["undefined"] = std::move(undefined);
  ordered_json folds = ordered_json::array();
  for (const FoldRecord& f : report.per_fold) {
    ordered_json fj;
    fj["object"] = f.object;
    fj["predicted"] = f.predicted;
    fj["truth"] = f.truth;
    fj["leaf"] = f.leaf_id;
    ordered_json trace = ordered_json::array();
    for (const auto& [attr, present] : f.trace)
      trace.push_back(ordered_json::array({attr, present}));
    fj["trace"] = std::move(trace);
    folds.push_back(std::move(fj));
  }
  j["per_fold"] = std::move(folds);
  ordered_json skipped = ordered_json::array();
  for (const SkippedFold& s : report.skipped)
    skipped.push_back({{"object", s.object}, {"reason", s.reason}});
  j["skipped_folds"] = std::move(skipped);
  return j;
}

inline ordered_json structure_to_json(const Structure& s,
                                      const EvalReport* report = nullptr) {
  ordered_json j;
  j["format"] = "capos-model";
  j["version"] = 1;
  j["kind"] = "3wcapos";
  j["fingerprint"] = s.fingerprint;
  j["n_objects"] = s.n_objects;
  j["params"] = detail::params_json(s.params);
  j["attributes"] = s.attributes;
  j["binarization"] = detail::map_json(s.binarization);
  ordered_json nodes = ordered_json::array();
  for (const StructureNode& node : s.nodes) {
    ordered_json nj;
    nj["id"] = node.id;
    nj["level"] = node.level;
    nj["objects"] = detail::object_array(node.scope.objects);
    nj["path"] = detail::scope_path_json(node.scope, s.attributes);
    nj["size"] = node.size;
    nj["positives"] = node.positives;
    nj["positive_fraction"] = node.positive_fraction;
    nj["region"] = region_name(node.region);
    if (node.split_attribute) {
      ordered_json split;
      split["attribute"] = s.attributes[*node.split_attribute];
      split["cf"] = node.split_score->cf;
      split["log_abs"] = node.split_score->log_abs;
      split["nc"] = node.split_score->nc;
      nj["split"] = std::move(split);
      nj["children"] = ordered_json{{"absent", node.children->first},
                                    {"present", node.children->second}};
      nj["leaf_reason"] = nullptr;
    } else {
      nj["split"] = nullptr;
      nj["children"] = nullptr;
      nj["leaf_reason"] = leaf_reason_name(*node.leaf_reason);
    }
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  if (report) j["evaluation"] = to_json(*report);
  return j;
}

inline ordered_json cart_to_json(const CartTree& t, const EvalReport* report = nullptr) {
  ordered_json j;
  j["format"] = "capos-model";
  j["version"] = 1;
  j["kind"] = "cart";
  j["fingerprint"] = t.fingerprint;
  j["n_objects"] = t.n_objects;
  j["params"] = detail::params_json(t.params);
  j["attributes"] = t.attributes;
  j["binarization"] = detail::map_json(t.binarization);
  ordered_json nodes = ordered_json::array();
  for (const CartNode& node : t.nodes) {
    ordered_json nj;
    nj["id"] = node.id;
    nj["level"] = node.level;
    nj["objects"] = detail::object_array(node.scope.objects);
    nj["path"] = detail::scope_path_json(node.scope, t.attributes);
    nj["size"] = node.size;
    nj["positives"] = node.positives;
    nj["positive_fraction"] = node.positive_fraction;
    nj["impurity"] = node.impurity;
    nj["region"] = region_name(node.region);
    nj["majority"] = node.majority ? ordered_json(*node.majority) : ordered_json(nullptr);
    if (node.split_attribute) {
      nj["split"] = ordered_json{{"attribute", t.attributes[*node.split_attribute]}};
      nj["children"] = ordered_json{{"absent", node.children->first},
                                    {"present", node.children->second}};
    } else {
      nj["split"] = nullptr;
      nj["children"] = nullptr;
    }
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  if (report) j["evaluation"] = to_json(*report);
  return j;
}

inline std::string export_json(const Structure& s, const EvalReport* report = nullptr,
                               const std::string& stamp = {}) {
  ordered_json j = structure_to_json(s, report);
  if (!stamp.empty()) j["stamp"] = ordered_json{{"created", stamp}};
  return j.dump(2) + "\n";
}

inline std::string export_json(const CartTree& t, const EvalReport* report = nullptr,
                               const std::string& stamp = {}) {
  ordered_json j = cart_to_json(t, report);
  if (!stamp.empty()) j["stamp"] = ordered_json{{"created", stamp}};
  return j.dump(2) + "\n";
}

inline Structure structure_from_json(const ordered_json& j) {
  if (j.at("format") != "capos-model" || j.at("kind") != "3wcapos")
    throw input_error("not a three-way structure document");
  Structure s;
  s.fingerprint = j.at("fingerprint").get<std::string>();
  s.n_objects = j.at("n_objects").get<std::size_t>();
  s.params = detail::params_from_json(j.at("params"));
  s.attributes = j.at("attributes").get<std::vector<std::string>>();
  s.binarization = detail::map_from_json(j.at("binarization"));
  const auto attr_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t a = 0; a < s.attributes.size(); ++a)
      if (s.attributes[a] == name) return a;
    throw input_error("node references unknown attribute: " + name);
  };
  for (const auto& nj : j.at("nodes")) {
    StructureNode node;
    node.id = nj.at("id").get<std::size_t>();
    node.level = nj.at("level").get<std::size_t>();
    node.scope.objects = detail::objects_from_json(nj.at("objects"), s.n_objects);
    for (const auto& step : nj.at("path"))
      node.scope.conditioned.emplace_back(attr_index(step.at(0).get<std::string>()),
                                          step.at(1).get<bool>());
    node.size = nj.at("size").get<std::size_t>();
    node.positives = nj.at("positives").get<std::size_t>();
    node.positive_fraction = nj.at("positive_fraction").get<double>();
    node.region = detail::region_from_name(nj.at("region").get<std::string>());
    if (!nj.at("split").is_null()) {
      const auto& split = nj.at("split");
      node.split_attribute = attr_index(split.at("attribute").get<std::string>());
      CausalScore score;
      score.attribute_index = *node.split_attribute;
      score.attribute = split.at("attribute").get<std::string>();
      score.cf = split.at("cf").get<double>();
      score.log_abs = split.at("log_abs").get<double>();
      score.nc = split.at("nc").get<double>();
      score.defined = true;
      node.split_score = std::move(score);
      node.children = {nj.at("children").at("absent").get<std::size_t>(),
                       nj.at("children").at("present").get<std::size_t>()};
    } else {
      node.leaf_reason =
          detail::leaf_reason_from_name(nj.at("leaf_reason").get<std::string>());
    }
    s.nodes.push_back(std::move(node));
  }
  if (s.nodes.empty()) throw input_error("model has no nodes");
  for (const StructureNode& node : s.nodes)
    if (node.children && (node.children->first >= s.nodes.size() ||
                          node.children->second >= s.nodes.size()))
      throw input_error("node child index out of range");
  return s;
}

inline CartTree cart_from_json(const ordered_json& j) {
  if (j.at("format") != "capos-model" || j.at("kind") != "cart")
    throw input_error("not a cart document");
  CartTree t;
  t.fingerprint = j.at("fingerprint").get<std::string>();
  t.n_objects = j.at("n_objects").get<std::size_t>();
  t.params = detail::params_from_json(j.at("params"));
  t.attributes = j.at("attributes").get<std::vector<std::string>>();
  t.binarization = detail::map_from_json(j.at("binarization"));
  const auto attr_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t a = 0; a < t.attributes.size(); ++a)
      if (t.attributes[a] == name) return a;
    throw input_error("node references unknown attribute: " + name);
  };
  for (const auto& nj : j.at("nodes")) {
    CartNode node;
    node.id = nj.at("id").get<std::size_t>();
    node.level = nj.at("level").get<std::size_t>();
    node.scope.objects = detail::objects_from_json(nj.at("objects"), t.n_objects);
    for (const auto& step : nj.at("path"))
      node.scope.conditioned.emplace_back(attr_index(step.at(0).get<std::string>()),
                                          step.at(1).get<bool>());
    node.size = nj.at("size").get<std::size_t>();
    node.positives = nj.at("positives").get<std::size_t>();
    node.positive_fraction = nj.at("positive_fraction").get<double>();
    node.impurity = nj.at("impurity").get<double>();
    node.region = detail::region_from_name(nj.at("region").get<std::string>());
    if (!nj.at("majority").is_null()) node.majority = nj.at("majority").get<int>();
    if (!nj.at("split").is_null()) {
      node.split_attribute = attr_index(nj.at("split").at("attribute").get<std::string>());
      node.children = {nj.at("children").at("absent").get<std::size_t>(),
                       nj.at("children").at("present").get<std::size_t>()};
    }
    t.nodes.push_back(std::move(node));
  }
  if (t.nodes.empty()) throw input_error("model has no nodes");
  for (const CartNode& node : t.nodes)
    if (node.children && (node.children->first >= t.nodes.size() ||
                          node.children->second >= t.nodes.size()))
      throw input_error("node child index out of range");
  return t;
}

using Model = std::variant<Structure, CartTree>;

inline Model load_model(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("model is not valid JSON: ") + e.what());
  }
  try {
    if (!j.contains("kind")) throw input_error("model document has no kind field");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "3wcapos") return structure_from_json(j);
    if (kind == "cart") return cart_from_json(j);
    throw input_error("unknown model kind: " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace capos
