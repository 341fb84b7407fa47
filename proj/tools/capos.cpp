// Command-line front end: binarize / rank / build / evaluate / predict.

#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <capos/capos.hpp>

using namespace capos;

namespace {

struct InputOptions {
  std::string file;
  std::string decision;
  std::string positive_label;
  std::vector<std::string> discrete;
  std::vector<std::string> continuous;
  std::string delimiter = ",";

  void attach(CLI::App* cmd) {
    cmd->add_option("input", file, "delimiter-separated table, first row = column names")
        ->required();
    cmd->add_option("--decision", decision, "decision column name")->required();
    cmd->add_option("--positive-label", positive_label,
                    "decision value mapped to 1 (default: \"1\")");
    cmd->add_option("--discrete", discrete, "columns to one-hot expand")
        ->delimiter(',');
    cmd->add_option("--continuous", continuous, "columns to cut-search")
        ->delimiter(',');
    cmd->add_option("--delimiter", delimiter, "field delimiter (default: comma)");
  }

  RawDataset load() const {
    Schema schema;
    schema.decision = decision;
    if (!positive_label.empty()) schema.positive_label = positive_label;
    schema.discrete = discrete;
    schema.continuous = continuous;
    if (delimiter == "\\t" || delimiter == "tab")
      schema.delimiter = '\t';
    else if (delimiter.size() == 1)
      schema.delimiter = delimiter[0];
    else
      throw input_error("--delimiter must be a single character");
    std::ifstream in(file);
    if (!in) throw input_error("cannot open input file: " + file);
    return parse_dataset(in, schema);
  }
};

struct ParamOptions {
  double alpha = 0.90;
  double beta = 0.15;
  std::size_t min_split = 4;
  long long max_depth = -1;
  bool strict = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "positive-region threshold (default 0.9)");
    cmd->add_option("--beta", beta, "negative-region threshold (default 0.15)");
    cmd->add_option("--min-split", min_split, "smallest node eligible for splitting");
    cmd->add_option("--max-depth", max_depth, "depth cap (default unlimited)");
    cmd->add_flag("--strict-purity", strict, "preset alpha=1 beta=0 min-split=2");
  }

  BuildParams params() const {
    BuildParams p;
    if (strict) p = BuildParams::strict_purity();
    else {
      p.alpha = alpha;
      p.beta = beta;
      p.min_split = min_split;
    }
    if (max_depth >= 0) p.max_depth = static_cast<std::size_t>(max_depth);
    p.validate();
    return p;
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write to " + path);
  out << content;
}

std::string now_iso8601() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string metric_cell(double value, bool defined) {
  return defined ? format_fixed(value, 3) : format_fixed(value, 3) + "*";
}

void print_report_row(const std::string& method, const EvalReport& r) {
  std::printf("%-8s  %5s  %5s  %5s  %5s  %5s\n", method.c_str(),
              metric_cell(r.acc, true).c_str(), metric_cell(r.rec, r.rec_defined).c_str(),
              metric_cell(r.fpr, r.fpr_defined).c_str(),
              metric_cell(r.pre, r.pre_defined).c_str(),
              metric_cell(r.f1, r.f1_defined).c_str());
}

int run_binarize(const InputOptions& input, const std::string& out_file,
                 const std::string& json_file) {
  const RawDataset raw = input.load();
  const auto [ctx, map] = build_context(raw);
  if (raw.dropped_rows)
    std::printf("dropped %zu row(s) with missing entries\n", raw.dropped_rows);
  std::fputs(binarization_report(ctx, map).c_str(), stdout);

  if (!out_file.empty()) {
    std::string csv;
    for (std::size_t a = 0; a < ctx.n_attributes(); ++a)
      csv += ctx.attribute_name(a) + ",";
    csv += raw.column_names[raw.decision_column] + "\n";
    for (std::size_t i = 0; i < ctx.n_objects(); ++i) {
      for (std::size_t a = 0; a < ctx.n_attributes(); ++a)
        csv += std::string(ctx.has(i, a) ? "1" : "0") + ",";
      csv += std::string(ctx.decision().test(i) ? "1" : "0") + "\n";
    }
    write_file(out_file, csv);
  }
  if (!json_file.empty()) {
    ordered_json j;
    j["objects"] = ctx.n_objects();
    j["fingerprint"] = ctx.fingerprint();
    j["binarization"] = detail::map_json(map);
    ordered_json extents = ordered_json::array();
    for (std::size_t a = 0; a < ctx.n_attributes(); ++a)
      extents.push_back(ordered_json{{"attribute", ctx.attribute_name(a)},
                                     {"count", ctx.column(a).count()}});
    j["extents"] = std::move(extents);
    write_file(json_file, j.dump(2) + "\n");
  }
  return 0;
}

int run_rank(const InputOptions& input, const std::string& json_file,
             const std::string& estimator, const std::vector<std::string>& adjust) {
  const RawDataset raw = input.load();
  const auto [ctx, map] = build_context(raw);
  CausalOptions opts;
  if (estimator == "backdoor") {
    opts.estimator = DoEstimator::backdoor;
    for (const std::string& name : adjust)
      opts.adjustment.push_back(ctx.attribute_index(name));
  } else if (estimator != "complement") {
    throw input_error("--do-estimator must be complement or backdoor");
  }
  const auto ranked =
      rank_attributes(ctx, all_attribute_indices(ctx), NodeScope::full(ctx), opts);

  std::size_t width = 9;
  for (const CausalScore& s : ranked) width = std::max(width, s.attribute.size());
  std::printf("%-*s  %8s  %9s  %6s\n", int(width), "attribute", "CF", "|log CF|", "NC");
  for (const CausalScore& s : ranked) {
    if (s.defined)
      std::printf("%-*s  %8.3f  %9.3f  %6.3f\n", int(width), s.attribute.c_str(), s.cf,
                  s.cf == 0.0 ? std::numeric_limits<double>::infinity() : s.log_abs,
                  s.nc);
    else
      std::printf("%-*s  %8s  %9s  %6s\n", int(width), s.attribute.c_str(), "-", "-",
                  "undefined");
  }

  if (!json_file.empty()) {
    ordered_json scores = ordered_json::array();
    for (const CausalScore& s : ranked) {
      ordered_json j;
      j["attribute"] = s.attribute;
      j["defined"] = s.defined;
      j["cf"] = s.defined ? ordered_json(s.cf) : ordered_json(nullptr);
      j["log_abs"] = s.defined ? ordered_json(s.log_abs) : ordered_json(nullptr);
      j["nc"] = s.defined ? ordered_json(s.nc) : ordered_json(nullptr);
      scores.push_back(std::move(j));
    }
    write_file(json_file,
               ordered_json{{"fingerprint", ctx.fingerprint()}, {"scores", scores}}
                       .dump(2) +
                   "\n");
  }
  return 0;
}

template <typename Tree>
void print_walkthrough(const Tree& tree) {
  for (const auto& node : tree.nodes) {
    std::string branch;
    if (!node.scope.conditioned.empty()) {
      const auto& [attr, present] = node.scope.conditioned.back();
      branch = "[" + tree.attributes[attr] + (present ? " present] " : " absent] ");
    }
    std::string tail;
    if (node.is_leaf()) {
      tail = "leaf";
      if constexpr (requires { node.leaf_reason; }) {
        tail += std::string(" (") + leaf_reason_name(*node.leaf_reason) + ")";
      }
    } else {
      tail = "split=" + tree.attributes[*node.split_attribute];
      if constexpr (requires { node.split_score; }) {
        tail += " (nc=" + format_fixed(node.split_score->nc, 3) + ")";
      } else {
        tail += " (gini=" + format_fixed(node.impurity, 3) + ")";
      }
    }
    std::printf("level %zu: node %zu  %sn=%zu v=%s %s  %s\n", node.level, node.id,
                branch.c_str(), node.size, format_fixed(node.positive_fraction, 3).c_str(),
                region_name(node.region), tail.c_str());
  }
}

int run_build(const InputOptions& input, const ParamOptions& params, bool cart,
              const std::string& dot_file, const std::string& json_file, bool stamp) {
  const RawDataset raw = input.load();
  const auto [ctx, map] = build_context(raw);
  const std::string stamp_text = stamp ? now_iso8601() : "";
  if (cart) {
    const CartTree tree = build_cart(ctx, params.params(), map);
    print_walkthrough(tree);
    if (!dot_file.empty()) write_file(dot_file, export_dot(tree, stamp_text));
    if (!json_file.empty()) write_file(json_file, export_json(tree, nullptr, stamp_text));
  } else {
    const Structure s = build_structure(ctx, params.params(), map);
    print_walkthrough(s);
    if (!dot_file.empty()) write_file(dot_file, export_dot(s, stamp_text));
    if (!json_file.empty()) write_file(json_file, export_json(s, nullptr, stamp_text));
  }
  return 0;
}

int run_evaluate(const InputOptions& input, const ParamOptions& params, bool use_loocv,
                 bool cart, const std::string& json_file) {
  const RawDataset raw = input.load();
  const BuildParams p = params.params();
  std::optional<EvalReport> three_way, cart_report;
  std::string protocol;
  if (use_loocv) {
    const LoocvResult result = loocv(raw, p, true, cart);
    three_way = result.three_way;
    cart_report = result.cart;
    protocol = "leave-one-out (" + std::to_string(raw.n_rows) + " folds, " +
               std::to_string(three_way->skipped.size()) + " skipped)";
  } else {
    const auto [ctx, map] = build_context(raw);
    three_way = resubstitution(build_structure(ctx, p, map), ctx);
    if (cart) cart_report = resubstitution(build_cart(ctx, p, map), ctx);
    protocol = "resubstitution";
  }

  std::printf("dataset: %s (%zu objects)\nprotocol: %s\n", input.file.c_str(),
              raw.n_rows, protocol.c_str());
  std::printf("%-8s  %5s  %5s  %5s  %5s  %5s\n", "method", "ACC", "REC", "FPR", "PRE",
              "F1");
  print_report_row("3wcapos", *three_way);
  if (cart_report) print_report_row("cart", *cart_report);
  if (!three_way->rec_defined || !three_way->pre_defined || !three_way->f1_defined ||
      (cart_report && (!cart_report->rec_defined || !cart_report->pre_defined ||
                       !cart_report->f1_defined)))
    std::printf("(* metric denominator was empty; reported as 0)\n");

  if (!json_file.empty()) {
    ordered_json j;
    j["dataset"] = input.file;
    j["protocol"] = use_loocv ? "loocv" : "resubstitution";
    j["three_way"] = to_json(*three_way);
    if (cart_report) j["cart"] = to_json(*cart_report);
    write_file(json_file, j.dump(2) + "\n");
  }
  return 0;
}

int run_predict(const std::string& model_file, const std::string& input_file,
                const std::string& delimiter, const std::string& json_file) {
  const Model model = load_model([&] {
    std::ifstream in(model_file);
    if (!in) throw input_error("cannot open model file: " + model_file);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
  }());
  const BinarizationMap& map = std::holds_alternative<Structure>(model)
                                   ? std::get<Structure>(model).binarization
                                   : std::get<CartTree>(model).binarization;
  if (map.rules.empty()) throw input_error("model carries no binarization rules");

  std::ifstream in(input_file);
  if (!in) throw input_error("cannot open input file: " + input_file);
  const char delim = delimiter.size() == 1 ? delimiter[0] : ',';
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty input: missing header row");
  const std::vector<std::string> names = split_fields(line, delim);

  std::printf("%-6s  %5s  %10s  %5s  trace\n", "row", "label", "confidence", "leaf");
  ordered_json rows = ordered_json::array();
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_no;
    const std::vector<std::string> fields = split_fields(line, delim);
    if (fields.size() != names.size())
      throw input_error("row " + std::to_string(row_no) + ": field count mismatch");
    std::map<std::string, std::string> keyed;
    for (std::size_t i = 0; i < names.size(); ++i) keyed[names[i]] = fields[i];
    const std::vector<char> sample = map.apply(keyed);
    const Prediction pred = std::holds_alternative<Structure>(model)
                                ? predict(std::get<Structure>(model), sample)
                                : predict_cart(std::get<CartTree>(model), sample);
    std::string trace;
    for (const auto& [attr, present] : pred.trace)
      trace += (trace.empty() ? "" : " -> ") + attr + (present ? "+" : "-");
    std::printf("%-6zu  %5d  %10s  %5zu  %s\n", row_no, pred.label,
                format_fixed(pred.confidence, 3).c_str(), pred.leaf_id, trace.c_str());
    ordered_json r;
    r["row"] = row_no;
    r["label"] = pred.label;
    r["confidence"] = pred.confidence;
    r["leaf"] = pred.leaf_id;
    ordered_json tr = ordered_json::array();
    for (const auto& [attr, present] : pred.trace)
      tr.push_back(ordered_json::array({attr, present}));
    r["trace"] = std::move(tr);
    rows.push_back(std::move(r));
  }
  if (!json_file.empty())
    write_file(json_file, ordered_json{{"predictions", rows}}.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-way causal attribute partial order structures over binary "
               "decision tables"};
  app.require_subcommand(1);

  InputOptions bin_input, rank_input, build_input, eval_input;
  ParamOptions build_params, eval_params;
  std::string bin_out, bin_json;
  std::string rank_json, rank_estimator = "complement";
  std::vector<std::string> rank_adjust;
  std::string build_dot, build_json, build_baseline, eval_baseline;
  bool build_stamp = false;
  bool eval_loocv = false;
  std::string eval_json;
  std::string predict_model, predict_input, predict_delim = ",", predict_json;

  CLI::App* binarize = app.add_subcommand("binarize", "convert a table to a binary context");
  bin_input.attach(binarize);
  binarize->add_option("--out", bin_out, "write the binarized context as csv");
  binarize->add_option("--json", bin_json, "write rules and extents as json");

  CLI::App* rank = app.add_subcommand("rank", "score attributes by causal strength");
  rank_input.attach(rank);
  rank->add_option("--json", rank_json, "write the scores as json");
  rank->add_option("--do-estimator", rank_estimator,
                   "complement (default) or backdoor (experimental)");
  rank->add_option("--adjust", rank_adjust,
                   "backdoor adjustment attributes (binary attribute names)")
      ->delimiter(',');

  CLI::App* build = app.add_subcommand("build", "grow the three-way structure");
  build_input.attach(build);
  build_params.attach(build);
  build->add_option("--baseline", build_baseline, "build a comparator instead (cart)")
      ->check(CLI::IsMember({"cart"}));
  build->add_option("--dot", build_dot, "write a graphviz rendering");
  build->add_option("--json", build_json, "write the model document");
  build->add_flag("--stamp", build_stamp, "add a creation timestamp to exports");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score classification quality");
  eval_input.attach(evaluate);
  eval_params.attach(evaluate);
  evaluate->add_flag("--loocv", eval_loocv, "leave-one-out cross-validation");
  evaluate->add_option("--baseline", eval_baseline, "also evaluate a comparator (cart)")
      ->check(CLI::IsMember({"cart"}));
  evaluate->add_option("--json", eval_json, "write the full report as json");

  CLI::App* predict = app.add_subcommand("predict", "classify rows with a saved model");
  predict->add_option("--model", predict_model, "model json from `build --json`")
      ->required();
  predict->add_option("--input", predict_input, "rows to classify (same format)")
      ->required();
  predict->add_option("--delimiter", predict_delim, "field delimiter");
  predict->add_option("--json", predict_json, "write predictions as json");

  try {
    app.parse(argc, argv);
    if (binarize->parsed()) return run_binarize(bin_input, bin_out, bin_json);
    if (rank->parsed()) return run_rank(rank_input, rank_json, rank_estimator, rank_adjust);
    if (build->parsed())
      return run_build(build_input, build_params, build_baseline == "cart", build_dot,
                       build_json, build_stamp);
    if (evaluate->parsed())
      return run_evaluate(eval_input, eval_params, eval_loocv, eval_baseline == "cart",
                          eval_json);
    if (predict->parsed())
      return run_predict(predict_model, predict_input, predict_delim, predict_json);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const degenerate_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const input_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
