#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <capos/capos.hpp>

namespace fixtures {

inline std::string data_path(const std::string& name) {
  return std::string(CAPOS_DATA_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing fixture: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline capos::RawDataset watermelon_raw() {
  capos::Schema schema;
  schema.decision = "good";
  return capos::parse_dataset(slurp(data_path("watermelon.csv")), schema);
}

inline capos::RawDataset balloons_raw() {
  capos::Schema schema;
  schema.decision = "inflated";
  schema.positive_label = "T";
  return capos::parse_dataset(slurp(data_path("balloons.csv")), schema);
}

inline std::pair<capos::FormalDecisionContext, capos::BinarizationMap> watermelon() {
  return capos::build_context(watermelon_raw());
}

inline std::pair<capos::FormalDecisionContext, capos::BinarizationMap> balloons() {
  return capos::build_context(balloons_raw());
}

}  // namespace fixtures
