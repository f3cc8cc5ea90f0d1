#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace netx {

using Json = nlohmann::ordered_json;

inline constexpr double kZ975 = 1.959963984540054;

struct EstimateReport {
  std::string estimand;
  std::string method;
  double point = 0.0;       // log units
  double pct_change = 0.0;  // (exp(point) - 1) * 100
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  bool placebo = false;
  std::vector<std::string> warnings;
  Json metadata = Json::object();
};

// Fills pct_change, the normal-approximation 95% interval and the two-sided
// p-value from point and std_error.
void finish_normal(EstimateReport& r);

double pct_change(double log_effect);

Json to_json(const EstimateReport& r);

// Doubles that are NaN or infinite serialize as null.
Json number_or_null(double v);

}  // namespace netx
