#include "netx/report.hpp"

#include <cmath>

#include "netx/stats.hpp"

namespace netx {

double pct_change(double log_effect) { return std::expm1(log_effect) * 100.0; }

void finish_normal(EstimateReport& r) {
  r.pct_change = pct_change(r.point);
  r.ci_low = r.point - kZ975 * r.std_error;
  r.ci_high = r.point + kZ975 * r.std_error;
  if (r.std_error > 0.0) {
    r.p_value = stats::two_sided_normal_p(r.point / r.std_error);
  } else {
    r.p_value = r.point == 0.0 ? 1.0 : 0.0;
  }
}

Json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

Json to_json(const EstimateReport& r) {
  Json j;
  j["estimand"] = r.estimand;
  j["method"] = r.method;
  j["point"] = number_or_null(r.point);
  j["pct_change"] = number_or_null(r.pct_change);
  j["std_error"] = number_or_null(r.std_error);
  j["ci_low"] = number_or_null(r.ci_low);
  j["ci_high"] = number_or_null(r.ci_high);
  j["p_value"] = number_or_null(r.p_value);
  j["n"] = r.n;
  j["placebo"] = r.placebo;
  j["warnings"] = r.warnings;
  j["metadata"] = r.metadata;
  return j;
}

}  // namespace netx
