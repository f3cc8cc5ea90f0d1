#include "netx/persistence.hpp"

#include <cmath>
#include <map>

#include "netx/error.hpp"

namespace netx {

PersistenceFit estimate_persistence(std::span<const double> d_during, std::span<const double> d_post,
                                    std::span<const double> y_pre, std::span<const int> cluster_of, int bins,
                                    stats::BinMode mode, RobustType robust) {
  const std::size_t n = d_during.size();
  require(d_post.size() == n && y_pre.size() == n && cluster_of.size() == n, "estimate_persistence: size mismatch");
  stats::Binning binning = stats::make_bins(y_pre, bins, mode);
  stats::BinDemeaner dm(binning.bin_of);

  PersistenceFit fit;
  fit.n = n;
  fit.bins = binning.num_bins;
  fit.bins_requested = bins;
  fit.robust = robust;
  const std::size_t k = 1 + static_cast<std::size_t>(binning.num_bins);
  if (n <= k) throw NumericalError("estimate_persistence: not enough observations for the bin count");

  // Frisch-Waugh: slope and residuals from within-bin demeaned data.
  std::vector<double> x = dm.demean(d_during);
  std::vector<double> y = dm.demean(d_post);
  double sxx = stats::dot(x, x);
  if (!(sxx > 1e-300)) throw NumericalError("estimate_persistence: d_during has no within-bin variation");
  fit.beta = stats::dot(x, y) / sxx;

  std::map<int, double> score;
  for (std::size_t i = 0; i < n; ++i) score[cluster_of[i]] += x[i] * (y[i] - fit.beta * x[i]);
  double meat = 0.0;
  for (const auto& [c, s] : score) meat += s * s;
  fit.clusters = score.size();
  double var = meat / (sxx * sxx);
  if (robust == RobustType::kCR1) {
    const double g = static_cast<double>(fit.clusters);
    if (g > 1.0)
      var *= g / (g - 1.0) * (static_cast<double>(n) - 1.0) / (static_cast<double>(n) - static_cast<double>(k));
  }
  fit.std_error = std::sqrt(std::max(0.0, var));
  fit.ci_low = fit.beta - kZ975 * fit.std_error;
  fit.ci_high = fit.beta + kZ975 * fit.std_error;
  fit.p_value = fit.std_error > 0.0 ? stats::two_sided_normal_p(fit.beta / fit.std_error) : (fit.beta == 0.0 ? 1.0 : 0.0);
  return fit;
}

Json to_json(const PersistenceFit& fit) {
  Json j;
  j["outcome"] = fit.outcome;
  j["beta"] = number_or_null(fit.beta);
  j["std_error"] = number_or_null(fit.std_error);
  j["p_value"] = number_or_null(fit.p_value);
  j["ci_low"] = number_or_null(fit.ci_low);
  j["ci_high"] = number_or_null(fit.ci_high);
  j["bins"] = fit.bins;
  j["bins_requested"] = fit.bins_requested;
  j["clusters"] = fit.clusters;
  j["n"] = fit.n;
  j["robust"] = fit.robust == RobustType::kCR1 ? "CR1" : "CR0";
  return j;
}

}  // namespace netx
