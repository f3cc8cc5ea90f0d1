#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace netx::stats {

double normal_cdf(double x);
double normal_quantile(double p);

// Two-sided p-value of a z statistic.
double two_sided_normal_p(double z);

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // sample variance (n - 1)
double median(std::span<const double> x);

// One-sample Kolmogorov-Smirnov test against Uniform(0, 1).
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_uniform(std::span<const double> sample);

enum class BinMode { kEqualCount, kEqualWidth };

struct Binning {
  std::vector<int> bin_of;  // consecutive ids 0..num_bins-1, ordered by value
  int num_bins = 0;
  int requested = 0;
  int singleton_merges = 0;
  bool reduced() const { return num_bins < requested; }
};

// Bins `values` into at most `requested` bins. Equal-count bins use order
// statistics as edges, so tied values always share a bin and any strictly
// increasing transform of the values yields the same partition. Empty bins
// are dropped and ids renumbered.
Binning make_bins(std::span<const double> values, int requested, BinMode mode = BinMode::kEqualCount);

// Folds every single-member bin into the next higher bin (the top bin folds
// downward) until none remain. Returns the number of merges.
int merge_singleton_bins(Binning& binning);

// Within-bin demeaning: the annihilator of a full set of bin dummies.
// Slopes computed on demeaned data equal OLS slopes with bin fixed effects.
class BinDemeaner {
 public:
  explicit BinDemeaner(std::vector<int> bin_of);

  std::size_t size() const { return bin_of_.size(); }
  int num_bins() const { return num_bins_; }
  const std::vector<int>& bin_of() const { return bin_of_; }

  std::vector<double> demean(std::span<const double> x) const;
  void demean_in_place(std::span<double> x) const;

  // Coefficient on x in y ~ x + bin dummies. Returns NaN when x has no
  // within-bin variation.
  double slope(std::span<const double> x, std::span<const double> y) const;

 private:
  std::vector<int> bin_of_;
  int num_bins_ = 0;
  std::vector<double> inv_count_;
};

double dot(std::span<const double> a, std::span<const double> b);

struct WlsFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd bread;  // (X' W X)^{-1}
  Eigen::VectorXd residuals;
  Eigen::VectorXd weights;
};

// Weighted least squares. Throws NumericalError when X' W X is singular.
WlsFit wls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w);

}  // namespace netx::stats
