#include "netx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "netx/error.hpp"

namespace netx::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal_quantile: p must be in (0, 1)");
  return boost::math::quantile(boost::math::normal(), p);
}

double two_sided_normal_p(double z) {
  if (std::isnan(z)) return std::numeric_limits<double>::quiet_NaN();
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

double mean(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double median(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

KsResult ks_uniform(std::span<const double> sample) {
  KsResult out;
  if (sample.empty()) return out;
  std::vector<double> v(sample.begin(), sample.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double x = std::clamp(v[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - x, x - static_cast<double>(i) / n});
  }
  out.statistic = d;
  // Asymptotic Kolmogorov distribution with Stephens' small-sample correction.
  double sqrt_n = std::sqrt(n);
  double lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
  if (lambda < 1e-3) {
    out.p_value = 1.0;
    return out;
  }
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  out.p_value = std::clamp(2.0 * sum, 0.0, 1.0);
  return out;
}

namespace {

void renumber(Binning& b) {
  std::vector<int> present(static_cast<std::size_t>(*std::max_element(b.bin_of.begin(), b.bin_of.end())) + 1, 0);
  for (int id : b.bin_of) present[static_cast<std::size_t>(id)] = 1;
  std::vector<int> remap(present.size(), -1);
  int next = 0;
  for (std::size_t k = 0; k < present.size(); ++k)
    if (present[k]) remap[k] = next++;
  for (int& id : b.bin_of) id = remap[static_cast<std::size_t>(id)];
  b.num_bins = next;
}

}  // namespace

Binning make_bins(std::span<const double> values, int requested, BinMode mode) {
  require(requested >= 1, "bin count must be at least 1");
  Binning out;
  out.requested = requested;
  const std::size_t n = values.size();
  out.bin_of.assign(n, 0);
  if (n == 0) {
    out.num_bins = 0;
    return out;
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto k_bins = static_cast<std::size_t>(requested);
  if (mode == BinMode::kEqualCount) {
    std::vector<double> edges;
    for (std::size_t k = 1; k < k_bins; ++k) edges.push_back(sorted[(k * n) / k_bins]);
    for (std::size_t i = 0; i < n; ++i) {
      int b = 0;
      for (double e : edges)
        if (values[i] >= e) ++b;
      out.bin_of[i] = b;
    }
  } else {
    double lo = sorted.front(), hi = sorted.back();
    double width = (hi - lo) / static_cast<double>(k_bins);
    for (std::size_t i = 0; i < n; ++i) {
      int b = width > 0.0 ? static_cast<int>(std::floor((values[i] - lo) / width)) : 0;
      out.bin_of[i] = std::clamp(b, 0, requested - 1);
    }
  }
  renumber(out);
  return out;
}

int merge_singleton_bins(Binning& b) {
  int merges = 0;
  for (;;) {
    if (b.num_bins <= 1) break;
    std::vector<int> count(static_cast<std::size_t>(b.num_bins), 0);
    for (int id : b.bin_of) ++count[static_cast<std::size_t>(id)];
    int target = -1;
    for (int k = 0; k < b.num_bins; ++k)
      if (count[static_cast<std::size_t>(k)] == 1) {
        target = k;
        break;
      }
    if (target < 0) break;
    int into = target + 1 < b.num_bins ? target + 1 : target - 1;
    for (int& id : b.bin_of)
      if (id == target) id = into;
    renumber(b);
    ++merges;
  }
  b.singleton_merges += merges;
  return merges;
}

BinDemeaner::BinDemeaner(std::vector<int> bin_of) : bin_of_(std::move(bin_of)) {
  num_bins_ = bin_of_.empty() ? 0 : *std::max_element(bin_of_.begin(), bin_of_.end()) + 1;
  std::vector<double> count(static_cast<std::size_t>(num_bins_), 0.0);
  for (int id : bin_of_) count[static_cast<std::size_t>(id)] += 1.0;
  inv_count_.resize(count.size());
  for (std::size_t k = 0; k < count.size(); ++k) inv_count_[k] = count[k] > 0 ? 1.0 / count[k] : 0.0;
}

void BinDemeaner::demean_in_place(std::span<double> x) const {
  std::vector<double> sums(static_cast<std::size_t>(num_bins_), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) sums[static_cast<std::size_t>(bin_of_[i])] += x[i];
  for (std::size_t k = 0; k < sums.size(); ++k) sums[k] *= inv_count_[k];
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= sums[static_cast<std::size_t>(bin_of_[i])];
}

std::vector<double> BinDemeaner::demean(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  demean_in_place(out);
  return out;
}

double BinDemeaner::slope(std::span<const double> x, std::span<const double> y) const {
  std::vector<double> mx = demean(x);
  double sxx = dot(mx, mx);
  if (!(sxx > 1e-300)) return std::numeric_limits<double>::quiet_NaN();
  return dot(mx, y) / sxx;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

WlsFit wls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  require(x.rows() == y.size() && y.size() == w.size(), "wls: dimension mismatch");
  Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
  Eigen::MatrixXd xtwx = xtw * x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtwx);
  if (qr.rank() < xtwx.cols()) throw NumericalError("wls: design matrix is rank deficient");
  WlsFit fit;
  fit.coef = qr.solve(xtw * y);
  fit.bread = qr.inverse();
  fit.residuals = y - x * fit.coef;
  fit.weights = w;
  return fit;
}

}  // namespace netx::stats
