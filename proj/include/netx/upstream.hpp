#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "netx/design.hpp"
#include "netx/outcomes.hpp"
#include "netx/ri.hpp"
#include "netx/stats.hpp"

namespace netx {

// One participant's contribution to an upstream user's exposure.
struct RosterEntry {
  int participant = 0;  // index into the participant NodeIndex
  double weight = 0.0;  // repost count, or hate-weighted count
};

struct UpstreamUser {
  std::string user_id;
  double pre_posts = 0.0;           // posts authored in the window
  double reposts_total = 0.0;       // all reposts received
  double reposts_participant = 0.0;
  double hate_total = 0.0;          // same, weighted by the original's hate score
  double hate_participant = 0.0;
  std::vector<RosterEntry> roster;       // unweighted, aggregated per participant
  std::vector<RosterEntry> hate_roster;  // hate-weighted

  double potential_exposure(bool hate_weighted = false) const;  // F_i
};

enum class ExposureWeighting { kCount, kHate };

struct UpstreamData {
  NodeIndex participants;
  std::vector<UpstreamUser> users;  // every non-participant author reposted in the window
  std::size_t unresolved_reposts = 0;  // reposts attributed via source_user_id only
};

// Rosters from reposts of originals posted inside `window`. Reposts join to
// their original by source_post_id; without one they count toward the source
// user directly. Only authors reposted by at least one participant appear.
UpstreamData build_upstream(std::span<const PostEvent> posts, const NodeIndex& participants, const Period& window);

// T_i under assignment z over participants; NaN when no participant reposts.
double realized_exposure(std::span<const RosterEntry> roster, std::span<const std::uint8_t> z);

struct Selection {
  std::vector<std::size_t> users;  // indices into UpstreamData::users, in rank order
  std::size_t over_cap = 0;
  std::vector<std::string> warnings;
};

// Ranks by F_i (desc), then total reposts received (desc), then user id.
Selection select_upstream(const UpstreamData& data, std::size_t limit = 400, double max_posts = 15000.0,
                          ExposureWeighting weighting = ExposureWeighting::kCount);

// Realized exposures T^(b) for every replicate, [b][user].
class ExposureDraws {
 public:
  ExposureDraws(const std::vector<const std::vector<RosterEntry>*>& rosters, const ClusterAssignment& clusters,
                const DesignParams& params, std::size_t reps, std::uint64_t seed, unsigned workers = 1);
  std::size_t reps() const { return reps_; }
  std::size_t users() const { return users_; }
  std::span<const double> draw(std::size_t b) const { return {data_.data() + b * users_, users_}; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::size_t reps_ = 0;
  std::size_t users_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> data_;
};

// Coefficient on T in y ~ T + bin fixed effects.
double upstream_statistic(std::span<const double> y, std::span<const double> t, const stats::BinDemeaner& bins);

// Bins on pre-period posting volume, singletons merged into neighbours.
stats::Binning upstream_bins(std::span<const double> pre_volume, int requested = 10);

struct UpstreamRiOptions {
  Grid grid = Grid::from(-10.0, 0.25, 10.0);  // tau per unit of T
  double alpha = 0.05;
  Tail tail = Tail::kEqualTailed;
};

// p-value of H0: tau = tau0 under the linear exposure-response model.
double ri_test(std::span<const double> y, std::span<const double> t, const ExposureDraws& draws,
               const stats::BinDemeaner& bins, double tau0, Tail tail = Tail::kEqualTailed);

// Tests every grid point and inverts. Reported per unit of T; per percentage
// point scale is tau / 100.
RiResult ri_confidence_interval(std::span<const double> y, std::span<const double> t, const ExposureDraws& draws,
                                const stats::BinDemeaner& bins, const UpstreamRiOptions& options);

// Lost reposters: members of the pre-period roster absent from the period roster.
std::size_t lost_count(const std::unordered_set<std::string>& pre_roster,
                       const std::unordered_set<std::string>& period_roster);

struct UpstreamOutcomes {
  // Per selected user; period outcomes use the panel's aggregation.
  std::vector<double> hate_part_pre, hate_part_during, hate_part_post;
  std::vector<double> hate_non_pre, hate_non_during, hate_non_post;
  // log1p(lost); NaN when the pre roster is empty.
  std::vector<double> lost_part_during, lost_part_post;
  std::vector<double> lost_non_during, lost_non_post;
  std::size_t empty_roster_part = 0;
  std::size_t empty_roster_non = 0;
  bool has_post = false;
};

enum class LostMode { kHateReposts, kAnyReposts };

UpstreamOutcomes upstream_outcomes(std::span<const PostEvent> posts, const UpstreamData& data,
                                   std::span<const std::size_t> selected, const PeriodSpec& periods,
                                   const HateMeasure& measure, LostMode lost_mode = LostMode::kHateReposts,
                                   PeriodAggregation aggregation = PeriodAggregation::kMonthlyLogMean);

struct PersistenceRow {
  double tau = 0.0;
  bool refused = false;  // tau == 0
  double beta_hat = 0.0;  // centre of the highest-p grid points
  bool ci_empty = true;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_beta_zero = 1.0;
  std::vector<double> grid_p;
};

struct PersistenceRiOptions {
  Grid tau_grid = Grid::from(-5.0, 1.0, -1.0);
  Grid beta_grid = Grid::from(0.0, 0.01, 1.0);
  double alpha = 0.05;
  Tail tail = Tail::kAbsolute;
};

// RI for beta conditional on tau: during outcomes shift by tau (T^b - T),
// post outcomes by beta0 tau (T^b - T); statistic is the slope of post on
// during with bin fixed effects.
std::vector<PersistenceRow> persistence_ri(std::span<const double> d_during, std::span<const double> d_post,
                                           std::span<const double> t, const ExposureDraws& draws,
                                           const stats::BinDemeaner& bins, const PersistenceRiOptions& options);

double persistence_ri_p(std::span<const double> d_during, std::span<const double> d_post, std::span<const double> t,
                        const ExposureDraws& draws, const stats::BinDemeaner& bins, double tau, double beta0,
                        Tail tail = Tail::kAbsolute);

Json to_json(const PersistenceRow& row);

}  // namespace netx
