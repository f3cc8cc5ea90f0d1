#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "netx/design.hpp"
#include "netx/exposure.hpp"
#include "netx/netgraph.hpp"
#include "netx/outcomes.hpp"
#include "netx/report.hpp"
#include "netx/upstream.hpp"

namespace netx::sim {

struct NetworkSpec {
  int n = 300;
  int clusters = 30;          // planted clusters; 0 recomputes with three_net_cluster
  double size_sigma = 0.0;    // log-normal spread of planted cluster sizes (0 = equal)
  double p_in = 0.3;          // within-cluster directed edge probability
  double p_out = 0.002;       // between clusters
  double weight_tail = 2.0;   // Pareto tail index of edge weights
  bool recluster = false;     // run three_net_cluster even when clusters are planted
};

// Outcomes on the log1p scale. Period means follow
//   Y_pre    = level + pre noise
//   Y_during = Y_pre + trend_during + tau z + exposure[cond] + eta
//   Y_post   = Y_pre + trend_post + beta (tau z + exposure[cond] + eta) + eps
// with month-level wiggles that average to zero within each period.
struct OutcomeSpec {
  double level_mu = 0.5;       // log-normal count law of the baseline monthly count
  double level_sigma = 1.0;
  double tau_direct = -0.05;
  std::array<double, 4> exposure_effect{0.0, 0.0, 0.0, 0.0};  // CL, CH, TL, TH
  double q = 0.7;
  double beta = 0.75;
  double trend_during = 0.02;
  double trend_post = 0.01;
  double noise = 0.1;          // sd of eta, eps and month wiggles
  int months_pre = 3;
  int months_during = 3;
  int months_post = 3;
  bool count_scale = false;    // noise multiplies counts instead of adding on the log scale
};

struct UpstreamSpec {
  int users = 200;
  double roster_mean = 8.0;      // mean roster size (geometric)
  double home_share = 0.8;       // chance a roster member comes from the home clusters
  int home_clusters = 2;
  double tau_upstream = -0.03;   // per percentage point of exposure
  double beta = 0.75;
  double noise = 0.2;
  double churn = 0.3;            // chance a pre-period reposter stops in a later month
};

struct ScenarioSpec {
  NetworkSpec network;
  OutcomeSpec outcomes;
  UpstreamSpec upstream;
  DesignParams design;
  std::string start_month = "2023-01";
  void validate() const;
};

Json to_json(const ScenarioSpec& spec);

struct SimNetwork {
  InteractionGraph graph;
  ClusterAssignment clusters;
  std::vector<int> planted;  // planted label per node (empty when none)
};

std::string node_name(int i);

SimNetwork gen_network(const NetworkSpec& spec, std::uint64_t seed);

struct SimOutcomes {
  OutcomePanel panel;                   // y_* and raw monthly values filled
  std::vector<double> y_during0, y_during1;  // potential period outcomes
  std::vector<double> y_post0, y_post1;
  std::vector<Condition> condition;
  PeriodSpec periods;
  Json truth;
};

SimOutcomes gen_outcomes(const SimNetwork& net, std::span<const std::uint8_t> z, const OutcomeSpec& spec,
                         const std::string& start_month, std::uint64_t seed);

struct SimUpstream {
  std::vector<std::string> user_ids;
  std::vector<std::vector<RosterEntry>> rosters;  // participants index net nodes
  std::vector<double> pre_volume;
  std::vector<double> t;                           // realized exposure
  std::vector<double> y;                           // during outcome
  std::vector<double> d_during, d_post;            // differenced outcomes for persistence
  double tau_unit = 0.0;                           // per unit of T
  double churn = 0.0;
  Json truth;
};

// Rosters concentrate on a few home clusters so exposures vary. Outcomes are
// linear in T: y = y(0) + tau T, d_post = d_post(0) + beta tau T.
SimUpstream gen_upstream_scenario(const SimNetwork& net, std::span<const std::uint8_t> z, const UpstreamSpec& spec,
                                  std::uint64_t seed);

// Post log consistent with a simulated experiment: participant posts drawn
// from the panel's monthly values, upstream originals reposted by rosters in
// the pre period, and later reposts thinned by churn and exposure.
std::vector<PostEvent> gen_posts(const SimNetwork& net, const SimOutcomes& outcomes, const SimUpstream& upstream,
                                 std::uint64_t seed);

// Hill estimator of the tail index from the k largest values.
double hill_tail_index(std::vector<double> values, std::size_t k);

}  // namespace netx::sim
