#pragma once

#include <map>
#include <set>
#include <span>
#include <vector>

#include "scmmsb/dynamic_network.hpp"
#include "scmmsb/model.hpp"
#include "scmmsb/sgld.hpp"

namespace scmmsb {

struct ThresholdPolicy {
  double kappa = 3.0;  // flag when distance > kappa * median(series)
};

struct ChangeReport {
  int num_steps = 0;
  int num_nodes = 0;
  std::vector<double> global_distances;        // [T-1]
  std::set<int> global_change_points;          // reported as the entered step
  std::vector<double> local_scores;            // [T-1][N]
  std::map<int, std::vector<int>> flagged_nodes;  // entered step -> ranked ids
  double threshold_used = 0.0;
};

struct Alignment {
  std::vector<int> permutation;  // permutation[k] = learned column for true k
  double cost = 0.0;
};

// exp(- mean per-dyad predictive log-likelihood) under the posterior-mean
// memberships and affinities; >= 1, lower is better.
double perplexity(const DynamicNetwork& net, const PosteriorSummary& summary);

// Same, restricted to one step's dyads.
std::vector<double> perplexity_per_step(const DynamicNetwork& net,
                                        const PosteriorSummary& summary);

// Log-likelihood of all dyads under posterior means (the basis of both
// perplexity and the information criterion).
double predictive_loglik(const DynamicNetwork& net,
                         const PosteriorSummary& summary);

double aic(double loglik, long param_count);

// Fitted-parameter count: memberships' free dimensions, symmetric
// affinities, influence weights, plus eta and gamma.
long model_param_count(int num_steps, int num_nodes, int num_comms);

// Frobenius distances between consecutive matrices of a [T][K][K] sequence.
std::vector<double> frobenius_distance_series(std::span<const double> mats,
                                              int num_steps, int num_comms);

// The same on sigma(phi): distances on the probability scale.
std::vector<double> affinity_distance_series(std::span<const double> phi,
                                             int num_steps, int num_comms);

// Flags boundary t-1 -> t when series[t-1] > kappa * median(series) and
// reports it as time t (the first step of the new regime).
std::set<int> detect_global_changes(std::span<const double> series,
                                    const ThresholdPolicy& policy = {});

// score[t-1][p] = L1 distance between consecutive membership rows, in [0,2].
std::vector<double> local_change_scores(std::span<const double> mean_pi,
                                        int num_steps, int num_nodes,
                                        int num_comms);

// Optimal assignment between learned and true community columns under
// summed L1 distance (exact, Hungarian method).
Alignment align_labels(std::span<const double> learned_pi,
                       std::span<const double> true_pi, int num_steps,
                       int num_nodes, int num_comms);

// Mean over (t,p) of the L1 distance between aligned learned rows and true
// rows; in [0,2].
double recovery_error(std::span<const double> learned_pi,
                      std::span<const double> true_pi,
                      const Alignment& alignment, int num_steps,
                      int num_nodes, int num_comms);

// Full detection pass over a posterior summary.
ChangeReport detect_changes(const PosteriorSummary& summary,
                            const ThresholdPolicy& policy = {});

}  // namespace scmmsb
