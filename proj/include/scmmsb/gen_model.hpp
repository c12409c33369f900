#pragma once

#include <span>
#include <utility>
#include <vector>

#include "scmmsb/dynamic_network.hpp"
#include "scmmsb/model.hpp"
#include "scmmsb/rng.hpp"

namespace scmmsb {

// Softmax with max-subtraction: out[k] = exp(mu[k] - max) / sum.
void membership_simplex(std::span<const double> mu, std::span<double> out);

std::vector<double> membership_simplex(std::span<const double> mu);

// Mean of mu_prev rows over p's neighbours at step t; returns p's own
// mu_prev row when p has no neighbours at step t.
std::vector<double> neighbor_influence(const DynamicNetwork& net,
                                       std::span<const double> mu_prev,
                                       int num_comms, int p, int t);

// f = (1 - beta) * mu_prev + beta * c, elementwise.
std::vector<double> transition_mean(std::span<const double> mu_prev_row,
                                    std::span<const double> c_row,
                                    double beta);

// P(Y=1) = sum_{k,l} pi_p[k] pi_q[l] (1 - rho) B[k][l], indicators
// marginalized out.
double link_probability(std::span<const double> pi_p,
                        std::span<const double> pi_q,
                        std::span<const double> b, int num_comms, double rho);

// Draw indicators for every dyad at every step and one Bernoulli link per
// unordered dyad. state.mu / state.phi must be fully populated.
std::pair<DynamicNetwork, IndicatorSet> sample_network(
    const LatentState& state, const ModelParams& params, uint64_t seed);

// Forward-simulate mu and phi from the priors, interleaving network
// sampling per step: the influence c for the step-t transition is computed
// from the just-sampled network of step t-1. Indicators end up in the
// returned state's z.
LatentState sample_trajectory(const ModelParams& params, int num_nodes,
                              int num_steps, uint64_t seed);

struct GeneratorOptions {
  int num_nodes = 30;
  double major = 0.8;   // link probability on the pattern's strong cells
  double minor = 0.05;  // link probability elsewhere
  double rho = 0.0;
  double mu_scale = 40.0;  // magnitude of the one-hot mu rows
};

struct SyntheticData {
  DynamicNetwork network;
  LatentState state;  // the generating latents, indicators included
  ModelParams params;
  GroundTruth truth;
};

// Scenario generator, K=3. Variants:
//   1: block-affinity regime switches entering at t=4 and t=7, T=9.
//   2: nodes 13..17 flip community 1 -> 2 at t=5, constant affinity, T=9.
//   3: both kinds of change in one trajectory, T=12.
SyntheticData generate_synthetic(int variant, uint64_t seed,
                                 const GeneratorOptions& opts = {});

// Full log joint density of (mu, phi, z, Y), including the truncated
// Laplace prior on beta. Indicators must be present in state.z. The mu
// transition into step t conditions on the neighbour set of step t itself
// (applied to step t-1 memberships).
double log_joint(const DynamicNetwork& net, const LatentState& state,
                 const ModelParams& params);

}  // namespace scmmsb
