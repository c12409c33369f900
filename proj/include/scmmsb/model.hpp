#pragma once

#include <cmath>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "scmmsb/dynamic_network.hpp"
#include "scmmsb/errors.hpp"

namespace scmmsb {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Floor applied to Bernoulli probabilities before taking logs.
inline constexpr double kProbFloor = 1e-12;

inline double log_floored(double p) {
  return std::log(p < kProbFloor ? kProbFloor : p);
}

// Per-dyad interaction indicator pairs, one (source, target) pair per
// unordered dyad per time step, in canonical dyad order. `source` is drawn
// from the membership of the smaller node id, `target` from the larger.
struct IndicatorSet {
  int num_nodes = 0;
  int num_steps = 0;
  std::vector<int> source;
  std::vector<int> target;

  IndicatorSet() = default;
  IndicatorSet(int n, int t)
      : num_nodes(n),
        num_steps(t),
        source(static_cast<std::size_t>(t) * dyads_per_step(n), 0),
        target(static_cast<std::size_t>(t) * dyads_per_step(n), 0) {}

  bool empty() const { return source.empty(); }

  std::size_t index(int t, int p, int q) const {
    return static_cast<std::size_t>(t) * dyads_per_step(num_nodes) +
           dyad_offset(num_nodes, p, q);
  }
};

// Unnormalized memberships mu[t][p][k] and affinities phi[t][k][l]
// (symmetric per t), plus optional per-dyad indicators. Normalized
// memberships and link probabilities are derived on demand.
struct LatentState {
  int num_steps = 0;
  int num_nodes = 0;
  int num_comms = 0;
  std::vector<double> mu;   // [T * N * K]
  std::vector<double> phi;  // [T * K * K], phi[t] symmetric
  IndicatorSet z;

  LatentState() = default;
  LatentState(int t, int n, int k)
      : num_steps(t),
        num_nodes(n),
        num_comms(k),
        mu(static_cast<std::size_t>(t) * n * k, 0.0),
        phi(static_cast<std::size_t>(t) * k * k, 0.0) {}

  double* mu_row(int t, int p) {
    return mu.data() + (static_cast<std::size_t>(t) * num_nodes + p) * num_comms;
  }
  const double* mu_row(int t, int p) const {
    return mu.data() + (static_cast<std::size_t>(t) * num_nodes + p) * num_comms;
  }
  std::span<const double> mu_span(int t, int p) const {
    return {mu_row(t, p), static_cast<std::size_t>(num_comms)};
  }
  std::span<const double> mu_step(int t) const {
    return {mu.data() + static_cast<std::size_t>(t) * num_nodes * num_comms,
            static_cast<std::size_t>(num_nodes) * num_comms};
  }

  double& phi_at(int t, int k, int l) {
    return phi[(static_cast<std::size_t>(t) * num_comms + k) * num_comms + l];
  }
  double phi_at(int t, int k, int l) const {
    return phi[(static_cast<std::size_t>(t) * num_comms + k) * num_comms + l];
  }
  void set_phi(int t, int k, int l, double value) {
    phi_at(t, k, l) = value;
    phi_at(t, l, k) = value;
  }
};

// Fixed model parameters and priors. eta and gamma are standard deviations;
// a0_var and sigma2 are variances.
struct ModelParams {
  int num_steps = 0;
  int num_nodes = 0;
  int num_comms = 0;
  std::vector<double> beta;    // [T * N], row 0 unused
  std::vector<double> eta;     // [K], transition std-dev per dimension
  double gamma = 0.1;          // affinity transition std-dev
  double rho = 0.0;            // link sparsity in [0, 1)
  double laplace_scale = 10.0; // Laplace b for the beta prior (location 0)
  std::vector<double> alpha0;  // [K], t=0 membership prior mean
  std::vector<double> a0_var;  // [K], t=0 membership prior variance
  double iota = 0.0;           // t=0 affinity prior mean
  double sigma2 = 1.0;         // t=0 affinity prior variance

  ModelParams() = default;
  ModelParams(int t, int n, int k)
      : num_steps(t),
        num_nodes(n),
        num_comms(k),
        beta(static_cast<std::size_t>(t) * n, 0.0),
        eta(k, 0.1),
        alpha0(k, 0.0),
        a0_var(k, 1.0) {}

  double beta_at(int t, int p) const {
    return beta[static_cast<std::size_t>(t) * num_nodes + p];
  }
  double& beta_at(int t, int p) {
    return beta[static_cast<std::size_t>(t) * num_nodes + p];
  }

  void validate() const;
};

// The injected structure behind a synthetic scenario.
struct GroundTruth {
  int num_steps = 0;
  int num_nodes = 0;
  int num_comms = 0;
  std::vector<double> true_pi;  // [T * N * K], rows on the simplex
  std::vector<double> true_b;   // [T * K * K]
  std::set<int> global_change_times;
  std::map<int, std::set<int>> locally_changed_nodes;

  double pi_at(int t, int p, int k) const {
    return true_pi[(static_cast<std::size_t>(t) * num_nodes + p) * num_comms +
                   k];
  }
  double b_at(int t, int k, int l) const {
    return true_b[(static_cast<std::size_t>(t) * num_comms + k) * num_comms +
                  l];
  }
};

}  // namespace scmmsb
