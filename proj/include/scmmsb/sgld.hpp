#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "scmmsb/dynamic_network.hpp"
#include "scmmsb/model.hpp"
#include "scmmsb/rng.hpp"

namespace scmmsb {

// Which factor multiplies pi in the indicator weights for linked dyads:
// the model's Bernoulli factor sigma(phi), or the exp(phi) form.
enum class IndicatorLikelihood { kSigmoid, kExp };

struct SgldConfig {
  int num_comms = 0;  // K; required
  double step_a = 0.01;
  double step_b = 1000.0;
  double step_c = 0.55;  // eps_i = step_a * (step_b + i)^(-step_c)
  double minibatch_fraction = 0.2;
  int num_iterations = 3000;
  int burn_in = 1500;
  std::uint64_t seed = 0;
  bool sparse_mode = true;  // false: influence weights updated without the
                            // Laplace shrinkage (the non-sparse variant)
  int workers = 1;
  int param_update_every = 10;
  bool neighbor_backcoupling = true;
  IndicatorLikelihood indicator_likelihood = IndicatorLikelihood::kSigmoid;
  double noise_scale = 1.0;  // 0 disables Langevin noise (optimization mode)

  // Initialization and fixed priors; all overridable from the CLI.
  double init_sd = 0.1;
  double init_eta = 0.1;
  double init_gamma = 0.1;
  double rho = 0.01;
  double laplace_scale = 10.0;
  double alpha0 = 0.0;
  double a0_var = 1.0;
  double iota = 0.0;
  double sigma2 = 1.0;

  void validate() const;
};

double step_size(int iteration, const SgldConfig& cfg);

// Sufficient statistics of one time step's sampled indicators. Non-link
// counts are pre-multiplied by the minibatch scale; link counts are exact.
struct SufficientStats {
  int num_nodes = 0;
  int num_comms = 0;
  std::vector<double> c_pk;  // [N][K]: indicators drawn from pi_p equal to k
  std::vector<double> c1;    // [K][K]: linked dyads per unordered pair,
                             // stored at (min, max)
  std::vector<double> c01;   // [K][K]: all sampled dyads per unordered pair
  double scale = 1.0;

  SufficientStats() = default;
  SufficientStats(int n, int k)
      : num_nodes(n),
        num_comms(k),
        c_pk(static_cast<std::size_t>(n) * k, 0.0),
        c1(static_cast<std::size_t>(k) * k, 0.0),
        c01(static_cast<std::size_t>(k) * k, 0.0) {}

  double c_at(int p, int k) const {
    return c_pk[static_cast<std::size_t>(p) * num_comms + k];
  }
  // Scaled total number of indicators drawn from pi_p.
  double total(int p) const {
    double m = 0.0;
    for (int k = 0; k < num_comms; ++k) m += c_at(p, k);
    return m;
  }
  double c1_at(int k, int l) const {
    auto [a, b] = std::minmax(k, l);
    return c1[static_cast<std::size_t>(a) * num_comms + b];
  }
  double c01_at(int k, int l) const {
    auto [a, b] = std::minmax(k, l);
    return c01[static_cast<std::size_t>(a) * num_comms + b];
  }
};

// The dyads visited in one step's sweep: all linked dyads first, then the
// sampled non-links. scale inflates non-link statistics back to full-batch
// expectation.
struct Minibatch {
  std::vector<std::pair<int, int>> dyads;
  std::size_t links_end = 0;
  double scale = 1.0;
};

Minibatch select_minibatch(const DynamicNetwork& net, int t, double fraction,
                           Rng& rng);

// One Gibbs refresh of a dyad's indicator pair: the source draw conditions
// on the current target indicator in state.z, the target draw on the fresh
// source. Returns the new pair without mutating state.
std::pair<int, int> sample_indicators(
    const DyadIndex& dyad, int y, const LatentState& state, double rho,
    Rng& rng, IndicatorLikelihood lik = IndicatorLikelihood::kSigmoid);

SufficientStats accumulate_stats(const IndicatorSet& z,
                                 const DynamicNetwork& net,
                                 const Minibatch& minibatch, int t,
                                 int num_comms);

// Transition residuals mu[t][p] - f(mu[t-1][p], c, beta[t][p]) for t >= 1,
// as a [T][N][K] tensor with the t=0 rows zero.
std::vector<double> compute_residuals(const DynamicNetwork& net,
                                      const LatentState& state,
                                      const ModelParams& params,
                                      int workers = 1);

// Gradient of the Markov-blanket conditional log-density of mu[t][p]:
// backward Gaussian term, forward own-chain term, neighbor back-coupling
// (mu[t][p] enters the influence mean of each step-(t+1) neighbor), and the
// indicator multinomial likelihood.
std::vector<double> mu_gradient(const DynamicNetwork& net,
                                const LatentState& state,
                                const ModelParams& params,
                                const SufficientStats& stats,
                                std::span<const double> residuals, int p,
                                int t, bool neighbor_backcoupling = true);

void sgld_update_mu(const DynamicNetwork& net, const LatentState& state,
                    const ModelParams& params, const SufficientStats& stats,
                    std::span<const double> residuals, int p, int t,
                    double eps, Rng& rng, std::span<double> out_row,
                    bool neighbor_backcoupling = true,
                    double noise_scale = 1.0);

// Gradient of the conditional log-density with respect to the free
// parameter phi[t][k][l], k <= l (mirrored entry included).
double phi_gradient(const LatentState& state, const ModelParams& params,
                    const SufficientStats& stats, int k, int l, int t);

// Returns the new value for phi[t][k][l]; the caller writes it to both
// (k,l) and (l,k).
double sgld_update_phi(const LatentState& state, const ModelParams& params,
                       const SufficientStats& stats, int k, int l, int t,
                       double eps, Rng& rng, double noise_scale = 1.0);

// The closed-form influence-weight update from the completed-square stats
// A and B: (A - 1/b)/B where A > 1/b, else 0, clamped to [0,1]; the
// non-sparse variant takes the 1/b -> 0 limit. B <= 0 returns 0.
double beta_from_ab(double a, double b_stat, double laplace_b,
                    bool sparse_mode);

double update_beta(const DynamicNetwork& net, const LatentState& state,
                   const ModelParams& params, int p, int t, bool sparse_mode);

struct NoiseEstimate {
  std::vector<double> eta;
  double gamma = 0.0;
};

// Maximum-likelihood transition variances from the current residuals,
// floored at 1e-6 (variance scale). Requires T >= 2.
NoiseEstimate update_noise_params(const DynamicNetwork& net,
                                  const LatentState& state,
                                  const ModelParams& params);

struct PosteriorSummary {
  int num_steps = 0;
  int num_nodes = 0;
  int num_comms = 0;
  std::vector<double> mean_pi;    // [T][N][K], rows on the simplex
  std::vector<double> mean_b;     // [T][K][K], entries in [0,1]
  std::vector<double> mean_beta;  // [T][N]
  std::vector<double> loglik_trace;
  ModelParams final_params;
};

// Everything needed to continue a run exactly where it stopped. With keyed
// random streams the seed plus the iteration counter fully describe the
// random state.
struct InferenceCheckpoint {
  std::uint64_t seed = 0;
  int next_iteration = 0;
  LatentState state;
  ModelParams params;
  long accum_count = 0;
  std::vector<double> accum_pi;    // [T][N][K] running sums
  std::vector<double> accum_b;     // [T][K][K]
  std::vector<double> accum_beta;  // [T][N]
  std::vector<double> loglik_trace;
};

struct InferenceResult {
  PosteriorSummary summary;
  InferenceCheckpoint checkpoint;
};

// The outer loop. Per iteration and per time step: select minibatch ->
// Gibbs-sweep indicators -> accumulate stats -> update all mu rows ->
// update all phi entries -> periodically refresh beta, eta, gamma.
// Bit-identical results for a fixed seed at any worker count; `resume`
// continues a checkpointed run exactly.
InferenceResult run_inference(const DynamicNetwork& net,
                              const SgldConfig& cfg,
                              const LatentState* init = nullptr,
                              const InferenceCheckpoint* resume = nullptr);

}  // namespace scmmsb
