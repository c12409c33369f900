#include "scmmsb/gen_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "scmmsb/errors.hpp"

namespace scmmsb {

namespace {

double log_normal_pdf(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

// log softmax normalizer: max + log sum exp(mu - max).
double log_partition(std::span<const double> mu) {
  double mx = mu[0];
  for (double v : mu) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : mu) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace

void membership_simplex(std::span<const double> mu, std::span<double> out) {
  double mx = mu[0];
  for (double v : mu) {
    if (!std::isfinite(v)) throw NumericalError("membership_simplex: non-finite input");
    mx = std::max(mx, v);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    out[k] = std::exp(mu[k] - mx);
    sum += out[k];
  }
  for (std::size_t k = 0; k < mu.size(); ++k) out[k] /= sum;
}

std::vector<double> membership_simplex(std::span<const double> mu) {
  std::vector<double> out(mu.size());
  membership_simplex(mu, out);
  return out;
}

std::vector<double> neighbor_influence(const DynamicNetwork& net,
                                       std::span<const double> mu_prev,
                                       int num_comms, int p, int t) {
  auto nbrs = net.neighbors(p, t);
  std::vector<double> c(num_comms, 0.0);
  if (nbrs.empty()) {
    for (int k = 0; k < num_comms; ++k)
      c[k] = mu_prev[static_cast<std::size_t>(p) * num_comms + k];
    return c;
  }
  for (int q : nbrs)
    for (int k = 0; k < num_comms; ++k)
      c[k] += mu_prev[static_cast<std::size_t>(q) * num_comms + k];
  for (int k = 0; k < num_comms; ++k) c[k] /= static_cast<double>(nbrs.size());
  return c;
}

std::vector<double> transition_mean(std::span<const double> mu_prev_row,
                                    std::span<const double> c_row,
                                    double beta) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw NumericalError("transition_mean: beta outside [0,1]");
  std::vector<double> f(mu_prev_row.size());
  for (std::size_t k = 0; k < f.size(); ++k)
    f[k] = (1.0 - beta) * mu_prev_row[k] + beta * c_row[k];
  return f;
}

double link_probability(std::span<const double> pi_p,
                        std::span<const double> pi_q,
                        std::span<const double> b, int num_comms, double rho) {
  double pr = 0.0;
  for (int k = 0; k < num_comms; ++k) {
    double row = 0.0;
    for (int l = 0; l < num_comms; ++l)
      row += pi_q[l] * b[static_cast<std::size_t>(k) * num_comms + l];
    pr += pi_p[k] * row;
  }
  return (1.0 - rho) * pr;
}

namespace {

// Draw indicators and links for one step; appends (t,p,q) edges. Keyed so
// the draw for a given (seed, t, dyad) does not depend on anything else.
void sample_step_links(const LatentState& state, const ModelParams& params,
                       int t, uint64_t seed, IndicatorSet& z,
                       std::vector<std::tuple<int, int, int>>& edges) {
  const int n = state.num_nodes;
  const int kk = state.num_comms;
  std::vector<double> pi(static_cast<std::size_t>(n) * kk);
  for (int p = 0; p < n; ++p)
    membership_simplex(state.mu_span(t, p),
                       std::span<double>(pi.data() + static_cast<std::size_t>(p) * kk, kk));
  const uint64_t step_key = derive_key(derive_key(seed, rng_phase::kGenLinks), t);
  for (int p = 0; p < n; ++p) {
    for (int q = p + 1; q < n; ++q) {
      std::size_t off = dyad_offset(n, p, q);
      Rng rng(derive_key(step_key, off));
      int zs = rng.categorical({pi.data() + static_cast<std::size_t>(p) * kk,
                                static_cast<std::size_t>(kk)});
      int zt = rng.categorical({pi.data() + static_cast<std::size_t>(q) * kk,
                                static_cast<std::size_t>(kk)});
      std::size_t zi = z.index(t, p, q);
      z.source[zi] = zs;
      z.target[zi] = zt;
      double pr = (1.0 - params.rho) * sigmoid(state.phi_at(t, zs, zt));
      if (rng.uniform() < pr) edges.emplace_back(t, p, q);
    }
  }
}

}  // namespace

std::pair<DynamicNetwork, IndicatorSet> sample_network(
    const LatentState& state, const ModelParams& params, uint64_t seed) {
  IndicatorSet z(state.num_nodes, state.num_steps);
  std::vector<std::tuple<int, int, int>> edges;
  for (int t = 0; t < state.num_steps; ++t)
    sample_step_links(state, params, t, seed, z, edges);
  return {DynamicNetwork(state.num_nodes, state.num_steps, edges), std::move(z)};
}

LatentState sample_trajectory(const ModelParams& params, int num_nodes,
                              int num_steps, uint64_t seed) {
  const int kk = params.num_comms;
  LatentState state(num_steps, num_nodes, kk);
  state.z = IndicatorSet(num_nodes, num_steps);

  for (int p = 0; p < num_nodes; ++p) {
    Rng rng(derive_key(derive_key(derive_key(seed, rng_phase::kGenMu), 0), p));
    double* row = state.mu_row(0, p);
    for (int k = 0; k < kk; ++k)
      row[k] = params.alpha0[k] + std::sqrt(params.a0_var[k]) * rng.normal();
  }
  {
    Rng rng(derive_key(derive_key(seed, rng_phase::kGenPhi), 0));
    for (int k = 0; k < kk; ++k)
      for (int l = k; l < kk; ++l)
        state.set_phi(0, k, l, params.iota + std::sqrt(params.sigma2) * rng.normal());
  }

  // Adjacency of the most recently sampled step, for the influence term.
  std::vector<std::vector<int>> adj(num_nodes);
  std::vector<std::tuple<int, int, int>> edges;
  auto sample_step = [&](int t) {
    std::size_t first = edges.size();
    sample_step_links(state, params, t, seed, state.z, edges);
    for (auto& a : adj) a.clear();
    for (std::size_t e = first; e < edges.size(); ++e) {
      auto [et, p, q] = edges[e];
      adj[p].push_back(q);
      adj[q].push_back(p);
    }
  };
  sample_step(0);

  for (int t = 1; t < num_steps; ++t) {
    {
      Rng rng(derive_key(derive_key(seed, rng_phase::kGenPhi), t));
      for (int k = 0; k < kk; ++k)
        for (int l = k; l < kk; ++l)
          state.set_phi(t, k, l, state.phi_at(t - 1, k, l) + params.gamma * rng.normal());
    }
    for (int p = 0; p < num_nodes; ++p) {
      const double* prev = state.mu_row(t - 1, p);
      std::vector<double> c(kk, 0.0);
      if (adj[p].empty()) {
        std::copy(prev, prev + kk, c.begin());
      } else {
        for (int q : adj[p]) {
          const double* qr = state.mu_row(t - 1, q);
          for (int k = 0; k < kk; ++k) c[k] += qr[k];
        }
        for (int k = 0; k < kk; ++k) c[k] /= static_cast<double>(adj[p].size());
      }
      double beta = params.beta_at(t, p);
      Rng rng(derive_key(derive_key(derive_key(seed, rng_phase::kGenMu), t), p));
      double* row = state.mu_row(t, p);
      for (int k = 0; k < kk; ++k) {
        double f = (1.0 - beta) * prev[k] + beta * c[k];
        row[k] = f + params.eta[k] * rng.normal();
      }
    }
    sample_step(t);
  }
  return state;
}

namespace {

constexpr int kSynthComms = 3;

int block_of(int p, int num_nodes) {
  int size = num_nodes / kSynthComms;
  return std::min(p / size, kSynthComms - 1);
}

// Major cells of the affinity pattern for a given variant and step.
std::vector<std::pair<int, int>> major_cells(int variant, int t) {
  bool diagonal_only = (variant == 2);
  if (!diagonal_only) {
    if (t <= 3) return {{0, 0}, {0, 1}, {1, 1}};
    if (t <= 6) return {{1, 1}, {1, 2}, {2, 2}};
  }
  return {{0, 0}, {1, 1}, {2, 2}};
}

}  // namespace

SyntheticData generate_synthetic(int variant, uint64_t seed,
                                 const GeneratorOptions& opts) {
  if (variant < 1 || variant > 3)
    throw ConfigError("generate_synthetic: variant must be 1, 2, or 3");
  if (!(opts.major > 0.0 && opts.major < 1.0) ||
      !(opts.minor > 0.0 && opts.minor < 1.0))
    throw ConfigError("generate_synthetic: major/minor must lie in (0,1)");
  if (!(opts.rho >= 0.0 && opts.rho < 1.0))
    throw ConfigError("generate_synthetic: rho must lie in [0,1)");
  const int n = opts.num_nodes;
  if (n < kSynthComms)
    throw ConfigError("generate_synthetic: need at least 3 nodes");
  const bool local_flip = (variant == 2 || variant == 3);
  if (local_flip && n < 18)
    throw ConfigError("generate_synthetic: variants 2 and 3 need >= 18 nodes");
  const int steps = (variant == 3) ? 12 : 9;

  LatentState state(steps, n, kSynthComms);
  GroundTruth truth;
  truth.num_steps = steps;
  truth.num_nodes = n;
  truth.num_comms = kSynthComms;
  truth.true_pi.assign(static_cast<std::size_t>(steps) * n * kSynthComms, 0.0);
  truth.true_b.assign(static_cast<std::size_t>(steps) * kSynthComms * kSynthComms,
                      opts.minor);

  for (int t = 0; t < steps; ++t) {
    for (int p = 0; p < n; ++p) {
      int comm = block_of(p, n);
      if (local_flip && t >= 5 && p >= 13 && p <= 17) comm = 2;
      state.mu_row(t, p)[comm] = opts.mu_scale;
      truth.true_pi[(static_cast<std::size_t>(t) * n + p) * kSynthComms + comm] = 1.0;
    }
    for (int k = 0; k < kSynthComms; ++k)
      for (int l = k; l < kSynthComms; ++l)
        state.set_phi(t, k, l, logit(opts.minor));
    for (auto [k, l] : major_cells(variant, t)) {
      state.set_phi(t, k, l, logit(opts.major));
      std::size_t base = static_cast<std::size_t>(t) * kSynthComms * kSynthComms;
      truth.true_b[base + static_cast<std::size_t>(k) * kSynthComms + l] = opts.major;
      truth.true_b[base + static_cast<std::size_t>(l) * kSynthComms + k] = opts.major;
    }
  }
  if (variant == 1 || variant == 3) truth.global_change_times = {4, 7};
  if (local_flip) truth.locally_changed_nodes[5] = {13, 14, 15, 16, 17};

  ModelParams params(steps, n, kSynthComms);
  params.rho = opts.rho;

  auto [net, z] = sample_network(state, params, seed);
  state.z = std::move(z);
  return SyntheticData{std::move(net), std::move(state), std::move(params),
                       std::move(truth)};
}

double log_joint(const DynamicNetwork& net, const LatentState& state,
                 const ModelParams& params) {
  const int steps = state.num_steps;
  const int n = state.num_nodes;
  const int kk = state.num_comms;
  if (state.z.empty())
    throw ConfigError("log_joint: indicators missing from state");
  if (params.gamma <= 0.0 || params.sigma2 <= 0.0)
    throw NumericalError("log_joint: non-positive variance parameter");
  for (int k = 0; k < kk; ++k)
    if (params.eta[k] <= 0.0 || params.a0_var[k] <= 0.0)
      throw NumericalError("log_joint: non-positive variance parameter");

  double lj = 0.0;

  for (int p = 0; p < n; ++p) {
    const double* row = state.mu_row(0, p);
    for (int k = 0; k < kk; ++k)
      lj += log_normal_pdf(row[k], params.alpha0[k], params.a0_var[k]);
  }
  for (int t = 1; t < steps; ++t) {
    for (int p = 0; p < n; ++p) {
      auto c = neighbor_influence(net, state.mu_step(t - 1), kk, p, t);
      auto f = transition_mean(state.mu_span(t - 1, p), c, params.beta_at(t, p));
      const double* row = state.mu_row(t, p);
      for (int k = 0; k < kk; ++k)
        lj += log_normal_pdf(row[k], f[k], params.eta[k] * params.eta[k]);
    }
  }

  for (int k = 0; k < kk; ++k)
    for (int l = k; l < kk; ++l) {
      lj += log_normal_pdf(state.phi_at(0, k, l), params.iota, params.sigma2);
      for (int t = 1; t < steps; ++t)
        lj += log_normal_pdf(state.phi_at(t, k, l), state.phi_at(t - 1, k, l),
                             params.gamma * params.gamma);
    }

  // Truncated Laplace prior on beta: location 0, scale b, support [0,1].
  const double b = params.laplace_scale;
  const double log_norm = std::log(b * (1.0 - std::exp(-1.0 / b)));
  for (int t = 1; t < steps; ++t)
    for (int p = 0; p < n; ++p) {
      double beta = params.beta_at(t, p);
      if (!(beta >= 0.0 && beta <= 1.0))
        throw NumericalError("log_joint: beta outside [0,1]");
      lj += -beta / b - log_norm;
    }

  std::vector<double> log_pi(static_cast<std::size_t>(n) * kk);
  for (int t = 0; t < steps; ++t) {
    for (int p = 0; p < n; ++p) {
      auto row = state.mu_span(t, p);
      double lz = log_partition(row);
      for (int k = 0; k < kk; ++k)
        log_pi[static_cast<std::size_t>(p) * kk + k] = row[k] - lz;
    }
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        std::size_t zi = state.z.index(t, p, q);
        int zs = state.z.source[zi];
        int zt = state.z.target[zi];
        lj += log_pi[static_cast<std::size_t>(p) * kk + zs] +
              log_pi[static_cast<std::size_t>(q) * kk + zt];
        double pr = (1.0 - params.rho) * sigmoid(state.phi_at(t, zs, zt));
        lj += net.has_edge(t, p, q) ? log_floored(pr) : log_floored(1.0 - pr);
      }
  }
  return lj;
}

void ModelParams::validate() const {
  for (double e : eta)
    if (!(e > 0.0)) throw ConfigError("ModelParams: eta must be positive");
  for (double v : a0_var)
    if (!(v > 0.0)) throw ConfigError("ModelParams: a0_var must be positive");
  if (!(gamma > 0.0)) throw ConfigError("ModelParams: gamma must be positive");
  if (!(sigma2 > 0.0)) throw ConfigError("ModelParams: sigma2 must be positive");
  if (!(rho >= 0.0 && rho < 1.0))
    throw ConfigError("ModelParams: rho must lie in [0,1)");
  if (!(laplace_scale > 0.0))
    throw ConfigError("ModelParams: laplace_scale must be positive");
  for (double bb : beta)
    if (!(bb >= 0.0 && bb <= 1.0))
      throw ConfigError("ModelParams: beta entries must lie in [0,1]");
}

}  // namespace scmmsb
