#include "scmmsb/sgld.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "scmmsb/errors.hpp"
#include "scmmsb/gen_model.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scmmsb {

namespace {

std::uint64_t chain(std::uint64_t key) { return key; }

template <typename... Tags>
std::uint64_t chain(std::uint64_t key, std::uint64_t tag, Tags... rest) {
  return chain(derive_key(key, tag), rest...);
}

// Runs body(0..n-1); the workers > 1 path fans out over OpenMP threads.
// Every body must be deterministic given its index alone, so the two paths
// produce identical results. Exceptions are collected and rethrown because
// they must not unwind out of a parallel region.
template <typename F>
void parallel_for(int workers, long n, F&& body) {
#ifdef _OPENMP
  if (workers > 1 && n > 1) {
    std::exception_ptr err = nullptr;
#pragma omp parallel for num_threads(workers) schedule(static)
    for (long i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#endif
  (void)workers;
  for (long i = 0; i < n; ++i) body(i);
}

// Indicator weights and the two conditional draws for one dyad. pi rows and
// the step's phi matrix come precomputed so the hot loop stays cheap.
std::pair<int, int> gibbs_pair(std::span<const double> pi_p,
                               std::span<const double> pi_q,
                               const double* phi_t, int kk, int y,
                               int z_target_cur, double rho, Rng& rng,
                               IndicatorLikelihood lik) {
  thread_local std::vector<double> w;
  w.resize(kk);
  auto weigh = [&](std::span<const double> pi_side, int other) {
    if (y == 1) {
      if (lik == IndicatorLikelihood::kExp) {
        // exp(phi) weights, max-subtracted: scale-invariant for the draw.
        double mx = phi_t[other];
        for (int k = 0; k < kk; ++k)
          mx = std::max(mx, phi_t[static_cast<std::size_t>(k) * kk + other]);
        for (int k = 0; k < kk; ++k)
          w[k] = pi_side[k] *
                 std::exp(phi_t[static_cast<std::size_t>(k) * kk + other] - mx);
      } else {
        for (int k = 0; k < kk; ++k)
          w[k] = pi_side[k] *
                 sigmoid(phi_t[static_cast<std::size_t>(k) * kk + other]);
      }
    } else {
      for (int k = 0; k < kk; ++k)
        w[k] = pi_side[k] *
               (1.0 - (1.0 - rho) *
                          sigmoid(phi_t[static_cast<std::size_t>(k) * kk + other]));
    }
  };
  weigh(pi_p, z_target_cur);
  int zs = rng.categorical(w);
  weigh(pi_q, zs);
  int zt = rng.categorical(w);
  return {zs, zt};
}

// Integer indicator counts of a dyad range; scaling happens at finalize so
// that chunked accumulation merges exactly regardless of worker count.
struct RawCounts {
  std::vector<long> cpk_link, cpk_non;  // [N][K]
  std::vector<long> c1, c01_non;        // [K][K], upper triangle

  RawCounts(int n, int k)
      : cpk_link(static_cast<std::size_t>(n) * k, 0),
        cpk_non(static_cast<std::size_t>(n) * k, 0),
        c1(static_cast<std::size_t>(k) * k, 0),
        c01_non(static_cast<std::size_t>(k) * k, 0) {}

  void merge(const RawCounts& o) {
    for (std::size_t i = 0; i < cpk_link.size(); ++i) {
      cpk_link[i] += o.cpk_link[i];
      cpk_non[i] += o.cpk_non[i];
    }
    for (std::size_t i = 0; i < c1.size(); ++i) {
      c1[i] += o.c1[i];
      c01_non[i] += o.c01_non[i];
    }
  }
};

void count_range(const IndicatorSet& z, const Minibatch& mb, int t, int kk,
                 std::size_t begin, std::size_t end, RawCounts& rc) {
  for (std::size_t j = begin; j < end; ++j) {
    auto [p, q] = mb.dyads[j];
    std::size_t zi = z.index(t, p, q);
    int zs = z.source[zi];
    int zt = z.target[zi];
    bool linked = j < mb.links_end;
    auto& cpk = linked ? rc.cpk_link : rc.cpk_non;
    ++cpk[static_cast<std::size_t>(p) * kk + zs];
    ++cpk[static_cast<std::size_t>(q) * kk + zt];
    auto [a, b] = std::minmax(zs, zt);
    if (linked)
      ++rc.c1[static_cast<std::size_t>(a) * kk + b];
    else
      ++rc.c01_non[static_cast<std::size_t>(a) * kk + b];
  }
}

SufficientStats finalize_counts(const RawCounts& rc, int n, int kk,
                                double scale) {
  SufficientStats s(n, kk);
  s.scale = scale;
  for (std::size_t i = 0; i < s.c_pk.size(); ++i)
    s.c_pk[i] = static_cast<double>(rc.cpk_link[i]) +
                scale * static_cast<double>(rc.cpk_non[i]);
  for (std::size_t i = 0; i < s.c1.size(); ++i) {
    s.c1[i] = static_cast<double>(rc.c1[i]);
    s.c01[i] = s.c1[i] + scale * static_cast<double>(rc.c01_non[i]);
  }
  return s;
}

void residual_row(const DynamicNetwork& net, const LatentState& state,
                  const ModelParams& params, int p, int t, double* out) {
  const int kk = state.num_comms;
  auto c = neighbor_influence(net, state.mu_step(t - 1), kk, p, t);
  auto f = transition_mean(state.mu_span(t - 1, p), c, params.beta_at(t, p));
  const double* row = state.mu_row(t, p);
  for (int k = 0; k < kk; ++k) out[k] = row[k] - f[k];
}

}  // namespace

void SgldConfig::validate() const {
  if (num_comms < 1) throw ConfigError("config: num_comms must be >= 1");
  if (!(step_a > 0.0)) throw ConfigError("config: step_a must be positive");
  if (!(step_b >= 0.0)) throw ConfigError("config: step_b must be >= 0");
  if (!(step_c >= 0.0)) throw ConfigError("config: step_c must be >= 0");
  if (!(minibatch_fraction > 0.0 && minibatch_fraction <= 1.0))
    throw ConfigError("config: minibatch_fraction must lie in (0,1]");
  if (num_iterations < 1)
    throw ConfigError("config: num_iterations must be >= 1");
  if (burn_in < 0 || burn_in >= num_iterations)
    throw ConfigError("config: burn_in must lie in [0, num_iterations)");
  if (workers < 1) throw ConfigError("config: workers must be >= 1");
  if (param_update_every < 1)
    throw ConfigError("config: param_update_every must be >= 1");
  if (!(noise_scale >= 0.0))
    throw ConfigError("config: noise_scale must be >= 0");
  if (!(init_sd >= 0.0)) throw ConfigError("config: init_sd must be >= 0");
  if (!(init_eta > 0.0)) throw ConfigError("config: init_eta must be positive");
  if (!(init_gamma > 0.0))
    throw ConfigError("config: init_gamma must be positive");
  if (!(rho >= 0.0 && rho < 1.0))
    throw ConfigError("config: rho must lie in [0,1)");
  if (!(laplace_scale > 0.0))
    throw ConfigError("config: laplace_scale must be positive");
  if (!(a0_var > 0.0)) throw ConfigError("config: a0_var must be positive");
  if (!(sigma2 > 0.0)) throw ConfigError("config: sigma2 must be positive");
}

double step_size(int iteration, const SgldConfig& cfg) {
  return cfg.step_a * std::pow(cfg.step_b + iteration, -cfg.step_c);
}

Minibatch select_minibatch(const DynamicNetwork& net, int t, double fraction,
                           Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("minibatch fraction must lie in (0,1]");
  const int n = net.num_nodes();
  Minibatch mb;
  auto links = net.edges(t);
  mb.dyads.assign(links.begin(), links.end());
  mb.links_end = mb.dyads.size();

  if (fraction == 1.0) {
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q)
        if (!net.has_edge(t, p, q)) mb.dyads.emplace_back(p, q);
    mb.scale = 1.0;
    return mb;
  }

  std::vector<std::pair<int, int>> nonlinks;
  nonlinks.reserve(dyads_per_step(n) - links.size());
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q)
      if (!net.has_edge(t, p, q)) nonlinks.emplace_back(p, q);
  std::size_t m = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(nonlinks.size())));
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t pick = j + rng.below(nonlinks.size() - j);
    std::swap(nonlinks[j], nonlinks[pick]);
    mb.dyads.push_back(nonlinks[j]);
  }
  mb.scale = m > 0 ? static_cast<double>(nonlinks.size()) /
                         static_cast<double>(m)
                   : 1.0;
  return mb;
}

std::pair<int, int> sample_indicators(const DyadIndex& dyad, int y,
                                      const LatentState& state, double rho,
                                      Rng& rng, IndicatorLikelihood lik) {
  const int kk = state.num_comms;
  auto pi_p = membership_simplex(state.mu_span(dyad.t, dyad.p));
  auto pi_q = membership_simplex(state.mu_span(dyad.t, dyad.q));
  const double* phi_t =
      state.phi.data() + static_cast<std::size_t>(dyad.t) * kk * kk;
  int cur = state.z.empty()
                ? 0
                : state.z.target[state.z.index(dyad.t, dyad.p, dyad.q)];
  return gibbs_pair(pi_p, pi_q, phi_t, kk, y, cur, rho, rng, lik);
}

SufficientStats accumulate_stats(const IndicatorSet& z,
                                 const DynamicNetwork& net,
                                 const Minibatch& minibatch, int t,
                                 int num_comms) {
  const int n = net.num_nodes();
  RawCounts rc(n, num_comms);
  count_range(z, minibatch, t, num_comms, 0, minibatch.dyads.size(), rc);
  return finalize_counts(rc, n, num_comms, minibatch.scale);
}

std::vector<double> compute_residuals(const DynamicNetwork& net,
                                      const LatentState& state,
                                      const ModelParams& params, int workers) {
  const int steps = state.num_steps;
  const int n = state.num_nodes;
  const int kk = state.num_comms;
  std::vector<double> res(static_cast<std::size_t>(steps) * n * kk, 0.0);
  parallel_for(workers, static_cast<long>(steps - 1) * n, [&](long idx) {
    int t = 1 + static_cast<int>(idx / n);
    int p = static_cast<int>(idx % n);
    residual_row(net, state, params, p, t,
                 res.data() + (static_cast<std::size_t>(t) * n + p) * kk);
  });
  return res;
}

std::vector<double> mu_gradient(const DynamicNetwork& net,
                                const LatentState& state,
                                const ModelParams& params,
                                const SufficientStats& stats,
                                std::span<const double> residuals, int p,
                                int t, bool neighbor_backcoupling) {
  const int steps = state.num_steps;
  const int n = state.num_nodes;
  const int kk = state.num_comms;
  auto res_row = [&](int tt, int pp) {
    return residuals.data() + (static_cast<std::size_t>(tt) * n + pp) * kk;
  };
  std::vector<double> g(kk, 0.0);

  if (t == 0) {
    const double* row = state.mu_row(0, p);
    for (int k = 0; k < kk; ++k)
      g[k] = -(row[k] - params.alpha0[k]) / params.a0_var[k];
  } else {
    const double* r = res_row(t, p);
    for (int k = 0; k < kk; ++k)
      g[k] = -r[k] / (params.eta[k] * params.eta[k]);
  }

  if (t + 1 < steps) {
    double beta_next = params.beta_at(t + 1, p);
    double dfdmu = net.degree(p, t + 1) > 0 ? (1.0 - beta_next) : 1.0;
    const double* r = res_row(t + 1, p);
    for (int k = 0; k < kk; ++k)
      g[k] += r[k] / (params.eta[k] * params.eta[k]) * dfdmu;

    if (neighbor_backcoupling) {
      for (int q : net.neighbors(p, t + 1)) {
        double w = params.beta_at(t + 1, q) /
                   static_cast<double>(net.degree(q, t + 1));
        if (w == 0.0) continue;
        const double* rq = res_row(t + 1, q);
        for (int k = 0; k < kk; ++k)
          g[k] += rq[k] / (params.eta[k] * params.eta[k]) * w;
      }
    }
  }

  auto pi = membership_simplex(state.mu_span(t, p));
  double m = 0.0;
  for (int k = 0; k < kk; ++k) m += stats.c_at(p, k);
  for (int k = 0; k < kk; ++k) g[k] += stats.c_at(p, k) - m * pi[k];
  return g;
}

void sgld_update_mu(const DynamicNetwork& net, const LatentState& state,
                    const ModelParams& params, const SufficientStats& stats,
                    std::span<const double> residuals, int p, int t,
                    double eps, Rng& rng, std::span<double> out_row,
                    bool neighbor_backcoupling, double noise_scale) {
  auto g = mu_gradient(net, state, params, stats, residuals, p, t,
                       neighbor_backcoupling);
  const double* row = state.mu_row(t, p);
  double noise_sd = noise_scale * std::sqrt(eps);
  for (int k = 0; k < state.num_comms; ++k)
    out_row[k] = row[k] + 0.5 * eps * g[k] + noise_sd * rng.normal();
}

double phi_gradient(const LatentState& state, const ModelParams& params,
                    const SufficientStats& stats, int k, int l, int t) {
  const int steps = state.num_steps;
  double cur = state.phi_at(t, k, l);
  double g = 0.0;
  if (t == 0) {
    g += -(cur - params.iota) / params.sigma2;
  } else {
    g += -(cur - state.phi_at(t - 1, k, l)) / (params.gamma * params.gamma);
  }
  if (t + 1 < steps)
    g += (state.phi_at(t + 1, k, l) - cur) / (params.gamma * params.gamma);

  double n1 = stats.c1_at(k, l);
  double n01 = stats.c01_at(k, l);
  if (n01 > 0.0) {
    double s = sigmoid(cur);
    g += n1 * (1.0 - s);
    double denom = 1.0 - (1.0 - params.rho) * s;
    g += -(n01 - n1) * (1.0 - params.rho) * s * (1.0 - s) /
         std::max(denom, kProbFloor);
  }
  return g;
}

double sgld_update_phi(const LatentState& state, const ModelParams& params,
                       const SufficientStats& stats, int k, int l, int t,
                       double eps, Rng& rng, double noise_scale) {
  auto [a, b] = std::minmax(k, l);
  double g = phi_gradient(state, params, stats, a, b, t);
  return state.phi_at(t, a, b) + 0.5 * eps * g +
         noise_scale * std::sqrt(eps) * rng.normal();
}

double beta_from_ab(double a, double b_stat, double laplace_b,
                    bool sparse_mode) {
  if (!(b_stat > 0.0)) return 0.0;
  if (sparse_mode) {
    if (a <= 1.0 / laplace_b) return 0.0;
    return std::clamp((a - 1.0 / laplace_b) / b_stat, 0.0, 1.0);
  }
  return std::clamp(a / b_stat, 0.0, 1.0);
}

double update_beta(const DynamicNetwork& net, const LatentState& state,
                   const ModelParams& params, int p, int t, bool sparse_mode) {
  if (t < 1) throw ConfigError("update_beta: t must be >= 1");
  const int kk = state.num_comms;
  auto c = neighbor_influence(net, state.mu_step(t - 1), kk, p, t);
  const double* prev = state.mu_row(t - 1, p);
  const double* row = state.mu_row(t, p);
  double a = 0.0, b_stat = 0.0;
  for (int k = 0; k < kk; ++k) {
    double eta2 = params.eta[k] * params.eta[k];
    double e = prev[k] - c[k];
    double d = row[k] - prev[k];
    a += -d * e / eta2;
    b_stat += e * e / eta2;
  }
  return beta_from_ab(a, b_stat, params.laplace_scale, sparse_mode);
}

NoiseEstimate update_noise_params(const DynamicNetwork& net,
                                  const LatentState& state,
                                  const ModelParams& params) {
  const int steps = state.num_steps;
  const int n = state.num_nodes;
  const int kk = state.num_comms;
  if (steps < 2)
    throw ConfigError("update_noise_params: needs at least 2 steps");
  constexpr double kVarFloor = 1e-6;

  auto res = compute_residuals(net, state, params);
  NoiseEstimate est;
  est.eta.assign(kk, 0.0);
  double count = static_cast<double>(steps - 1) * n;
  for (int t = 1; t < steps; ++t)
    for (int p = 0; p < n; ++p) {
      const double* r = res.data() + (static_cast<std::size_t>(t) * n + p) * kk;
      for (int k = 0; k < kk; ++k) est.eta[k] += r[k] * r[k];
    }
  for (int k = 0; k < kk; ++k)
    est.eta[k] = std::sqrt(std::max(est.eta[k] / count, kVarFloor));

  double g2 = 0.0;
  for (int t = 1; t < steps; ++t)
    for (int k = 0; k < kk; ++k)
      for (int l = k; l < kk; ++l) {
        double d = state.phi_at(t, k, l) - state.phi_at(t - 1, k, l);
        g2 += d * d;
      }
  double pairs = static_cast<double>(steps - 1) * kk * (kk + 1) / 2.0;
  est.gamma = std::sqrt(std::max(g2 / pairs, kVarFloor));
  return est;
}

namespace {

// Scaled Bernoulli log-likelihood of the sampled dyads given indicators,
// straight from the per-step stats. On a non-finite result, reports the
// first offending term.
double stats_loglik(const std::vector<SufficientStats>& stats,
                    const LatentState& state, double rho, int iteration) {
  double ll = 0.0;
  const int kk = state.num_comms;
  for (int t = 0; t < state.num_steps; ++t)
    for (int k = 0; k < kk; ++k)
      for (int l = k; l < kk; ++l) {
        double n01 = stats[t].c01_at(k, l);
        if (n01 == 0.0) continue;
        double n1 = stats[t].c1_at(k, l);
        double pr = (1.0 - rho) * sigmoid(state.phi_at(t, k, l));
        double term =
            n1 * log_floored(pr) + (n01 - n1) * log_floored(1.0 - pr);
        if (!std::isfinite(term))
          throw NumericalError(
              "non-finite log-likelihood at iteration " +
              std::to_string(iteration) + " (t=" + std::to_string(t) +
              ", pair=(" + std::to_string(k) + "," + std::to_string(l) +
              "), phi=" + std::to_string(state.phi_at(t, k, l)) + ")");
        ll += term;
      }
  return ll;
}

void check_finite_state(const LatentState& state, int iteration) {
  for (std::size_t i = 0; i < state.mu.size(); ++i)
    if (!std::isfinite(state.mu[i]))
      throw NumericalError("non-finite mu at iteration " +
                           std::to_string(iteration));
  for (std::size_t i = 0; i < state.phi.size(); ++i)
    if (!std::isfinite(state.phi[i]))
      throw NumericalError("non-finite phi at iteration " +
                           std::to_string(iteration));
}

}  // namespace

InferenceResult run_inference(const DynamicNetwork& net, const SgldConfig& cfg,
                              const LatentState* init,
                              const InferenceCheckpoint* resume) {
  cfg.validate();
  const int steps = net.num_steps();
  const int n = net.num_nodes();
  const int kk = cfg.num_comms;
  const std::size_t mu_size = static_cast<std::size_t>(steps) * n * kk;
  const std::size_t phi_size = static_cast<std::size_t>(steps) * kk * kk;
  const std::size_t beta_size = static_cast<std::size_t>(steps) * n;
  const int pairs = kk * (kk + 1) / 2;

  LatentState state;
  ModelParams params;
  InferenceCheckpoint ck;
  int start_iter = 0;

  if (resume) {
    if (resume->state.num_steps != steps || resume->state.num_nodes != n ||
        resume->state.num_comms != kk)
      throw ConfigError("resume checkpoint dimensions do not match the data");
    state = resume->state;
    params = resume->params;
    ck = *resume;
    start_iter = resume->next_iteration;
    if (start_iter > cfg.num_iterations)
      throw ConfigError("resume checkpoint is past num_iterations");
  } else {
    state = LatentState(steps, n, kk);
    state.z = IndicatorSet(n, steps);
    for (int t = 0; t < steps; ++t)
      for (int p = 0; p < n; ++p) {
        Rng rng(chain(cfg.seed, rng_phase::kInit, 0,
                      static_cast<std::uint64_t>(t) * n + p));
        double* row = state.mu_row(t, p);
        for (int k = 0; k < kk; ++k) row[k] = cfg.init_sd * rng.normal();
      }
    for (int t = 0; t < steps; ++t) {
      Rng rng(chain(cfg.seed, rng_phase::kInit, 1, t));
      for (int k = 0; k < kk; ++k)
        for (int l = k; l < kk; ++l)
          state.set_phi(t, k, l, cfg.init_sd * rng.normal());
    }
    if (init) {
      if (init->num_steps != steps || init->num_nodes != n ||
          init->num_comms != kk)
        throw ConfigError("init state dimensions do not match the data");
      state.mu = init->mu;
      state.phi = init->phi;
      if (!init->z.empty()) {
        if (init->z.num_nodes != n || init->z.num_steps != steps)
          throw ConfigError("init indicators do not match the data");
        state.z = init->z;
      }
    }
    params = ModelParams(steps, n, kk);
    params.eta.assign(kk, cfg.init_eta);
    params.gamma = cfg.init_gamma;
    params.rho = cfg.rho;
    params.laplace_scale = cfg.laplace_scale;
    params.alpha0.assign(kk, cfg.alpha0);
    params.a0_var.assign(kk, cfg.a0_var);
    params.iota = cfg.iota;
    params.sigma2 = cfg.sigma2;

    ck.seed = cfg.seed;
    ck.accum_pi.assign(mu_size, 0.0);
    ck.accum_b.assign(phi_size, 0.0);
    ck.accum_beta.assign(beta_size, 0.0);
  }

  std::vector<double> mu_next(mu_size), phi_next(phi_size);
  std::vector<double> pi_cache(static_cast<std::size_t>(n) * kk);
  std::vector<Minibatch> mbs(steps);
  std::vector<SufficientStats> stats(steps);
  const std::uint64_t seed = ck.seed;

  for (int i = start_iter; i < cfg.num_iterations; ++i) {
    for (int t = 0; t < steps; ++t) {
      Rng rng(chain(seed, rng_phase::kMinibatch, i, t));
      mbs[t] = select_minibatch(net, t, cfg.minibatch_fraction, rng);
    }

    for (int t = 0; t < steps; ++t) {
      const Minibatch& mb = mbs[t];
      parallel_for(cfg.workers, n, [&](long p) {
        membership_simplex(
            state.mu_span(t, static_cast<int>(p)),
            std::span<double>(pi_cache.data() + p * kk, kk));
      });
      const double* phi_t = state.phi.data() + static_cast<std::size_t>(t) * kk * kk;
      parallel_for(cfg.workers, static_cast<long>(mb.dyads.size()), [&](long j) {
        auto [p, q] = mb.dyads[j];
        std::size_t off = dyad_offset(n, p, q);
        Rng rng(chain(seed, rng_phase::kIndicators, i, t, off));
        std::size_t zi = state.z.index(t, p, q);
        auto [zs, zt] = gibbs_pair(
            {pi_cache.data() + static_cast<std::size_t>(p) * kk,
             static_cast<std::size_t>(kk)},
            {pi_cache.data() + static_cast<std::size_t>(q) * kk,
             static_cast<std::size_t>(kk)},
            phi_t, kk, j < static_cast<long>(mb.links_end) ? 1 : 0,
            state.z.target[zi], cfg.rho, rng, cfg.indicator_likelihood);
        state.z.source[zi] = zs;
        state.z.target[zi] = zt;
      });

      // Chunked integer counting: one chunk per worker, merged in chunk
      // order, so totals match the single-chunk serial path exactly.
      int chunks = cfg.workers;
      std::vector<RawCounts> parts(chunks, RawCounts(n, kk));
      std::size_t sz = mb.dyads.size();
      parallel_for(cfg.workers, chunks, [&](long c) {
        std::size_t lo = sz * c / chunks;
        std::size_t hi = sz * (c + 1) / chunks;
        count_range(state.z, mb, t, kk, lo, hi, parts[c]);
      });
      for (int c = 1; c < chunks; ++c) parts[0].merge(parts[c]);
      stats[t] = finalize_counts(parts[0], n, kk, mb.scale);
    }

    ck.loglik_trace.push_back(stats_loglik(stats, state, cfg.rho, i));

    auto residuals = compute_residuals(net, state, params, cfg.workers);
    const double eps = step_size(i, cfg);

    parallel_for(cfg.workers, static_cast<long>(steps) * n, [&](long idx) {
      int t = static_cast<int>(idx / n);
      int p = static_cast<int>(idx % n);
      Rng rng(chain(seed, rng_phase::kMuNoise, i, idx));
      sgld_update_mu(net, state, params, stats[t], residuals, p, t, eps, rng,
                     {mu_next.data() + static_cast<std::size_t>(idx) * kk,
                      static_cast<std::size_t>(kk)},
                     cfg.neighbor_backcoupling, cfg.noise_scale);
    });
    state.mu.swap(mu_next);

    parallel_for(cfg.workers, static_cast<long>(steps) * pairs, [&](long idx) {
      int t = static_cast<int>(idx / pairs);
      int pair = static_cast<int>(idx % pairs);
      int k = 0, l = pair;
      while (l >= kk - k) {
        l -= kk - k;
        ++k;
      }
      l += k;
      Rng rng(chain(seed, rng_phase::kPhiNoise, i, idx));
      double v = sgld_update_phi(state, params, stats[t], k, l, t, eps, rng,
                                 cfg.noise_scale);
      phi_next[(static_cast<std::size_t>(t) * kk + k) * kk + l] = v;
      phi_next[(static_cast<std::size_t>(t) * kk + l) * kk + k] = v;
    });
    state.phi.swap(phi_next);

    check_finite_state(state, i);

    if ((i + 1) % cfg.param_update_every == 0 && steps >= 2) {
      parallel_for(cfg.workers, static_cast<long>(steps - 1) * n,
                   [&](long idx) {
                     int t = 1 + static_cast<int>(idx / n);
                     int p = static_cast<int>(idx % n);
                     params.beta_at(t, p) =
                         update_beta(net, state, params, p, t, cfg.sparse_mode);
                   });
      auto est = update_noise_params(net, state, params);
      params.eta = est.eta;
      params.gamma = est.gamma;
    }

    if (i >= cfg.burn_in) {
      ++ck.accum_count;
      for (int t = 0; t < steps; ++t)
        for (int p = 0; p < n; ++p) {
          auto pi = membership_simplex(state.mu_span(t, p));
          double* acc =
              ck.accum_pi.data() + (static_cast<std::size_t>(t) * n + p) * kk;
          for (int k = 0; k < kk; ++k) acc[k] += pi[k];
        }
      for (std::size_t j = 0; j < phi_size; ++j)
        ck.accum_b[j] += sigmoid(state.phi[j]);
      for (std::size_t j = 0; j < beta_size; ++j)
        ck.accum_beta[j] += params.beta[j];
    }
  }

  ck.next_iteration = cfg.num_iterations;
  ck.state = state;
  ck.params = params;

  PosteriorSummary summary;
  summary.num_steps = steps;
  summary.num_nodes = n;
  summary.num_comms = kk;
  summary.loglik_trace = ck.loglik_trace;
  summary.final_params = params;
  summary.mean_pi.resize(mu_size);
  summary.mean_b.resize(phi_size);
  summary.mean_beta.resize(beta_size);
  if (ck.accum_count > 0) {
    double inv = 1.0 / static_cast<double>(ck.accum_count);
    for (std::size_t j = 0; j < mu_size; ++j)
      summary.mean_pi[j] = ck.accum_pi[j] * inv;
    for (std::size_t j = 0; j < phi_size; ++j)
      summary.mean_b[j] = ck.accum_b[j] * inv;
    for (std::size_t j = 0; j < beta_size; ++j)
      summary.mean_beta[j] = ck.accum_beta[j] * inv;
  } else {
    for (int t = 0; t < steps; ++t)
      for (int p = 0; p < n; ++p)
        membership_simplex(
            state.mu_span(t, p),
            std::span<double>(summary.mean_pi.data() +
                                  (static_cast<std::size_t>(t) * n + p) * kk,
                              kk));
    for (std::size_t j = 0; j < phi_size; ++j)
      summary.mean_b[j] = sigmoid(state.phi[j]);
    summary.mean_beta = params.beta;
  }
  return InferenceResult{std::move(summary), std::move(ck)};
}

}  // namespace scmmsb
