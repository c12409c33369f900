#include "scmmsb/change_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scmmsb/errors.hpp"
#include "scmmsb/gen_model.hpp"

namespace scmmsb {

namespace {

double median_of(std::span<const double> xs) {
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  std::size_t n = s.size();
  if (n == 0) return 0.0;
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

// Exact minimum-cost assignment over an n x n cost matrix (row-major);
// returns perm with perm[row] = assigned column. O(n^3) potentials method.
std::vector<int> min_cost_assignment(const std::vector<double>& cost, int n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] -
                     u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> perm(n, 0);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) perm[p[j] - 1] = j - 1;
  return perm;
}

}  // namespace

double predictive_loglik(const DynamicNetwork& net,
                         const PosteriorSummary& summary) {
  const int steps = summary.num_steps;
  const int n = summary.num_nodes;
  const int kk = summary.num_comms;
  const double rho = summary.final_params.rho;
  double ll = 0.0;
  for (int t = 0; t < steps; ++t) {
    std::span<const double> b{
        summary.mean_b.data() + static_cast<std::size_t>(t) * kk * kk,
        static_cast<std::size_t>(kk) * kk};
    for (int p = 0; p < n; ++p) {
      std::span<const double> pi_p{
          summary.mean_pi.data() + (static_cast<std::size_t>(t) * n + p) * kk,
          static_cast<std::size_t>(kk)};
      for (int q = p + 1; q < n; ++q) {
        std::span<const double> pi_q{
            summary.mean_pi.data() +
                (static_cast<std::size_t>(t) * n + q) * kk,
            static_cast<std::size_t>(kk)};
        double pr = link_probability(pi_p, pi_q, b, kk, rho);
        ll += net.has_edge(t, p, q) ? log_floored(pr) : log_floored(1.0 - pr);
      }
    }
  }
  return ll;
}

double perplexity(const DynamicNetwork& net, const PosteriorSummary& summary) {
  double dyads = static_cast<double>(summary.num_steps) *
                 static_cast<double>(dyads_per_step(summary.num_nodes));
  return std::exp(-predictive_loglik(net, summary) / dyads);
}

std::vector<double> perplexity_per_step(const DynamicNetwork& net,
                                        const PosteriorSummary& summary) {
  const int steps = summary.num_steps;
  const int n = summary.num_nodes;
  const int kk = summary.num_comms;
  const double rho = summary.final_params.rho;
  std::vector<double> out(steps, 0.0);
  for (int t = 0; t < steps; ++t) {
    std::span<const double> b{
        summary.mean_b.data() + static_cast<std::size_t>(t) * kk * kk,
        static_cast<std::size_t>(kk) * kk};
    double ll = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        std::span<const double> pi_p{
            summary.mean_pi.data() +
                (static_cast<std::size_t>(t) * n + p) * kk,
            static_cast<std::size_t>(kk)};
        std::span<const double> pi_q{
            summary.mean_pi.data() +
                (static_cast<std::size_t>(t) * n + q) * kk,
            static_cast<std::size_t>(kk)};
        double pr = link_probability(pi_p, pi_q, b, kk, rho);
        ll += net.has_edge(t, p, q) ? log_floored(pr) : log_floored(1.0 - pr);
      }
    out[t] = std::exp(-ll / static_cast<double>(dyads_per_step(n)));
  }
  return out;
}

double aic(double loglik, long param_count) {
  return 2.0 * static_cast<double>(param_count) - 2.0 * loglik;
}

long model_param_count(int num_steps, int num_nodes, int num_comms) {
  long t = num_steps, n = num_nodes, k = num_comms;
  return t * n * (k - 1) + t * k * (k + 1) / 2 + t * n + k + 1;
}

std::vector<double> frobenius_distance_series(std::span<const double> mats,
                                              int num_steps, int num_comms) {
  const std::size_t cells = static_cast<std::size_t>(num_comms) * num_comms;
  std::vector<double> out;
  out.reserve(num_steps > 0 ? num_steps - 1 : 0);
  for (int t = 1; t < num_steps; ++t) {
    double s = 0.0;
    const double* a = mats.data() + (static_cast<std::size_t>(t) - 1) * cells;
    const double* b = mats.data() + static_cast<std::size_t>(t) * cells;
    for (std::size_t j = 0; j < cells; ++j) {
      double d = b[j] - a[j];
      s += d * d;
    }
    out.push_back(std::sqrt(s));
  }
  return out;
}

std::vector<double> affinity_distance_series(std::span<const double> phi,
                                             int num_steps, int num_comms) {
  std::vector<double> b(phi.size());
  for (std::size_t j = 0; j < phi.size(); ++j) b[j] = sigmoid(phi[j]);
  return frobenius_distance_series(b, num_steps, num_comms);
}

std::set<int> detect_global_changes(std::span<const double> series,
                                    const ThresholdPolicy& policy) {
  std::set<int> out;
  if (series.empty()) return out;
  double threshold = policy.kappa * median_of(series);
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series[i] > threshold) out.insert(static_cast<int>(i) + 1);
  return out;
}

std::vector<double> local_change_scores(std::span<const double> mean_pi,
                                        int num_steps, int num_nodes,
                                        int num_comms) {
  std::vector<double> scores;
  if (num_steps < 2) return scores;
  scores.assign(static_cast<std::size_t>(num_steps - 1) * num_nodes, 0.0);
  for (int t = 1; t < num_steps; ++t)
    for (int p = 0; p < num_nodes; ++p) {
      const double* prev =
          mean_pi.data() +
          (static_cast<std::size_t>(t - 1) * num_nodes + p) * num_comms;
      const double* cur =
          mean_pi.data() +
          (static_cast<std::size_t>(t) * num_nodes + p) * num_comms;
      double s = 0.0;
      for (int k = 0; k < num_comms; ++k) s += std::abs(cur[k] - prev[k]);
      scores[static_cast<std::size_t>(t - 1) * num_nodes + p] = s;
    }
  return scores;
}

Alignment align_labels(std::span<const double> learned_pi,
                       std::span<const double> true_pi, int num_steps,
                       int num_nodes, int num_comms) {
  const int kk = num_comms;
  std::vector<double> cost(static_cast<std::size_t>(kk) * kk, 0.0);
  for (int t = 0; t < num_steps; ++t)
    for (int p = 0; p < num_nodes; ++p) {
      std::size_t base = (static_cast<std::size_t>(t) * num_nodes + p) * kk;
      for (int k = 0; k < kk; ++k)
        for (int j = 0; j < kk; ++j)
          cost[static_cast<std::size_t>(k) * kk + j] +=
              std::abs(learned_pi[base + j] - true_pi[base + k]);
    }
  Alignment al;
  al.permutation = min_cost_assignment(cost, kk);
  for (int k = 0; k < kk; ++k)
    al.cost += cost[static_cast<std::size_t>(k) * kk + al.permutation[k]];
  return al;
}

double recovery_error(std::span<const double> learned_pi,
                      std::span<const double> true_pi,
                      const Alignment& alignment, int num_steps,
                      int num_nodes, int num_comms) {
  double total = 0.0;
  for (int t = 0; t < num_steps; ++t)
    for (int p = 0; p < num_nodes; ++p) {
      std::size_t base =
          (static_cast<std::size_t>(t) * num_nodes + p) * num_comms;
      for (int k = 0; k < num_comms; ++k)
        total += std::abs(learned_pi[base + alignment.permutation[k]] -
                          true_pi[base + k]);
    }
  return total / (static_cast<double>(num_steps) * num_nodes);
}

ChangeReport detect_changes(const PosteriorSummary& summary,
                            const ThresholdPolicy& policy) {
  ChangeReport report;
  report.num_steps = summary.num_steps;
  report.num_nodes = summary.num_nodes;
  if (summary.num_steps < 2) return report;
  report.global_distances = frobenius_distance_series(
      summary.mean_b, summary.num_steps, summary.num_comms);
  report.threshold_used = policy.kappa * median_of(report.global_distances);
  report.global_change_points =
      detect_global_changes(report.global_distances, policy);
  report.local_scores =
      local_change_scores(summary.mean_pi, summary.num_steps,
                          summary.num_nodes, summary.num_comms);

  const int n = summary.num_nodes;
  for (int t = 1; t < summary.num_steps; ++t) {
    std::span<const double> row{
        report.local_scores.data() + static_cast<std::size_t>(t - 1) * n,
        static_cast<std::size_t>(n)};
    double cutoff = policy.kappa * median_of(row);
    std::vector<int> flagged;
    for (int p = 0; p < n; ++p)
      if (row[p] > cutoff) flagged.push_back(p);
    std::sort(flagged.begin(), flagged.end(), [&](int a, int b) {
      if (row[a] != row[b]) return row[a] > row[b];
      return a < b;
    });
    if (!flagged.empty()) report.flagged_nodes[t] = std::move(flagged);
  }
  return report;
}

}  // namespace scmmsb
