#include "scmmsb/serialize.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "scmmsb/errors.hpp"

namespace scmmsb {

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(1) << '\n';
  out.flush();
  if (!out) throw DataError("failed writing " + path);
}

template <typename T>
T field(const json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const std::exception& e) {
    throw DataError(path + ": field '" + key + "': " + e.what());
  }
}

void check_size(const std::vector<double>& v, std::size_t expected,
                const char* name, const std::string& path) {
  if (v.size() != expected)
    throw DataError(path + ": field '" + name + "' has " +
                    std::to_string(v.size()) + " entries, expected " +
                    std::to_string(expected));
}

json params_to_json(const ModelParams& p) {
  json j;
  j["a0_var"] = p.a0_var;
  j["alpha0"] = p.alpha0;
  j["beta"] = p.beta;
  j["eta"] = p.eta;
  j["gamma"] = p.gamma;
  j["iota"] = p.iota;
  j["laplace_scale"] = p.laplace_scale;
  j["num_comms"] = p.num_comms;
  j["num_nodes"] = p.num_nodes;
  j["num_steps"] = p.num_steps;
  j["rho"] = p.rho;
  j["sigma2"] = p.sigma2;
  return j;
}

ModelParams params_from_json(const json& j, const std::string& path) {
  ModelParams p;
  p.num_steps = field<int>(j, "num_steps", path);
  p.num_nodes = field<int>(j, "num_nodes", path);
  p.num_comms = field<int>(j, "num_comms", path);
  if (p.num_steps < 1 || p.num_nodes < 2 || p.num_comms < 2)
    throw DataError(path + ": invalid parameter dimensions");
  p.beta = field<std::vector<double>>(j, "beta", path);
  p.eta = field<std::vector<double>>(j, "eta", path);
  p.gamma = field<double>(j, "gamma", path);
  p.rho = field<double>(j, "rho", path);
  p.laplace_scale = field<double>(j, "laplace_scale", path);
  p.alpha0 = field<std::vector<double>>(j, "alpha0", path);
  p.a0_var = field<std::vector<double>>(j, "a0_var", path);
  p.iota = field<double>(j, "iota", path);
  p.sigma2 = field<double>(j, "sigma2", path);
  std::size_t n = p.num_nodes, t = p.num_steps, k = p.num_comms;
  check_size(p.beta, t * n, "beta", path);
  check_size(p.eta, k, "eta", path);
  check_size(p.alpha0, k, "alpha0", path);
  check_size(p.a0_var, k, "a0_var", path);
  return p;
}

json state_to_json(const LatentState& s) {
  json j;
  j["mu"] = s.mu;
  j["num_comms"] = s.num_comms;
  j["num_nodes"] = s.num_nodes;
  j["num_steps"] = s.num_steps;
  j["phi"] = s.phi;
  json z;
  z["source"] = s.z.source;
  z["target"] = s.z.target;
  j["z"] = z;
  return j;
}

LatentState state_from_json(const json& j, const std::string& path) {
  int t = field<int>(j, "num_steps", path);
  int n = field<int>(j, "num_nodes", path);
  int k = field<int>(j, "num_comms", path);
  if (t < 1 || n < 2 || k < 2)
    throw DataError(path + ": invalid state dimensions");
  LatentState s(t, n, k);
  s.mu = field<std::vector<double>>(j, "mu", path);
  s.phi = field<std::vector<double>>(j, "phi", path);
  check_size(s.mu, static_cast<std::size_t>(t) * n * k, "mu", path);
  check_size(s.phi, static_cast<std::size_t>(t) * k * k, "phi", path);
  const json& z = j.at("z");
  std::vector<int> source = field<std::vector<int>>(z, "source", path);
  std::vector<int> target = field<std::vector<int>>(z, "target", path);
  if (source.size() != target.size())
    throw DataError(path + ": indicator arrays differ in length");
  if (!source.empty()) {
    std::size_t expected = static_cast<std::size_t>(t) * dyads_per_step(n);
    if (source.size() != expected)
      throw DataError(path + ": indicator arrays have " +
                      std::to_string(source.size()) + " entries, expected " +
                      std::to_string(expected));
    s.z = IndicatorSet(n, t);
    s.z.source = std::move(source);
    s.z.target = std::move(target);
    for (std::size_t i = 0; i < s.z.source.size(); ++i)
      if (s.z.source[i] < 0 || s.z.source[i] >= k || s.z.target[i] < 0 ||
          s.z.target[i] >= k)
        throw DataError(path + ": indicator out of range");
  }
  return s;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

void save_truth(const std::string& path, const GroundTruth& truth) {
  json j;
  json changed;
  for (const auto& [t, nodes] : truth.locally_changed_nodes)
    changed[std::to_string(t)] =
        std::vector<int>(nodes.begin(), nodes.end());
  j["global_change_times"] = std::vector<int>(
      truth.global_change_times.begin(), truth.global_change_times.end());
  j["locally_changed_nodes"] = changed;
  j["num_comms"] = truth.num_comms;
  j["num_nodes"] = truth.num_nodes;
  j["num_steps"] = truth.num_steps;
  j["true_b"] = truth.true_b;
  j["true_pi"] = truth.true_pi;
  write_json_file(path, j);
}

GroundTruth load_truth(const std::string& path) {
  json j = read_json_file(path);
  GroundTruth truth;
  truth.num_steps = field<int>(j, "num_steps", path);
  truth.num_nodes = field<int>(j, "num_nodes", path);
  truth.num_comms = field<int>(j, "num_comms", path);
  if (truth.num_steps < 1 || truth.num_nodes < 2 || truth.num_comms < 2)
    throw DataError(path + ": invalid truth dimensions");
  truth.true_pi = field<std::vector<double>>(j, "true_pi", path);
  truth.true_b = field<std::vector<double>>(j, "true_b", path);
  std::size_t t = truth.num_steps, n = truth.num_nodes, k = truth.num_comms;
  check_size(truth.true_pi, t * n * k, "true_pi", path);
  check_size(truth.true_b, t * k * k, "true_b", path);
  for (int v : field<std::vector<int>>(j, "global_change_times", path))
    truth.global_change_times.insert(v);
  const json& changed = j.at("locally_changed_nodes");
  for (auto it = changed.begin(); it != changed.end(); ++it) {
    int step = 0;
    try {
      step = std::stoi(it.key());
    } catch (const std::exception&) {
      throw DataError(path + ": bad change-time key '" + it.key() + "'");
    }
    std::set<int> nodes;
    for (int v : it.value().get<std::vector<int>>()) nodes.insert(v);
    truth.locally_changed_nodes[step] = std::move(nodes);
  }
  return truth;
}

void save_posterior(const std::string& path,
                    const PosteriorSummary& summary) {
  json j;
  j["final_params"] = params_to_json(summary.final_params);
  j["loglik_trace"] = summary.loglik_trace;
  j["mean_b"] = summary.mean_b;
  j["mean_beta"] = summary.mean_beta;
  j["mean_pi"] = summary.mean_pi;
  j["num_comms"] = summary.num_comms;
  j["num_nodes"] = summary.num_nodes;
  j["num_steps"] = summary.num_steps;
  write_json_file(path, j);
}

PosteriorSummary load_posterior(const std::string& path) {
  json j = read_json_file(path);
  PosteriorSummary s;
  s.num_steps = field<int>(j, "num_steps", path);
  s.num_nodes = field<int>(j, "num_nodes", path);
  s.num_comms = field<int>(j, "num_comms", path);
  if (s.num_steps < 1 || s.num_nodes < 2 || s.num_comms < 2)
    throw DataError(path + ": invalid posterior dimensions");
  s.mean_pi = field<std::vector<double>>(j, "mean_pi", path);
  s.mean_b = field<std::vector<double>>(j, "mean_b", path);
  s.mean_beta = field<std::vector<double>>(j, "mean_beta", path);
  s.loglik_trace = field<std::vector<double>>(j, "loglik_trace", path);
  std::size_t t = s.num_steps, n = s.num_nodes, k = s.num_comms;
  check_size(s.mean_pi, t * n * k, "mean_pi", path);
  check_size(s.mean_b, t * k * k, "mean_b", path);
  check_size(s.mean_beta, t * n, "mean_beta", path);
  s.final_params = params_from_json(j.at("final_params"), path);
  if (s.final_params.num_steps != s.num_steps ||
      s.final_params.num_nodes != s.num_nodes ||
      s.final_params.num_comms != s.num_comms)
    throw DataError(path + ": final_params dimensions disagree with summary");
  return s;
}

void save_checkpoint(const std::string& path, const InferenceCheckpoint& ck) {
  json j;
  j["accum_b"] = ck.accum_b;
  j["accum_beta"] = ck.accum_beta;
  j["accum_count"] = ck.accum_count;
  j["accum_pi"] = ck.accum_pi;
  j["loglik_trace"] = ck.loglik_trace;
  j["next_iteration"] = ck.next_iteration;
  j["params"] = params_to_json(ck.params);
  j["rng_scheme"] = "keyed-counter";
  j["seed"] = ck.seed;
  j["state"] = state_to_json(ck.state);
  write_json_file(path, j);
}

InferenceCheckpoint load_checkpoint(const std::string& path) {
  json j = read_json_file(path);
  std::string scheme = field<std::string>(j, "rng_scheme", path);
  if (scheme != "keyed-counter")
    throw DataError(path + ": unsupported rng scheme '" + scheme + "'");
  InferenceCheckpoint ck;
  ck.seed = field<std::uint64_t>(j, "seed", path);
  ck.next_iteration = field<int>(j, "next_iteration", path);
  if (ck.next_iteration < 0)
    throw DataError(path + ": negative iteration counter");
  ck.state = state_from_json(j.at("state"), path);
  ck.params = params_from_json(j.at("params"), path);
  ck.accum_count = field<long>(j, "accum_count", path);
  if (ck.accum_count < 0) throw DataError(path + ": negative sample count");
  ck.accum_pi = field<std::vector<double>>(j, "accum_pi", path);
  ck.accum_b = field<std::vector<double>>(j, "accum_b", path);
  ck.accum_beta = field<std::vector<double>>(j, "accum_beta", path);
  ck.loglik_trace = field<std::vector<double>>(j, "loglik_trace", path);
  std::size_t t = ck.state.num_steps, n = ck.state.num_nodes,
              k = ck.state.num_comms;
  if (ck.params.num_steps != ck.state.num_steps ||
      ck.params.num_nodes != ck.state.num_nodes ||
      ck.params.num_comms != ck.state.num_comms)
    throw DataError(path + ": params dimensions disagree with state");
  check_size(ck.accum_pi, t * n * k, "accum_pi", path);
  check_size(ck.accum_b, t * k * k, "accum_b", path);
  check_size(ck.accum_beta, t * n, "accum_beta", path);
  return ck;
}

void save_change_report(const std::string& path, const ChangeReport& report) {
  json j;
  json flagged;
  for (const auto& [t, nodes] : report.flagged_nodes)
    flagged[std::to_string(t)] = nodes;
  j["flagged_nodes"] = flagged;
  j["global_change_points"] = std::vector<int>(
      report.global_change_points.begin(), report.global_change_points.end());
  j["global_distances"] = report.global_distances;
  j["local_scores"] = report.local_scores;
  j["num_nodes"] = report.num_nodes;
  j["num_steps"] = report.num_steps;
  j["threshold_used"] = report.threshold_used;
  write_json_file(path, j);
}

ChangeReport load_change_report(const std::string& path) {
  json j = read_json_file(path);
  ChangeReport r;
  r.num_steps = field<int>(j, "num_steps", path);
  r.num_nodes = field<int>(j, "num_nodes", path);
  if (r.num_steps < 1 || r.num_nodes < 2)
    throw DataError(path + ": invalid report dimensions");
  r.global_distances =
      field<std::vector<double>>(j, "global_distances", path);
  r.local_scores = field<std::vector<double>>(j, "local_scores", path);
  r.threshold_used = field<double>(j, "threshold_used", path);
  std::size_t boundaries = static_cast<std::size_t>(r.num_steps) - 1;
  check_size(r.global_distances, boundaries, "global_distances", path);
  check_size(r.local_scores, boundaries * r.num_nodes, "local_scores", path);
  for (int v : field<std::vector<int>>(j, "global_change_points", path))
    r.global_change_points.insert(v);
  const json& flagged = j.at("flagged_nodes");
  for (auto it = flagged.begin(); it != flagged.end(); ++it) {
    int step = 0;
    try {
      step = std::stoi(it.key());
    } catch (const std::exception&) {
      throw DataError(path + ": bad flagged-step key '" + it.key() + "'");
    }
    r.flagged_nodes[step] = it.value().get<std::vector<int>>();
  }
  return r;
}

void save_recovery(const std::string& path, const Alignment& alignment,
                   double error, const std::set<int>& true_changes,
                   const std::set<int>& detected_changes) {
  json j;
  j["alignment_cost"] = alignment.cost;
  j["detected_global_changes"] =
      std::vector<int>(detected_changes.begin(), detected_changes.end());
  j["permutation"] = alignment.permutation;
  j["recovery_error"] = error;
  j["true_global_changes"] =
      std::vector<int>(true_changes.begin(), true_changes.end());
  write_json_file(path, j);
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

void finish_csv(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace

void write_loglik_csv(const std::string& path, std::span<const double> trace) {
  std::ofstream out = open_csv(path);
  out << "iteration,loglik\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i << ',' << format_double(trace[i]) << '\n';
  finish_csv(out, path);
}

void write_global_distances_csv(const std::string& path,
                                const ChangeReport& report) {
  std::ofstream out = open_csv(path);
  // t_entered = first step of the new regime (the step the series moved into)
  out << "t_entered,distance,flagged\n";
  for (std::size_t i = 0; i < report.global_distances.size(); ++i) {
    int t = static_cast<int>(i) + 1;
    out << t << ',' << format_double(report.global_distances[i]) << ','
        << (report.global_change_points.count(t) ? 1 : 0) << '\n';
  }
  finish_csv(out, path);
}

void write_local_scores_csv(const std::string& path,
                            const ChangeReport& report,
                            const PosteriorSummary& summary) {
  if (report.num_steps != summary.num_steps ||
      report.num_nodes != summary.num_nodes)
    throw ConfigError("change report and posterior dimensions disagree");
  std::ofstream out = open_csv(path);
  out << "t_entered,node,score,mean_beta\n";
  const int n = report.num_nodes;
  for (int t = 1; t < report.num_steps; ++t)
    for (int p = 0; p < n; ++p) {
      double score =
          report.local_scores[(static_cast<std::size_t>(t) - 1) * n + p];
      double beta = summary.mean_beta[static_cast<std::size_t>(t) * n + p];
      out << t << ',' << p << ',' << format_double(score) << ','
          << format_double(beta) << '\n';
    }
  finish_csv(out, path);
}

void write_metrics_csv(const std::string& path, const DynamicNetwork& net,
                       const PosteriorSummary& summary) {
  std::vector<double> perp = perplexity_per_step(net, summary);
  const int n = summary.num_nodes;
  const int k = summary.num_comms;
  const double nd = static_cast<double>(dyads_per_step(n));
  std::ofstream out = open_csv(path);
  out << "t,perplexity,aic\n";
  for (int t = 0; t < summary.num_steps; ++t) {
    double ll = -std::log(perp[static_cast<std::size_t>(t)]) * nd;
    long params = static_cast<long>(n) * (k - 1) +
                  static_cast<long>(k) * (k + 1) / 2 + (t >= 1 ? n : 0);
    out << t << ',' << format_double(perp[static_cast<std::size_t>(t)]) << ','
        << format_double(aic(ll, params)) << '\n';
  }
  finish_csv(out, path);
}

void write_affinity_csv(const std::string& path,
                        const PosteriorSummary& summary, int t) {
  if (t < 0 || t >= summary.num_steps)
    throw ConfigError("affinity csv: step out of range");
  const int k = summary.num_comms;
  std::ofstream out = open_csv(path);
  for (int l = 0; l < k; ++l) out << (l ? "," : "") << 'c' << l;
  out << '\n';
  for (int row = 0; row < k; ++row) {
    for (int col = 0; col < k; ++col) {
      double v = summary.mean_b[(static_cast<std::size_t>(t) * k + row) * k +
                                col];
      out << (col ? "," : "") << format_double(v);
    }
    out << '\n';
  }
  finish_csv(out, path);
}

void write_membership_csv(const std::string& path,
                          const PosteriorSummary& summary, int t) {
  if (t < 0 || t >= summary.num_steps)
    throw ConfigError("membership csv: step out of range");
  const int n = summary.num_nodes;
  const int k = summary.num_comms;
  std::ofstream out = open_csv(path);
  out << "node";
  for (int l = 0; l < k; ++l) out << ",c" << l;
  out << '\n';
  for (int p = 0; p < n; ++p) {
    out << p;
    for (int l = 0; l < k; ++l)
      out << ','
          << format_double(
                 summary.mean_pi[(static_cast<std::size_t>(t) * n + p) * k +
                                 l]);
    out << '\n';
  }
  finish_csv(out, path);
}

}  // namespace scmmsb
