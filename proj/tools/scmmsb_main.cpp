#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "scmmsb/change_eval.hpp"
#include "scmmsb/dynamic_network.hpp"
#include "scmmsb/errors.hpp"
#include "scmmsb/gen_model.hpp"
#include "scmmsb/serialize.hpp"
#include "scmmsb/sgld.hpp"

namespace fs = std::filesystem;
using namespace scmmsb;

namespace {

// ---- typed parsing of config-file values (full-token, no trailing junk) ----

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double_value(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad number '" + s + "'");
  }
}

long long parse_int_value(const std::string& key, const std::string& s) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': bad integer '" + s + "'");
  return v;
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': bad seed '" + s + "'");
  return v;
}

bool parse_bool_value(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "': bad boolean '" + s + "'");
}

// Config file: one `key value` or `key=value` per line, '#' comments.
// Command-line flags win over file entries; file entries win over defaults.
struct KeyedOptions {
  std::map<std::string,
           std::pair<CLI::Option*, std::function<void(const std::string&)>>>
      entries;

  void add(const std::string& key, CLI::Option* opt,
           std::function<void(const std::string&)> set) {
    entries.emplace(key, std::make_pair(opt, std::move(set)));
  }

  void apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      std::size_t sep = line.find_first_of("= \t");
      if (sep == std::string::npos)
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": expected 'key value'");
      std::string key = trim(line.substr(0, sep));
      std::string value = trim(line.substr(sep + 1));
      if (!value.empty() && value.front() == '=') value = trim(value.substr(1));
      auto it = entries.find(key);
      if (it == entries.end())
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": unknown config key '" + key + "'");
      if (value.empty())
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": missing value for '" + key + "'");
      if (it->second.first->count() == 0) it->second.second(value);
    }
  }
};

void require_input_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path))
    throw ConfigError("missing " + what + ": " + path);
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory " + out + ": " +
                          ec.message());
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv("DYNET_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  return parse_u64_value("DYNET_SEED", env);
}

// ---------------------------------- generate -------------------------------

struct GenerateArgs {
  int variant = 1;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::string config_file;
  GeneratorOptions opts;
};

int cmd_generate(const GenerateArgs& args, bool seed_given) {
  GenerateArgs a = args;
  if (!seed_given) a.seed = seed_from_env(a.seed);
  SyntheticData data = generate_synthetic(a.variant, a.seed, a.opts);
  ensure_out_dir(a.out);
  std::string net_path = a.out + "/network.tsv";
  std::string truth_path = a.out + "/truth.json";
  save_snapshots(data.network, net_path);
  save_truth(truth_path, data.truth);
  std::cout << "generated variant " << a.variant << " (N="
            << data.truth.num_nodes << ", T=" << data.truth.num_steps
            << ", K=" << data.truth.num_comms << ", "
            << data.network.num_edges_total() << " edges) -> " << net_path
            << ", " << truth_path << '\n';
  return 0;
}

// ---------------------------------- infer ----------------------------------

struct InferArgs {
  std::string network;
  int nodes = 0;
  int steps = 0;
  std::string out = ".";
  std::string config_file;
  std::string resume;
  std::string likelihood = "sigmoid";
  SgldConfig cfg;
};

int cmd_infer(const InferArgs& args, bool seed_given) {
  InferArgs a = args;
  if (!seed_given) a.cfg.seed = seed_from_env(a.cfg.seed);
  if (a.likelihood == "sigmoid")
    a.cfg.indicator_likelihood = IndicatorLikelihood::kSigmoid;
  else if (a.likelihood == "exp")
    a.cfg.indicator_likelihood = IndicatorLikelihood::kExp;
  else
    throw ConfigError("indicator likelihood must be 'sigmoid' or 'exp', got '" +
                      a.likelihood + "'");
  if (a.nodes < 2 || a.steps < 1)
    throw ConfigError("--nodes must be >= 2 and --steps >= 1");
  a.cfg.validate();
  require_input_file(a.network, "network file");
  DynamicNetwork net = load_snapshots(a.network, a.nodes, a.steps);

  InferenceResult result;
  if (!a.resume.empty()) {
    require_input_file(a.resume, "checkpoint file");
    InferenceCheckpoint ck = load_checkpoint(a.resume);
    result = run_inference(net, a.cfg, nullptr, &ck);
  } else {
    result = run_inference(net, a.cfg);
  }

  ensure_out_dir(a.out);
  save_posterior(a.out + "/posterior.json", result.summary);
  save_checkpoint(a.out + "/checkpoint.json", result.checkpoint);
  write_loglik_csv(a.out + "/loglik_trace.csv", result.summary.loglik_trace);
  double final_ll = result.summary.loglik_trace.empty()
                        ? 0.0
                        : result.summary.loglik_trace.back();
  std::cout << "inference done: " << result.checkpoint.next_iteration
            << " iterations, final minibatch loglik " << final_ll << " -> "
            << a.out << "/posterior.json\n";
  return 0;
}

// ---------------------------------- detect ---------------------------------

struct DetectArgs {
  std::string posterior;
  std::string out = ".";
  std::string config_file;
  double kappa = 3.0;
};

int cmd_detect(const DetectArgs& args) {
  if (!(args.kappa > 0.0)) throw ConfigError("--kappa must be > 0");
  require_input_file(args.posterior, "posterior file");
  PosteriorSummary summary = load_posterior(args.posterior);
  ThresholdPolicy policy{args.kappa};
  ChangeReport report = detect_changes(summary, policy);
  ensure_out_dir(args.out);
  save_change_report(args.out + "/change_report.json", report);
  write_global_distances_csv(args.out + "/global_distances.csv", report);
  write_local_scores_csv(args.out + "/local_scores.csv", report, summary);
  std::cout << "detected " << report.global_change_points.size()
            << " global change point(s):";
  for (int t : report.global_change_points) std::cout << ' ' << t;
  std::cout << " (threshold " << report.threshold_used << ") -> " << args.out
            << "/change_report.json\n";
  return 0;
}

// ---------------------------------- report ---------------------------------

struct ReportArgs {
  std::string posterior;
  std::string network;
  std::string truth;
  std::string out = ".";
  std::string config_file;
  double kappa = 3.0;
};

int cmd_report(const ReportArgs& args) {
  if (!(args.kappa > 0.0)) throw ConfigError("--kappa must be > 0");
  require_input_file(args.posterior, "posterior file");
  require_input_file(args.network, "network file");
  PosteriorSummary summary = load_posterior(args.posterior);
  DynamicNetwork net =
      load_snapshots(args.network, summary.num_nodes, summary.num_steps);
  ensure_out_dir(args.out);
  write_metrics_csv(args.out + "/metrics.csv", net, summary);
  for (int t = 0; t < summary.num_steps; ++t) {
    write_affinity_csv(args.out + "/affinity_t" + std::to_string(t) + ".csv",
                       summary, t);
    write_membership_csv(
        args.out + "/membership_t" + std::to_string(t) + ".csv", summary, t);
  }
  std::cout << "report: metrics.csv plus " << summary.num_steps
            << " affinity/membership tables -> " << args.out << '\n';
  if (!args.truth.empty()) {
    require_input_file(args.truth, "truth file");
    GroundTruth truth = load_truth(args.truth);
    if (truth.num_steps != summary.num_steps ||
        truth.num_nodes != summary.num_nodes ||
        truth.num_comms != summary.num_comms)
      throw DataError("truth dimensions disagree with posterior");
    Alignment alignment =
        align_labels(summary.mean_pi, truth.true_pi, summary.num_steps,
                     summary.num_nodes, summary.num_comms);
    double error =
        recovery_error(summary.mean_pi, truth.true_pi, alignment,
                       summary.num_steps, summary.num_nodes,
                       summary.num_comms);
    ChangeReport report = detect_changes(summary, ThresholdPolicy{args.kappa});
    save_recovery(args.out + "/recovery.json", alignment, error,
                  truth.global_change_times, report.global_change_points);
    std::cout << "recovery: mean L1 error " << error << " -> " << args.out
              << "/recovery.json\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Dynamic mixed-membership blockmodel toolkit: synthetic network "
      "generation, SGLD inference with co-evolving memberships, and "
      "change-point detection"};
  app.require_subcommand(1);

  GenerateArgs gen;
  InferArgs inf;
  DetectArgs det;
  ReportArgs rep;
  KeyedOptions gen_keys, inf_keys, det_keys, rep_keys;
  bool gen_seed_from_file = false;
  bool inf_seed_from_file = false;

  // generate
  CLI::App* cg = app.add_subcommand("generate", "Sample a synthetic scenario");
  auto* g_variant =
      cg->add_option("--variant", gen.variant,
                     "Scenario: 1 global changes, 2 local changes, 3 both");
  auto* g_seed = cg->add_option("--seed", gen.seed, "Random seed");
  cg->add_option("--out", gen.out, "Output directory");
  cg->add_option("--config", gen.config_file, "Key-value config file");
  auto* g_nodes = cg->add_option("--nodes", gen.opts.num_nodes, "Node count");
  auto* g_major =
      cg->add_option("--major", gen.opts.major, "Strong-cell link probability");
  auto* g_minor =
      cg->add_option("--minor", gen.opts.minor, "Weak-cell link probability");
  auto* g_rho = cg->add_option("--rho", gen.opts.rho, "Global down-weighting");
  auto* g_mu =
      cg->add_option("--mu-scale", gen.opts.mu_scale, "One-hot mu magnitude");
  gen_keys.add("variant", g_variant, [&](const std::string& v) {
    gen.variant = static_cast<int>(parse_int_value("variant", v));
  });
  gen_keys.add("seed", g_seed, [&](const std::string& v) {
    gen.seed = parse_u64_value("seed", v);
    gen_seed_from_file = true;
  });
  gen_keys.add("nodes", g_nodes, [&](const std::string& v) {
    gen.opts.num_nodes = static_cast<int>(parse_int_value("nodes", v));
  });
  gen_keys.add("major", g_major, [&](const std::string& v) {
    gen.opts.major = parse_double_value("major", v);
  });
  gen_keys.add("minor", g_minor, [&](const std::string& v) {
    gen.opts.minor = parse_double_value("minor", v);
  });
  gen_keys.add("rho", g_rho, [&](const std::string& v) {
    gen.opts.rho = parse_double_value("rho", v);
  });
  gen_keys.add("mu-scale", g_mu, [&](const std::string& v) {
    gen.opts.mu_scale = parse_double_value("mu-scale", v);
  });

  // infer
  CLI::App* ci = app.add_subcommand("infer", "Run SGLD posterior inference");
  ci->add_option("--network", inf.network, "Edge-list input (network.tsv)")
      ->required();
  ci->add_option("--nodes", inf.nodes, "Declared node count N")->required();
  ci->add_option("--steps", inf.steps, "Declared step count T")->required();
  auto* i_comms =
      ci->add_option("--comms", inf.cfg.num_comms, "Community count K")
          ->required();
  ci->add_option("--out", inf.out, "Output directory");
  ci->add_option("--config", inf.config_file, "Key-value config file");
  ci->add_option("--resume", inf.resume, "Checkpoint to continue from");
  auto* i_seed = ci->add_option("--seed", inf.cfg.seed,
                                "Random seed (env DYNET_SEED as fallback)");
  auto* i_iters =
      ci->add_option("--iterations", inf.cfg.num_iterations, "SGLD sweeps");
  auto* i_burn = ci->add_option("--burn-in", inf.cfg.burn_in,
                                "Sweeps discarded before averaging");
  auto* i_mb = ci->add_option("--minibatch", inf.cfg.minibatch_fraction,
                              "Non-link fraction per step (1.0 = full batch)");
  auto* i_sparse = ci->add_option(
      "--sparse", inf.cfg.sparse_mode,
      "true: Laplace-shrunk influence weights; false: non-sparse variant");
  auto* i_workers =
      ci->add_option("--workers", inf.cfg.workers, "Parallel workers");
  auto* i_sa = ci->add_option("--step-a", inf.cfg.step_a, "Step size a");
  auto* i_sb = ci->add_option("--step-b", inf.cfg.step_b, "Step size b");
  auto* i_sc = ci->add_option("--step-c", inf.cfg.step_c, "Step size c");
  auto* i_pe = ci->add_option("--param-every", inf.cfg.param_update_every,
                              "Sweeps between influence/noise refreshes");
  auto* i_bc = ci->add_option("--backcoupling", inf.cfg.neighbor_backcoupling,
                              "Include neighbor back-coupling gradient term");
  auto* i_lik = ci->add_option("--indicator-likelihood", inf.likelihood,
                               "Indicator weight form: sigmoid | exp");
  auto* i_noise = ci->add_option("--noise-scale", inf.cfg.noise_scale,
                                 "Langevin noise multiplier (0 = none)");
  auto* i_isd = ci->add_option("--init-sd", inf.cfg.init_sd,
                               "Initial latent draw std-dev");
  auto* i_ieta =
      ci->add_option("--init-eta", inf.cfg.init_eta, "Initial eta");
  auto* i_igam =
      ci->add_option("--init-gamma", inf.cfg.init_gamma, "Initial gamma");
  auto* i_rho = ci->add_option("--rho", inf.cfg.rho, "Link down-weighting");
  auto* i_lap = ci->add_option("--laplace-scale", inf.cfg.laplace_scale,
                               "Influence-weight prior scale");
  auto* i_a0 =
      ci->add_option("--alpha0", inf.cfg.alpha0, "t=0 membership prior mean");
  auto* i_a0v = ci->add_option("--a0-var", inf.cfg.a0_var,
                               "t=0 membership prior variance");
  auto* i_iota =
      ci->add_option("--iota", inf.cfg.iota, "t=0 affinity prior mean");
  auto* i_s2 = ci->add_option("--sigma2", inf.cfg.sigma2,
                              "t=0 affinity prior variance");
  inf_keys.add("seed", i_seed, [&](const std::string& v) {
    inf.cfg.seed = parse_u64_value("seed", v);
    inf_seed_from_file = true;
  });
  inf_keys.add("comms", i_comms, [&](const std::string& v) {
    inf.cfg.num_comms = static_cast<int>(parse_int_value("comms", v));
  });
  inf_keys.add("iterations", i_iters, [&](const std::string& v) {
    inf.cfg.num_iterations =
        static_cast<int>(parse_int_value("iterations", v));
  });
  inf_keys.add("burn-in", i_burn, [&](const std::string& v) {
    inf.cfg.burn_in = static_cast<int>(parse_int_value("burn-in", v));
  });
  inf_keys.add("minibatch", i_mb, [&](const std::string& v) {
    inf.cfg.minibatch_fraction = parse_double_value("minibatch", v);
  });
  inf_keys.add("sparse", i_sparse, [&](const std::string& v) {
    inf.cfg.sparse_mode = parse_bool_value("sparse", v);
  });
  inf_keys.add("workers", i_workers, [&](const std::string& v) {
    inf.cfg.workers = static_cast<int>(parse_int_value("workers", v));
  });
  inf_keys.add("step-a", i_sa, [&](const std::string& v) {
    inf.cfg.step_a = parse_double_value("step-a", v);
  });
  inf_keys.add("step-b", i_sb, [&](const std::string& v) {
    inf.cfg.step_b = parse_double_value("step-b", v);
  });
  inf_keys.add("step-c", i_sc, [&](const std::string& v) {
    inf.cfg.step_c = parse_double_value("step-c", v);
  });
  inf_keys.add("param-every", i_pe, [&](const std::string& v) {
    inf.cfg.param_update_every =
        static_cast<int>(parse_int_value("param-every", v));
  });
  inf_keys.add("backcoupling", i_bc, [&](const std::string& v) {
    inf.cfg.neighbor_backcoupling = parse_bool_value("backcoupling", v);
  });
  inf_keys.add("indicator-likelihood", i_lik,
               [&](const std::string& v) { inf.likelihood = v; });
  inf_keys.add("noise-scale", i_noise, [&](const std::string& v) {
    inf.cfg.noise_scale = parse_double_value("noise-scale", v);
  });
  inf_keys.add("init-sd", i_isd, [&](const std::string& v) {
    inf.cfg.init_sd = parse_double_value("init-sd", v);
  });
  inf_keys.add("init-eta", i_ieta, [&](const std::string& v) {
    inf.cfg.init_eta = parse_double_value("init-eta", v);
  });
  inf_keys.add("init-gamma", i_igam, [&](const std::string& v) {
    inf.cfg.init_gamma = parse_double_value("init-gamma", v);
  });
  inf_keys.add("rho", i_rho, [&](const std::string& v) {
    inf.cfg.rho = parse_double_value("rho", v);
  });
  inf_keys.add("laplace-scale", i_lap, [&](const std::string& v) {
    inf.cfg.laplace_scale = parse_double_value("laplace-scale", v);
  });
  inf_keys.add("alpha0", i_a0, [&](const std::string& v) {
    inf.cfg.alpha0 = parse_double_value("alpha0", v);
  });
  inf_keys.add("a0-var", i_a0v, [&](const std::string& v) {
    inf.cfg.a0_var = parse_double_value("a0-var", v);
  });
  inf_keys.add("iota", i_iota, [&](const std::string& v) {
    inf.cfg.iota = parse_double_value("iota", v);
  });
  inf_keys.add("sigma2", i_s2, [&](const std::string& v) {
    inf.cfg.sigma2 = parse_double_value("sigma2", v);
  });

  // detect
  CLI::App* cd = app.add_subcommand("detect", "Threshold change detection");
  cd->add_option("--posterior", det.posterior, "posterior.json from infer")
      ->required();
  cd->add_option("--out", det.out, "Output directory");
  cd->add_option("--config", det.config_file, "Key-value config file");
  auto* d_kappa =
      cd->add_option("--kappa", det.kappa, "Threshold multiplier on the "
                                           "median distance");
  det_keys.add("kappa", d_kappa, [&](const std::string& v) {
    det.kappa = parse_double_value("kappa", v);
  });

  // report
  CLI::App* cr = app.add_subcommand("report", "Emit plot-ready tables");
  cr->add_option("--posterior", rep.posterior, "posterior.json from infer")
      ->required();
  cr->add_option("--network", rep.network, "Edge-list the run was fit to")
      ->required();
  cr->add_option("--truth", rep.truth, "truth.json for label-aligned scoring");
  cr->add_option("--out", rep.out, "Output directory");
  cr->add_option("--config", rep.config_file, "Key-value config file");
  auto* r_kappa = cr->add_option("--kappa", rep.kappa,
                                 "Threshold multiplier for recovery.json");
  rep_keys.add("kappa", r_kappa, [&](const std::string& v) {
    rep.kappa = parse_double_value("kappa", v);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (cg->parsed()) {
      if (!gen.config_file.empty()) gen_keys.apply_file(gen.config_file);
      return cmd_generate(gen, g_seed->count() > 0 || gen_seed_from_file);
    }
    if (ci->parsed()) {
      if (!inf.config_file.empty()) inf_keys.apply_file(inf.config_file);
      return cmd_infer(inf, i_seed->count() > 0 || inf_seed_from_file);
    }
    if (cd->parsed()) {
      if (!det.config_file.empty()) det_keys.apply_file(det.config_file);
      return cmd_detect(det);
    }
    if (cr->parsed()) {
      if (!rep.config_file.empty()) rep_keys.apply_file(rep.config_file);
      return cmd_report(rep);
    }
    std::cerr << "scmmsb: no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "scmmsb: config error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "scmmsb: config error: " << e.what()
              << " (check --nodes/--steps against the input)\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "scmmsb: data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "scmmsb: numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "scmmsb: error: " << e.what() << '\n';
    return 1;
  }
}
