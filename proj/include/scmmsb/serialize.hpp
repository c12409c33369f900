#pragma once

#include <set>
#include <span>
#include <string>

#include "scmmsb/change_eval.hpp"
#include "scmmsb/dynamic_network.hpp"
#include "scmmsb/model.hpp"
#include "scmmsb/sgld.hpp"

namespace scmmsb {

// Shortest decimal string that parses back to the identical double.
std::string format_double(double value);

// JSON artifacts. Keys are emitted in sorted order so files are stable for
// golden-file comparison; doubles round-trip exactly, which the checkpoint
// loader relies on. Load failures (missing file, bad JSON, inconsistent
// dimensions) raise DataError.
void save_truth(const std::string& path, const GroundTruth& truth);
GroundTruth load_truth(const std::string& path);

void save_posterior(const std::string& path, const PosteriorSummary& summary);
PosteriorSummary load_posterior(const std::string& path);

void save_checkpoint(const std::string& path, const InferenceCheckpoint& ck);
InferenceCheckpoint load_checkpoint(const std::string& path);

void save_change_report(const std::string& path, const ChangeReport& report);
ChangeReport load_change_report(const std::string& path);

void save_recovery(const std::string& path, const Alignment& alignment,
                   double error, const std::set<int>& true_changes,
                   const std::set<int>& detected_changes);

// CSV artifacts: comma-separated, one header row, LF line endings, fields
// never need quoting.
void write_loglik_csv(const std::string& path, std::span<const double> trace);

void write_global_distances_csv(const std::string& path,
                                const ChangeReport& report);

// One row per (entered step, node): score plus that node's mean mixing
// weight at the entered step.
void write_local_scores_csv(const std::string& path,
                            const ChangeReport& report,
                            const PosteriorSummary& summary);

// Per-step perplexity and AIC, exactly num_steps rows.
void write_metrics_csv(const std::string& path, const DynamicNetwork& net,
                       const PosteriorSummary& summary);

// K x K posterior-mean affinity matrix at step t.
void write_affinity_csv(const std::string& path,
                        const PosteriorSummary& summary, int t);

// Per-node membership rows at step t (stacked-bar input).
void write_membership_csv(const std::string& path,
                          const PosteriorSummary& summary, int t);

}  // namespace scmmsb
