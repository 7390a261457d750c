#pragma once

// Adam training loop over per-batch graphs, plus the two outer loops used
// by experiments: a lambda grid search and a multi-seed protocol with
// per-seed validation splits.
//
// Everything here is deterministic given its config: parameter init, batch
// order, the validation split, and threshold tuning all derive their
// randomness from the run seed, so rerunning a config reproduces the same
// model bit for bit.

#include <cstdint>
#include <string>
#include <vector>

#include <hiertag/data.hpp>
#include <hiertag/heads.hpp>
#include <hiertag/metrics.hpp>

namespace hiertag {

struct TrainConfig {
  Variant variant = Variant::JointGMP;
  std::vector<int> encoder_hidden = {128};
  double lambda = 0.8;  // fine-loss weight; coarse gets 1 - lambda
  double max_lr = 1e-4;
  int warmup_epochs = 5;
  int epochs = 50;
  int batch_size = 16;
  double weight_decay = 1e-4;
  bool decoupled_decay = false;  // subtract decay from the step instead of
                                 // folding it into the gradient
  double val_fraction = 0.15;    // used by multi_seed's per-seed splits
  std::uint64_t seed = 0;
  std::vector<double> lambda_grid = {0.70, 0.75, 0.80, 0.85, 0.90};
};

std::string train_config_to_json(const TrainConfig& config);
// Accepts a subset of keys (missing ones keep their defaults) but rejects
// unknown ones, so a typo cannot silently train the wrong thing.
TrainConfig train_config_from_json(const std::string& text);

// lambda * fine + (1 - lambda) * coarse.
double combined_loss(double lambda, double fine, double coarse);

// Linear warmup over `warmup_epochs` (first epoch gets max_lr / warmup),
// then flat at max_lr.
double lr_at(const TrainConfig& config, int epoch);

struct EpochTrace {
  int epoch = 0;
  double lr = 0.0;
  double train_fine_bce = 0.0;
  double train_coarse_bce = 0.0;  // NaN for variants without a coarse head
  double val_fine_bce = 0.0;
  double val_coarse_bce = 0.0;
};

struct TrainResult {
  HeadModel model;  // parameters restored to the best epoch's snapshot
  std::vector<EpochTrace> trace;
  int best_epoch = -1;
  double best_val_fine_bce = 0.0;
  // Tuned on validation predictions of the snapshot; tags with no observed
  // validation entries fall back to 0.5.
  std::vector<double> fine_thresholds;
  std::vector<double> coarse_thresholds;
};

// Minimizes the masked BCE combined across levels (fine-only for variants
// without a coarse head). The snapshot keeps the epoch with the lowest
// validation fine BCE; on ties the earlier epoch wins.
TrainResult train(const Dataset& train_data, const Dataset& val_data,
                  const TrainConfig& config);

struct ScoreMatrices {
  Matrix fine;    // (n_samples x n_fine)
  Matrix coarse;  // (n_samples x n_coarse); bottom-up max when the model
                  // has no coarse head
};

ScoreMatrices predict_scores(const HeadModel& model, const Dataset& dataset);

struct GridTrial {
  double lambda = 0.0;
  double val_fine_bce = 0.0;  // best epoch's value
  int best_epoch = -1;
};

struct GridSearchResult {
  std::vector<GridTrial> trials;  // in grid order
  double best_lambda = 0.0;
  TrainResult best;  // the winning run, kept as trained
};

// Trains once per lambda in config.lambda_grid, all at config.seed, and
// keeps the run with the lowest validation fine BCE; exact ties go to the
// smaller lambda.
GridSearchResult grid_search(const Dataset& train_data, const Dataset& val_data,
                             const TrainConfig& config);

struct SeedRun {
  std::uint64_t seed = 0;
  TrainResult result;
  MetricsReport test_report;  // per-seed thresholds applied to `test_data`
};

struct MultiSeedResult {
  std::vector<SeedRun> runs;
  // Means over runs of the test report's macro scores.
  double mean_fine_macro_roc_auc = 0.0;
  double mean_fine_macro_pr_auc = 0.0;
  double mean_fine_macro_f1 = 0.0;
  double mean_coarse_macro_roc_auc = 0.0;
  double mean_coarse_macro_pr_auc = 0.0;
  double mean_coarse_macro_f1 = 0.0;
};

// For each seed: carve a fresh val_fraction split out of `pool`, train on
// the rest, tune thresholds on that split, and score `test_data`. Runs are
// independent and execute in parallel when OpenMP is available; results
// are keyed by slot, so the output never depends on scheduling.
MultiSeedResult multi_seed(const Dataset& pool, const Dataset& test_data,
                           const TrainConfig& config,
                           const std::vector<std::uint64_t>& seeds);

}  // namespace hiertag
