#include <hiertag/trainer.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <utility>

#include <json.hpp>

#include <hiertag/errors.hpp>
#include <hiertag/kernels.hpp>
#include <hiertag/rng.hpp>
#include <hiertag/tape.hpp>

namespace hiertag {
namespace {

// Independent sub-streams of the run seed.
constexpr std::uint64_t kInitStream = 0xA11CE;
constexpr std::uint64_t kShuffleStream = 0xB47C4;

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch_size < 1) {
    throw BadValue("epochs and batch_size must be positive");
  }
  if (cfg.max_lr < 0.0) throw BadValue("max_lr must be nonnegative");
  if (cfg.warmup_epochs < 0) throw BadValue("warmup_epochs must be nonnegative");
  if (cfg.lambda < 0.0 || cfg.lambda > 1.0) throw BadValue("lambda must lie in [0, 1]");
  if (cfg.weight_decay < 0.0) throw BadValue("weight_decay must be nonnegative");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) {
    throw BadValue("val_fraction must lie strictly between 0 and 1");
  }
  if (cfg.encoder_hidden.empty()) throw BadValue("need at least one encoder layer");
  for (int w : cfg.encoder_hidden) {
    if (w < 1) throw BadValue("encoder widths must be positive");
  }
}

Matrix feature_column(const Dataset& ds, int row) {
  Matrix x(ds.input_dim(), 1);
  for (int c = 0; c < ds.input_dim(); ++c) x(c, 0) = ds.features(row, c);
  return x;
}

ScoreMatrices collect_scores(const HeadModel& model, const Dataset& ds, bool fill_bottom_up) {
  const Hierarchy& h = model.hierarchy();
  ScoreMatrices out;
  out.fine = Matrix(ds.n_samples(), h.n_fine());
  bool coarse_sized = false;
  for (int r = 0; r < ds.n_samples(); ++r) {
    Prediction p = model.predict(feature_column(ds, r));
    if (!p.has_coarse() && fill_bottom_up) p = aggregate_inference_bottom_up(p, h);
    for (int t = 0; t < h.n_fine(); ++t) out.fine(r, t) = p.p_fine(t, 0);
    if (p.has_coarse()) {
      if (!coarse_sized) {
        out.coarse = Matrix(ds.n_samples(), h.n_coarse());
        coarse_sized = true;
      }
      for (int c = 0; c < h.n_coarse(); ++c) out.coarse(r, c) = p.p_coarse(c, 0);
    }
  }
  return out;
}

struct LevelBce {
  double fine = 0.0;
  double coarse = std::numeric_limits<double>::quiet_NaN();
};

LevelBce eval_bce(const HeadModel& model, const Dataset& ds) {
  const ScoreMatrices s = collect_scores(model, ds, /*fill_bottom_up=*/false);
  LevelBce out;
  long observed = 0;
  out.fine = kernels::masked_bce_mean(s.fine, ds.fine_states, observed);
  if (!s.coarse.empty()) {
    out.coarse = kernels::masked_bce_mean(s.coarse, ds.coarse_states, observed);
  }
  return out;
}

std::vector<double> tune_or_default(const Matrix& scores, const StateMatrix& states) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(scores.cols()));
  for (int c = 0; c < scores.cols(); ++c) {
    std::vector<double> s;
    std::vector<int> y;
    for (int r = 0; r < scores.rows(); ++r) {
      if (states(r, c) == LabelState::Unobserved) continue;
      s.push_back(scores(r, c));
      y.push_back(states(r, c) == LabelState::Positive ? 1 : 0);
    }
    out.push_back(s.empty() ? 0.5 : optimize_threshold(s, y));
  }
  return out;
}

}  // namespace

double combined_loss(double lambda, double fine, double coarse) {
  return lambda * fine + (1.0 - lambda) * coarse;
}

double lr_at(const TrainConfig& config, int epoch) {
  if (epoch < config.warmup_epochs) {
    return config.max_lr * static_cast<double>(epoch + 1) /
           static_cast<double>(config.warmup_epochs);
  }
  return config.max_lr;
}

TrainResult train(const Dataset& train_data, const Dataset& val_data,
                  const TrainConfig& config) {
  validate(config);
  if (train_data.n_samples() == 0 || val_data.n_samples() == 0) {
    throw EmptyDataset("training and validation sets must both be non-empty");
  }
  if (!(train_data.hierarchy == val_data.hierarchy)) {
    throw HierarchyMismatch("training and validation sets use different hierarchies");
  }
  if (train_data.input_dim() != val_data.input_dim()) {
    throw ShapeMismatch("training and validation sets disagree on input_dim");
  }

  const Hierarchy& h = train_data.hierarchy;
  ModelDims dims;
  dims.input_dim = train_data.input_dim();
  dims.encoder_hidden = config.encoder_hidden;

  TrainResult res;
  res.model = HeadModel(config.variant, dims, h, mix_seed(config.seed, kInitStream));
  HeadModel& model = res.model;

  const int np = model.param_count();
  std::vector<Matrix> m_state, v_state;
  m_state.reserve(static_cast<std::size_t>(np));
  v_state.reserve(static_cast<std::size_t>(np));
  for (int p = 0; p < np; ++p) {
    m_state.emplace_back(model.param_value(p).rows(), model.param_value(p).cols());
    v_state.emplace_back(model.param_value(p).rows(), model.param_value(p).cols());
  }
  long step = 0;

  std::vector<Matrix> best_params;
  double best_val = std::numeric_limits<double>::infinity();

  const int n = train_data.n_samples();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_at(config, epoch);
    auto shuffle_rng = make_rng(mix_seed(config.seed, kShuffleStream + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (int start = 0; start < n; start += config.batch_size) {
      const int bsz = std::min(config.batch_size, n - start);

      Tape tape;
      const HeadModel::BoundParams bp = model.bind(tape);
      std::vector<Tape::Id> fines, coarses;
      fines.reserve(static_cast<std::size_t>(bsz));
      for (int j = 0; j < bsz; ++j) {
        const int r = order[static_cast<std::size_t>(start + j)];
        const HeadModel::SampleGraph sg =
            model.build_forward(tape, bp, tape.input(feature_column(train_data, r)));
        fines.push_back(sg.p_fine);
        if (sg.p_coarse >= 0) coarses.push_back(sg.p_coarse);
      }

      // Batched loss: sample columns side by side, states transposed to
      // match, one mean over the batch's observed entries per level.
      StateMatrix fine_states(h.n_fine(), bsz);
      for (int j = 0; j < bsz; ++j) {
        const int r = order[static_cast<std::size_t>(start + j)];
        for (int t = 0; t < h.n_fine(); ++t) fine_states(t, j) = train_data.fine_states(r, t);
      }
      const Tape::Id l_fine = tape.masked_bce(tape.concat_cols(fines), std::move(fine_states));
      Tape::Id root = l_fine;
      if (!coarses.empty()) {
        StateMatrix coarse_states(h.n_coarse(), bsz);
        for (int j = 0; j < bsz; ++j) {
          const int r = order[static_cast<std::size_t>(start + j)];
          for (int c = 0; c < h.n_coarse(); ++c) {
            coarse_states(c, j) = train_data.coarse_states(r, c);
          }
        }
        const Tape::Id l_coarse =
            tape.masked_bce(tape.concat_cols(coarses), std::move(coarse_states));
        root = tape.add(tape.scale(l_fine, config.lambda),
                        tape.scale(l_coarse, 1.0 - config.lambda));
      }

      tape.zero_grads();
      tape.backward(root);

      ++step;
      kernels::AdamParams ap;
      ap.lr = lr;
      ap.weight_decay = config.weight_decay;
      ap.decoupled = config.decoupled_decay;
      ap.bias_c1 = 1.0 - std::pow(ap.beta1, static_cast<double>(step));
      ap.bias_c2 = 1.0 - std::pow(ap.beta2, static_cast<double>(step));
      for (int p = 0; p < np; ++p) {
        kernels::adam_step(model.param_value(p), tape.grad(bp.ids[static_cast<std::size_t>(p)]),
                                     m_state[static_cast<std::size_t>(p)],
                                     v_state[static_cast<std::size_t>(p)], ap);
      }
    }

    const LevelBce train_bce = eval_bce(model, train_data);
    const LevelBce val_bce = eval_bce(model, val_data);
    res.trace.push_back({epoch, lr, train_bce.fine, train_bce.coarse, val_bce.fine,
                         val_bce.coarse});
    if (val_bce.fine < best_val) {
      best_val = val_bce.fine;
      res.best_epoch = epoch;
      best_params.clear();
      for (int p = 0; p < np; ++p) best_params.push_back(model.param_value(p));
    }
  }

  for (int p = 0; p < np; ++p) model.param_value(p) = best_params[static_cast<std::size_t>(p)];
  res.best_val_fine_bce = best_val;

  const ScoreMatrices val_scores = collect_scores(model, val_data, /*fill_bottom_up=*/true);
  res.fine_thresholds = tune_or_default(val_scores.fine, val_data.fine_states);
  res.coarse_thresholds = tune_or_default(val_scores.coarse, val_data.coarse_states);
  return res;
}

ScoreMatrices predict_scores(const HeadModel& model, const Dataset& dataset) {
  if (dataset.input_dim() != model.dims().input_dim) {
    throw ShapeMismatch("dataset input_dim does not match the model");
  }
  if (!(dataset.hierarchy == model.hierarchy())) {
    throw HierarchyMismatch("dataset and model use different hierarchies");
  }
  return collect_scores(model, dataset, /*fill_bottom_up=*/true);
}

GridSearchResult grid_search(const Dataset& train_data, const Dataset& val_data,
                             const TrainConfig& config) {
  if (config.lambda_grid.empty()) throw BadValue("lambda_grid must not be empty");
  GridSearchResult out;
  bool have_best = false;
  for (double lambda : config.lambda_grid) {
    TrainConfig cfg = config;
    cfg.lambda = lambda;
    TrainResult run = train(train_data, val_data, cfg);
    out.trials.push_back({lambda, run.best_val_fine_bce, run.best_epoch});
    const bool better =
        !have_best || run.best_val_fine_bce < out.best.best_val_fine_bce ||
        (run.best_val_fine_bce == out.best.best_val_fine_bce && lambda < out.best_lambda);
    if (better) {
      have_best = true;
      out.best_lambda = lambda;
      out.best = std::move(run);
    }
  }
  return out;
}

MultiSeedResult multi_seed(const Dataset& pool, const Dataset& test_data,
                           const TrainConfig& config,
                           const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw BadValue("need at least one seed");
  const int n_runs = static_cast<int>(seeds.size());
  MultiSeedResult out;
  out.runs.resize(static_cast<std::size_t>(n_runs));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n_runs));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < n_runs; ++i) {
    try {
      const std::uint64_t seed = seeds[static_cast<std::size_t>(i)];
      TrainConfig cfg = config;
      cfg.seed = seed;

      const SplitIndices split = stratified_split(pool.fine_states, cfg.val_fraction, seed);
      const Dataset tr = take_rows(pool, split.train);
      const Dataset va = take_rows(pool, split.test);

      SeedRun run;
      run.seed = seed;
      run.result = train(tr, va, cfg);
      const ScoreMatrices scores = predict_scores(run.result.model, test_data);
      run.test_report = evaluate(scores.fine, test_data.fine_states,
                                 run.result.fine_thresholds, scores.coarse,
                                 test_data.coarse_states, run.result.coarse_thresholds,
                                 test_data.hierarchy);
      out.runs[static_cast<std::size_t>(i)] = std::move(run);
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : failures) {
    if (e) std::rethrow_exception(e);
  }

  for (const SeedRun& run : out.runs) {
    out.mean_fine_macro_roc_auc += run.test_report.fine_summary.macro_roc_auc;
    out.mean_fine_macro_pr_auc += run.test_report.fine_summary.macro_pr_auc;
    out.mean_fine_macro_f1 += run.test_report.fine_summary.macro_f1;
    out.mean_coarse_macro_roc_auc += run.test_report.coarse_summary.macro_roc_auc;
    out.mean_coarse_macro_pr_auc += run.test_report.coarse_summary.macro_pr_auc;
    out.mean_coarse_macro_f1 += run.test_report.coarse_summary.macro_f1;
  }
  out.mean_fine_macro_roc_auc /= n_runs;
  out.mean_fine_macro_pr_auc /= n_runs;
  out.mean_fine_macro_f1 /= n_runs;
  out.mean_coarse_macro_roc_auc /= n_runs;
  out.mean_coarse_macro_pr_auc /= n_runs;
  out.mean_coarse_macro_f1 /= n_runs;
  return out;
}

std::string train_config_to_json(const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["variant"] = variant_name(config.variant);
  j["encoder_hidden"] = config.encoder_hidden;
  j["lambda"] = config.lambda;
  j["max_lr"] = config.max_lr;
  j["warmup_epochs"] = config.warmup_epochs;
  j["epochs"] = config.epochs;
  j["batch_size"] = config.batch_size;
  j["weight_decay"] = config.weight_decay;
  j["decoupled_decay"] = config.decoupled_decay;
  j["val_fraction"] = config.val_fraction;
  j["seed"] = config.seed;
  j["lambda_grid"] = config.lambda_grid;
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedDocument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw MalformedDocument("config must be a JSON object");

  TrainConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "variant") {
        cfg.variant = variant_from_name(value.get<std::string>());
      } else if (key == "encoder_hidden") {
        cfg.encoder_hidden = value.get<std::vector<int>>();
      } else if (key == "lambda") {
        cfg.lambda = value.get<double>();
      } else if (key == "max_lr") {
        cfg.max_lr = value.get<double>();
      } else if (key == "warmup_epochs") {
        cfg.warmup_epochs = value.get<int>();
      } else if (key == "epochs") {
        cfg.epochs = value.get<int>();
      } else if (key == "batch_size") {
        cfg.batch_size = value.get<int>();
      } else if (key == "weight_decay") {
        cfg.weight_decay = value.get<double>();
      } else if (key == "decoupled_decay") {
        cfg.decoupled_decay = value.get<bool>();
      } else if (key == "val_fraction") {
        cfg.val_fraction = value.get<double>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "lambda_grid") {
        cfg.lambda_grid = value.get<std::vector<double>>();
      } else {
        throw BadValue("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw BadValue(std::string("config value has the wrong type: ") + e.what());
  }
  return cfg;
}

}  // namespace hiertag
