// Command-line front end: dataset generation and splitting, training,
// evaluation, attention export, and the multi-seed report.
//
// Exit codes: 0 success, 1 runtime failure (bad data, corrupt checkpoint,
// degenerate labels, ...), 2 usage problems (unknown flags, missing
// required options, unreadable input files).

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <hiertag/attention_export.hpp>
#include <hiertag/checkpoint.hpp>
#include <hiertag/data.hpp>
#include <hiertag/errors.hpp>
#include <hiertag/manifest.hpp>
#include <hiertag/metrics.hpp>
#include <hiertag/trainer.hpp>

namespace {

using namespace hiertag;

struct UsageError {
  std::string message;
};

void usage() {
  std::fputs(
      "hiertag <command> [options]\n"
      "\n"
      "commands:\n"
      "  generate          synthesize a dataset from a hierarchy\n"
      "    --hierarchy F --out-features F --out-labels F\n"
      "    [--n 1000] [--dim 16] [--noise 0.02] [--mask 0.3] [--seed 0]\n"
      "  split             stratified train/test split of a dataset\n"
      "    --features F --labels F --hierarchy F\n"
      "    --out-train-features F --out-train-labels F\n"
      "    --out-test-features F --out-test-labels F\n"
      "    [--test-fraction 0.2] [--seed 0]\n"
      "  train             fit one model (or a lambda grid) on a dataset\n"
      "    --features F --labels F --hierarchy F --out-checkpoint F\n"
      "    [--config F] [--variant NAME] [--lambda X] [--epochs N]\n"
      "    [--batch-size N] [--max-lr X] [--seed S] [--grid]\n"
      "    [--out-trace F] [--out-thresholds F] [--out-manifest F] [--out-grid F]\n"
      "  eval              score a dataset with a trained checkpoint\n"
      "    --checkpoint F --features F --labels F\n"
      "    [--thresholds F] [--out-json F] [--out-csv F]\n"
      "  export-attention  dump a resatt model's fine-to-coarse attention\n"
      "    --checkpoint F --features F --labels F [--id SAMPLE]\n"
      "    [--out-csv F] [--out-svg F]\n"
      "  report            multi-seed protocol: per-seed val splits, means\n"
      "    --features F --labels F --hierarchy F\n"
      "    --test-features F --test-labels F\n"
      "    [--config F] [--variant NAME] [--lambda X] [--epochs N]\n"
      "    [--seeds 8] [--out F]\n",
      stderr);
}

class Args {
 public:
  static Args parse(const std::vector<std::string>& tokens,
                    const std::set<std::string>& value_opts,
                    const std::set<std::string>& bool_opts = {}) {
    Args a;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::string& t = tokens[i];
      if (bool_opts.count(t)) {
        a.switches_.insert(t);
      } else if (value_opts.count(t)) {
        if (i + 1 >= tokens.size()) throw UsageError{t + " needs a value"};
        a.values_[t] = tokens[++i];
      } else {
        throw UsageError{"unknown option '" + t + "'"};
      }
    }
    return a;
  }

  const std::string& need(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw UsageError{"missing required option " + name};
    return it->second;
  }
  std::string get(const std::string& name, const std::string& fallback) const {
    auto it = values_.find(name);
    return it == values_.end() ? fallback : it->second;
  }
  bool has(const std::string& name) const { return values_.count(name) > 0; }
  bool on(const std::string& name) const { return switches_.count(name) > 0; }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> switches_;
};

int to_int(const std::string& s, const std::string& name) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError{name + " expects an integer, got '" + s + "'"};
  }
}

double to_double(const std::string& s, const std::string& name) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError{name + " expects a number, got '" + s + "'"};
  }
}

std::uint64_t to_seed(const std::string& s, const std::string& name) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError{name + " expects a nonnegative integer, got '" + s + "'"};
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out.good()) throw IoError("failed writing " + path);
}

int cmd_generate(const std::vector<std::string>& tokens) {
  const Args args = Args::parse(
      tokens, {"--hierarchy", "--out-features", "--out-labels", "--n", "--dim", "--noise",
               "--mask", "--seed"});
  const std::string hpath = args.need("--hierarchy");
  const Hierarchy h = Hierarchy::parse(read_text(hpath));
  SynthConfig cfg;
  cfg.n_samples = to_int(args.get("--n", "1000"), "--n");
  cfg.input_dim = to_int(args.get("--dim", "16"), "--dim");
  cfg.label_noise = to_double(args.get("--noise", "0.02"), "--noise");
  cfg.mask_rate = to_double(args.get("--mask", "0.3"), "--mask");
  cfg.seed = to_seed(args.get("--seed", "0"), "--seed");
  const Dataset ds = generate_dataset(h, cfg);
  save_dataset(ds, args.need("--out-features"), args.need("--out-labels"));
  std::printf("generated %d samples x %d features, %d fine / %d coarse tags\n",
              ds.n_samples(), ds.input_dim(), h.n_fine(), h.n_coarse());
  return 0;
}

int cmd_split(const std::vector<std::string>& tokens) {
  const Args args = Args::parse(
      tokens, {"--features", "--labels", "--hierarchy", "--out-train-features",
               "--out-train-labels", "--out-test-features", "--out-test-labels",
               "--test-fraction", "--seed"});
  const Hierarchy h = Hierarchy::parse(read_text(args.need("--hierarchy")));
  const Dataset ds = load_dataset(args.need("--features"), args.need("--labels"), h);
  const double fraction = to_double(args.get("--test-fraction", "0.2"), "--test-fraction");
  const SplitIndices split =
      stratified_split(ds.fine_states, fraction, to_seed(args.get("--seed", "0"), "--seed"));
  save_dataset(take_rows(ds, split.train), args.need("--out-train-features"),
               args.need("--out-train-labels"));
  save_dataset(take_rows(ds, split.test), args.need("--out-test-features"),
               args.need("--out-test-labels"));
  std::printf("split %d samples into %zu train / %zu test\n", ds.n_samples(),
              split.train.size(), split.test.size());
  return 0;
}

TrainConfig config_from_args(const Args& args) {
  TrainConfig cfg;
  if (args.has("--config")) cfg = train_config_from_json(read_text(args.need("--config")));
  if (args.has("--variant")) cfg.variant = variant_from_name(args.need("--variant"));
  if (args.has("--lambda")) cfg.lambda = to_double(args.need("--lambda"), "--lambda");
  if (args.has("--epochs")) cfg.epochs = to_int(args.need("--epochs"), "--epochs");
  if (args.has("--batch-size")) cfg.batch_size = to_int(args.need("--batch-size"), "--batch-size");
  if (args.has("--max-lr")) cfg.max_lr = to_double(args.need("--max-lr"), "--max-lr");
  if (args.has("--seed")) cfg.seed = to_seed(args.need("--seed"), "--seed");
  return cfg;
}

int cmd_train(const std::vector<std::string>& tokens) {
  const Args args = Args::parse(
      tokens,
      {"--features", "--labels", "--hierarchy", "--out-checkpoint", "--config", "--variant",
       "--lambda", "--epochs", "--batch-size", "--max-lr", "--seed", "--out-trace",
       "--out-thresholds", "--out-manifest", "--out-grid"},
      {"--grid"});
  const std::string fpath = args.need("--features");
  const std::string lpath = args.need("--labels");
  const std::string hpath = args.need("--hierarchy");
  const std::string ckpt_path = args.need("--out-checkpoint");

  const Hierarchy h = Hierarchy::parse(read_text(hpath));
  const Dataset pool = load_dataset(fpath, lpath, h);
  TrainConfig cfg = config_from_args(args);

  const SplitIndices split = stratified_split(pool.fine_states, cfg.val_fraction, cfg.seed);
  const Dataset tr = take_rows(pool, split.train);
  const Dataset va = take_rows(pool, split.test);

  TrainResult res;
  if (args.on("--grid")) {
    GridSearchResult grid = grid_search(tr, va, cfg);
    cfg.lambda = grid.best_lambda;
    if (args.has("--out-grid")) write_text(args.need("--out-grid"), grid_to_csv(grid.trials));
    res = std::move(grid.best);
    std::printf("grid picked lambda %.4g\n", cfg.lambda);
  } else {
    res = train(tr, va, cfg);
  }

  save_checkpoint(res.model, ckpt_path);
  if (args.has("--out-trace")) write_text(args.need("--out-trace"), trace_to_csv(res.trace));
  if (args.has("--out-thresholds")) {
    write_text(args.need("--out-thresholds"),
               thresholds_to_json(res.fine_thresholds, res.coarse_thresholds, h));
  }
  if (args.has("--out-manifest")) {
    RunManifest m = make_manifest("train", train_config_to_json(cfg), fpath, lpath, hpath, h);
    m.checkpoint_path = ckpt_path;
    m.train_rows = tr.n_samples();
    m.val_rows = va.n_samples();
    m.best_epoch = res.best_epoch;
    m.best_val_fine_bce = res.best_val_fine_bce;
    write_text(args.need("--out-manifest"), manifest_to_json(m));
  }
  std::printf("%s: best epoch %d, val fine bce %.6f, checkpoint %s\n",
              variant_name(res.model.variant()), res.best_epoch, res.best_val_fine_bce,
              ckpt_path.c_str());
  return 0;
}

int cmd_eval(const std::vector<std::string>& tokens) {
  const Args args = Args::parse(tokens, {"--checkpoint", "--features", "--labels",
                                         "--thresholds", "--out-json", "--out-csv"});
  const HeadModel model = load_checkpoint(args.need("--checkpoint"));
  const Hierarchy& h = model.hierarchy();
  const Dataset ds = load_dataset(args.need("--features"), args.need("--labels"), h);

  std::vector<double> fine_t(static_cast<std::size_t>(h.n_fine()), 0.5);
  std::vector<double> coarse_t(static_cast<std::size_t>(h.n_coarse()), 0.5);
  if (args.has("--thresholds")) {
    thresholds_from_json(read_text(args.need("--thresholds")), h, fine_t, coarse_t);
  }

  const ScoreMatrices scores = predict_scores(model, ds);
  const MetricsReport report = evaluate(scores.fine, ds.fine_states, fine_t, scores.coarse,
                                        ds.coarse_states, coarse_t, h);
  const std::string json = report_to_json(report);
  if (args.has("--out-json")) write_text(args.need("--out-json"), json);
  if (args.has("--out-csv")) write_text(args.need("--out-csv"), report_to_csv(report));
  if (!args.has("--out-json") && !args.has("--out-csv")) std::printf("%s\n", json.c_str());
  return 0;
}

int cmd_export_attention(const std::vector<std::string>& tokens) {
  const Args args = Args::parse(
      tokens, {"--checkpoint", "--features", "--labels", "--id", "--out-csv", "--out-svg"});
  if (!args.has("--out-csv") && !args.has("--out-svg")) {
    throw UsageError{"need --out-csv and/or --out-svg"};
  }
  const HeadModel model = load_checkpoint(args.need("--checkpoint"));
  if (model.variant() != Variant::ResAtt) {
    throw VariantMismatch("attention export needs a resatt checkpoint, got " +
                          std::string(variant_name(model.variant())));
  }
  const Hierarchy& h = model.hierarchy();
  const Dataset ds = load_dataset(args.need("--features"), args.need("--labels"), h);

  Matrix x(ds.input_dim(), 1);
  auto sample_attention = [&](int row) {
    for (int c = 0; c < ds.input_dim(); ++c) x(c, 0) = ds.features(row, c);
    return model.predict(x).attention;
  };

  Matrix att(h.n_fine(), h.n_coarse());
  if (args.has("--id")) {
    const std::string& id = args.need("--id");
    const auto it = std::lower_bound(ds.ids.begin(), ds.ids.end(), id);
    if (it == ds.ids.end() || *it != id) throw BadValue("no sample with id '" + id + "'");
    att = sample_attention(static_cast<int>(it - ds.ids.begin()));
  } else {
    // Mean over samples; each column still sums to one.
    for (int r = 0; r < ds.n_samples(); ++r) {
      const Matrix a = sample_attention(r);
      for (std::size_t e = 0; e < att.size(); ++e) att.data()[e] += a.data()[e];
    }
    for (std::size_t e = 0; e < att.size(); ++e) att.data()[e] /= ds.n_samples();
  }

  if (args.has("--out-csv")) write_text(args.need("--out-csv"), attention_to_csv(att, h));
  if (args.has("--out-svg")) write_text(args.need("--out-svg"), attention_to_svg(att, h));
  return 0;
}

int cmd_report(const std::vector<std::string>& tokens) {
  const Args args = Args::parse(
      tokens, {"--features", "--labels", "--hierarchy", "--test-features", "--test-labels",
               "--config", "--variant", "--lambda", "--epochs", "--batch-size", "--max-lr",
               "--seeds", "--out"});
  const Hierarchy h = Hierarchy::parse(read_text(args.need("--hierarchy")));
  const Dataset pool = load_dataset(args.need("--features"), args.need("--labels"), h);
  const Dataset test =
      load_dataset(args.need("--test-features"), args.need("--test-labels"), h);
  const TrainConfig cfg = config_from_args(args);

  const int n_seeds = to_int(args.get("--seeds", "8"), "--seeds");
  if (n_seeds < 1) throw UsageError{"--seeds must be at least 1"};
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_seeds));
  for (int i = 0; i < n_seeds; ++i) seeds[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(i);

  const MultiSeedResult ms = multi_seed(pool, test, cfg, seeds);

  nlohmann::ordered_json j;
  j["config"] = nlohmann::ordered_json::parse(train_config_to_json(cfg));
  j["runs"] = nlohmann::ordered_json::array();
  for (const SeedRun& run : ms.runs) {
    nlohmann::ordered_json r;
    r["seed"] = run.seed;
    r["best_epoch"] = run.result.best_epoch;
    r["best_val_fine_bce"] = run.result.best_val_fine_bce;
    r["test"] = {{"fine_macro_roc_auc", run.test_report.fine_summary.macro_roc_auc},
                 {"fine_macro_pr_auc", run.test_report.fine_summary.macro_pr_auc},
                 {"fine_macro_f1", run.test_report.fine_summary.macro_f1},
                 {"coarse_macro_roc_auc", run.test_report.coarse_summary.macro_roc_auc},
                 {"coarse_macro_pr_auc", run.test_report.coarse_summary.macro_pr_auc},
                 {"coarse_macro_f1", run.test_report.coarse_summary.macro_f1}};
    j["runs"].push_back(std::move(r));
  }
  j["mean"] = {{"fine_macro_roc_auc", ms.mean_fine_macro_roc_auc},
               {"fine_macro_pr_auc", ms.mean_fine_macro_pr_auc},
               {"fine_macro_f1", ms.mean_fine_macro_f1},
               {"coarse_macro_roc_auc", ms.mean_coarse_macro_roc_auc},
               {"coarse_macro_pr_auc", ms.mean_coarse_macro_pr_auc},
               {"coarse_macro_f1", ms.mean_coarse_macro_f1}};
  const std::string text = j.dump(2);
  if (args.has("--out")) {
    write_text(args.need("--out"), text);
  } else {
    std::printf("%s\n", text.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> tokens(argv + 1, argv + argc);
  if (tokens.empty()) {
    usage();
    return 2;
  }
  const std::string cmd = tokens.front();
  tokens.erase(tokens.begin());
  if (cmd == "--help" || cmd == "help") {
    usage();
    return 0;
  }
  try {
    if (cmd == "generate") return cmd_generate(tokens);
    if (cmd == "split") return cmd_split(tokens);
    if (cmd == "train") return cmd_train(tokens);
    if (cmd == "eval") return cmd_eval(tokens);
    if (cmd == "export-attention") return cmd_export_attention(tokens);
    if (cmd == "report") return cmd_report(tokens);
    std::fprintf(stderr, "unknown command '%s'\n\n", cmd.c_str());
    usage();
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.message.c_str());
    return 2;
  } catch (const MissingFile& e) {
    std::fprintf(stderr, "missing file: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
