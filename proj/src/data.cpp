#include <hiertag/data.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <hiertag/errors.hpp>
#include <hiertag/rng.hpp>

namespace hiertag {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw MissingFile("cannot open " + path);
  }
  RawTable table;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size()) {
        throw RaggedRows(path + ":" + std::to_string(line_no) + " has " +
                         std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) {
    throw HeaderMismatch(path + " is empty");
  }
  return table;
}

double parse_double(const std::string& token, const std::string& where) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw BadValue("cannot parse '" + token + "' as a number in " + where);
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

LabelState parse_state(const std::string& token, const std::string& where) {
  if (token == "1") return LabelState::Positive;
  if (token == "0") return LabelState::Negative;
  if (token == "NA") return LabelState::Unobserved;
  throw BadValue("label cell must be 0, 1 or NA, got '" + token + "' in " + where);
}

const char* state_token(LabelState s) {
  switch (s) {
    case LabelState::Positive: return "1";
    case LabelState::Negative: return "0";
    default: return "NA";
  }
}

// Row order sorted by id; ids must be unique within the table.
std::vector<std::size_t> sorted_row_order(const RawTable& table, const std::string& path) {
  std::vector<std::size_t> order(table.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.rows[a][0] < table.rows[b][0];
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (table.rows[order[i - 1]][0] == table.rows[order[i]][0]) {
      throw IdMismatch("duplicate id '" + table.rows[order[i]][0] + "' in " + path);
    }
  }
  return order;
}

}  // namespace

Dataset load_dataset(const std::string& features_path, const std::string& labels_path,
                     const Hierarchy& hierarchy) {
  const RawTable feat = read_csv(features_path);
  const RawTable labs = read_csv(labels_path);

  if (feat.header.size() < 2 || feat.header[0] != "id") {
    throw HeaderMismatch(features_path + " must start with `id` and have feature columns");
  }
  for (std::size_t i = 1; i < feat.header.size(); ++i) {
    if (feat.header[i] != "f" + std::to_string(i - 1)) {
      throw HeaderMismatch(features_path + " column " + std::to_string(i) +
                           " must be named f" + std::to_string(i - 1));
    }
  }
  if (labs.header.empty() || labs.header[0] != "id" ||
      static_cast<int>(labs.header.size()) != hierarchy.n_fine() + 1) {
    throw HeaderMismatch(labels_path + " must have `id` plus one column per fine tag");
  }
  for (int t = 0; t < hierarchy.n_fine(); ++t) {
    if (labs.header[static_cast<std::size_t>(t) + 1] != hierarchy.fine_tags()[static_cast<std::size_t>(t)]) {
      throw HeaderMismatch(labels_path + " column " + std::to_string(t + 1) + " is '" +
                           labs.header[static_cast<std::size_t>(t) + 1] + "', expected '" +
                           hierarchy.fine_tags()[static_cast<std::size_t>(t)] + "'");
    }
  }

  const std::vector<std::size_t> feat_order = sorted_row_order(feat, features_path);
  const std::vector<std::size_t> lab_order = sorted_row_order(labs, labels_path);
  if (feat.rows.size() != labs.rows.size()) {
    throw IdMismatch("feature and label files disagree on row count");
  }
  for (std::size_t i = 0; i < feat_order.size(); ++i) {
    if (feat.rows[feat_order[i]][0] != labs.rows[lab_order[i]][0]) {
      throw IdMismatch("id sets differ: '" + feat.rows[feat_order[i]][0] + "' vs '" +
                       labs.rows[lab_order[i]][0] + "'");
    }
  }
  if (feat.rows.empty()) {
    throw EmptyDataset(features_path + " has no data rows");
  }

  const int n = static_cast<int>(feat.rows.size());
  const int d = static_cast<int>(feat.header.size()) - 1;
  Dataset ds;
  ds.hierarchy = hierarchy;
  ds.ids.reserve(static_cast<std::size_t>(n));
  ds.features = Matrix(n, d);
  ds.fine_states = StateMatrix(n, hierarchy.n_fine());
  for (int r = 0; r < n; ++r) {
    const std::vector<std::string>& frow = feat.rows[feat_order[static_cast<std::size_t>(r)]];
    const std::vector<std::string>& lrow = labs.rows[lab_order[static_cast<std::size_t>(r)]];
    ds.ids.push_back(frow[0]);
    const std::string where_f = features_path + " id " + frow[0];
    const std::string where_l = labels_path + " id " + lrow[0];
    for (int c = 0; c < d; ++c) {
      ds.features(r, c) = parse_double(frow[static_cast<std::size_t>(c) + 1], where_f);
    }
    for (int t = 0; t < hierarchy.n_fine(); ++t) {
      ds.fine_states(r, t) = parse_state(lrow[static_cast<std::size_t>(t) + 1], where_l);
    }
  }
  ds.coarse_states = induce_coarse_rows(ds.fine_states, hierarchy);
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& features_path,
                  const std::string& labels_path) {
  std::ofstream feat(features_path);
  if (!feat) throw IoError("cannot write " + features_path);
  feat << "id";
  for (int c = 0; c < dataset.input_dim(); ++c) feat << ",f" << c;
  feat << '\n';
  for (int r = 0; r < dataset.n_samples(); ++r) {
    feat << dataset.ids[static_cast<std::size_t>(r)];
    for (int c = 0; c < dataset.input_dim(); ++c) {
      feat << ',' << format_double(dataset.features(r, c));
    }
    feat << '\n';
  }
  if (!feat.good()) throw IoError("failed writing " + features_path);

  std::ofstream labs(labels_path);
  if (!labs) throw IoError("cannot write " + labels_path);
  labs << "id";
  for (const std::string& tag : dataset.hierarchy.fine_tags()) labs << ',' << tag;
  labs << '\n';
  for (int r = 0; r < dataset.n_samples(); ++r) {
    labs << dataset.ids[static_cast<std::size_t>(r)];
    for (int t = 0; t < dataset.hierarchy.n_fine(); ++t) {
      labs << ',' << state_token(dataset.fine_states(r, t));
    }
    labs << '\n';
  }
  if (!labs.good()) throw IoError("failed writing " + labels_path);
}

Dataset generate_dataset(const Hierarchy& hierarchy, const SynthConfig& config) {
  if (config.n_samples < 1 || config.input_dim < 1) {
    throw BadValue("need at least one sample and one feature");
  }
  if (config.label_noise < 0.0 || config.label_noise > 1.0 || config.mask_rate < 0.0 ||
      config.mask_rate > 1.0) {
    throw BadValue("label_noise and mask_rate must lie in [0, 1]");
  }

  auto rng = make_rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Tag weights are drawn before any sample so the labeling rule depends
  // only on the seed, not on n_samples.
  Matrix weights(hierarchy.n_fine(), config.input_dim);
  for (std::size_t e = 0; e < weights.size(); ++e) weights.data()[e] = gauss(rng);

  Dataset ds;
  ds.hierarchy = hierarchy;
  ds.features = Matrix(config.n_samples, config.input_dim);
  ds.fine_states = StateMatrix(config.n_samples, hierarchy.n_fine());
  ds.ids.reserve(static_cast<std::size_t>(config.n_samples));
  char id_buf[16];
  for (int r = 0; r < config.n_samples; ++r) {
    std::snprintf(id_buf, sizeof(id_buf), "s%06d", r);
    ds.ids.emplace_back(id_buf);
    for (int c = 0; c < config.input_dim; ++c) ds.features(r, c) = gauss(rng);
    for (int t = 0; t < hierarchy.n_fine(); ++t) {
      double dot = 0.0;
      for (int c = 0; c < config.input_dim; ++c) dot += weights(t, c) * ds.features(r, c);
      bool positive = dot > 0.0;
      if (u(rng) < config.label_noise) positive = !positive;
      if (u(rng) < config.mask_rate) {
        ds.fine_states(r, t) = LabelState::Unobserved;
      } else {
        ds.fine_states(r, t) = positive ? LabelState::Positive : LabelState::Negative;
      }
    }
  }
  ds.coarse_states = induce_coarse_rows(ds.fine_states, hierarchy);
  return ds;
}

SplitIndices stratified_split(const StateMatrix& fine_states, double test_fraction,
                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw BadValue("test_fraction must lie strictly between 0 and 1");
  }
  const int n = fine_states.rows();
  const int k = fine_states.cols();
  if (n < 2) throw EmptyDataset("cannot split fewer than two samples");

  auto rng = make_rng(mix_seed(seed, 0x517A));
  enum : signed char { kUnassigned = 0, kTrain = 1, kTest = 2 };
  std::vector<signed char> assigned(static_cast<std::size_t>(n), kUnassigned);

  // Remaining per-split desires, fractional on purpose: they start at the
  // exact expected counts and each assignment subtracts one.
  double want_total[3] = {0.0, (1.0 - test_fraction) * n, test_fraction * n};
  std::vector<double> want_tag[3];
  want_tag[kTrain].assign(static_cast<std::size_t>(k), 0.0);
  want_tag[kTest].assign(static_cast<std::size_t>(k), 0.0);
  for (int t = 0; t < k; ++t) {
    long pos = 0;
    for (int r = 0; r < n; ++r) {
      if (fine_states(r, t) == LabelState::Positive) ++pos;
    }
    want_tag[kTrain][static_cast<std::size_t>(t)] = (1.0 - test_fraction) * pos;
    want_tag[kTest][static_cast<std::size_t>(t)] = test_fraction * pos;
  }

  auto pick_split = [&](int tag) -> signed char {
    double a = tag >= 0 ? want_tag[kTrain][static_cast<std::size_t>(tag)] : want_total[kTrain];
    double b = tag >= 0 ? want_tag[kTest][static_cast<std::size_t>(tag)] : want_total[kTest];
    if (a == b && tag >= 0) {  // fall back to overall capacity
      a = want_total[kTrain];
      b = want_total[kTest];
    }
    if (a > b) return kTrain;
    if (b > a) return kTest;
    return (rng() & 1) ? kTrain : kTest;
  };
  auto commit = [&](int r, signed char to) {
    assigned[static_cast<std::size_t>(r)] = to;
    want_total[to] -= 1.0;
    for (int t = 0; t < k; ++t) {
      if (fine_states(r, t) == LabelState::Positive) {
        want_tag[to][static_cast<std::size_t>(t)] -= 1.0;
      }
    }
  };

  // Rarest remaining tag first: its samples have the least slack, so they
  // get placed while both splits still have room for them.
  for (;;) {
    int best_tag = -1;
    long best_count = 0;
    for (int t = 0; t < k; ++t) {
      long count = 0;
      for (int r = 0; r < n; ++r) {
        if (assigned[static_cast<std::size_t>(r)] == kUnassigned &&
            fine_states(r, t) == LabelState::Positive) {
          ++count;
        }
      }
      if (count > 0 && (best_tag < 0 || count < best_count)) {
        best_tag = t;
        best_count = count;
      }
    }
    if (best_tag < 0) break;
    for (int r = 0; r < n; ++r) {
      if (assigned[static_cast<std::size_t>(r)] == kUnassigned &&
          fine_states(r, best_tag) == LabelState::Positive) {
        commit(r, pick_split(best_tag));
      }
    }
  }
  for (int r = 0; r < n; ++r) {
    if (assigned[static_cast<std::size_t>(r)] == kUnassigned) {
      commit(r, pick_split(-1));
    }
  }

  SplitIndices out;
  for (int r = 0; r < n; ++r) {
    (assigned[static_cast<std::size_t>(r)] == kTest ? out.test : out.train).push_back(r);
  }
  return out;
}

Dataset take_rows(const Dataset& dataset, const std::vector<int>& rows) {
  Dataset out;
  out.hierarchy = dataset.hierarchy;
  out.features = Matrix(static_cast<int>(rows.size()), dataset.input_dim());
  out.fine_states = StateMatrix(static_cast<int>(rows.size()), dataset.hierarchy.n_fine());
  out.ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    if (r < 0 || r >= dataset.n_samples()) {
      throw BadValue("row index " + std::to_string(r) + " out of range");
    }
    out.ids.push_back(dataset.ids[static_cast<std::size_t>(r)]);
    for (int c = 0; c < dataset.input_dim(); ++c) {
      out.features(static_cast<int>(i), c) = dataset.features(r, c);
    }
    for (int t = 0; t < dataset.hierarchy.n_fine(); ++t) {
      out.fine_states(static_cast<int>(i), t) = dataset.fine_states(r, t);
    }
  }
  out.coarse_states = induce_coarse_rows(out.fine_states, dataset.hierarchy);
  return out;
}

}  // namespace hiertag
