#include <hiertag/manifest.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <hiertag/errors.hpp>
#include <hiertag/hash.hpp>

namespace hiertag {
namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace

std::string file_fingerprint(const std::string& path) {
  return hex64(fnv1a64(read_bytes(path)));
}

RunManifest make_manifest(const std::string& command, const std::string& config_json,
                          const std::string& features_path, const std::string& labels_path,
                          const std::string& hierarchy_path, const Hierarchy& hierarchy) {
  RunManifest m;
  m.command = command;
  m.config_json = config_json;
  m.config_hash = hex64(fnv1a64(config_json));
  m.features_path = features_path;
  m.labels_path = labels_path;
  m.hierarchy_path = hierarchy_path;
  m.dataset_fingerprint =
      hex64(fnv1a64(read_bytes(features_path) + "\n--\n" + read_bytes(labels_path)));
  m.hierarchy_fingerprint = hex64(hierarchy.fingerprint());
  return m;
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config"] = nlohmann::ordered_json::parse(m.config_json);
  j["config_hash"] = m.config_hash;
  j["features_path"] = m.features_path;
  j["labels_path"] = m.labels_path;
  j["hierarchy_path"] = m.hierarchy_path;
  j["dataset_fingerprint"] = m.dataset_fingerprint;
  j["hierarchy_fingerprint"] = m.hierarchy_fingerprint;
  j["checkpoint_path"] = m.checkpoint_path;
  j["train_rows"] = m.train_rows;
  j["val_rows"] = m.val_rows;
  j["best_epoch"] = m.best_epoch;
  j["best_val_fine_bce"] = m.best_val_fine_bce;
  return j.dump(2);
}

RunManifest manifest_from_json(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedDocument(std::string("manifest is not valid JSON: ") + e.what());
  }
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config_json = j.at("config").dump(2);
    m.config_hash = j.at("config_hash").get<std::string>();
    m.features_path = j.at("features_path").get<std::string>();
    m.labels_path = j.at("labels_path").get<std::string>();
    m.hierarchy_path = j.at("hierarchy_path").get<std::string>();
    m.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
    m.hierarchy_fingerprint = j.at("hierarchy_fingerprint").get<std::string>();
    m.checkpoint_path = j.at("checkpoint_path").get<std::string>();
    m.train_rows = j.at("train_rows").get<int>();
    m.val_rows = j.at("val_rows").get<int>();
    m.best_epoch = j.at("best_epoch").get<int>();
    m.best_val_fine_bce = j.at("best_val_fine_bce").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw BadValue(std::string("manifest field missing or mistyped: ") + e.what());
  }
  return m;
}

std::string trace_to_csv(const std::vector<EpochTrace>& trace) {
  std::ostringstream out;
  out << "epoch,lr,train_fine_bce,train_coarse_bce,val_fine_bce,val_coarse_bce\n";
  for (const EpochTrace& t : trace) {
    out << t.epoch << ',' << format_double(t.lr) << ',' << format_double(t.train_fine_bce)
        << ',';
    if (!std::isnan(t.train_coarse_bce)) out << format_double(t.train_coarse_bce);
    out << ',' << format_double(t.val_fine_bce) << ',';
    if (!std::isnan(t.val_coarse_bce)) out << format_double(t.val_coarse_bce);
    out << '\n';
  }
  return out.str();
}

std::string grid_to_csv(const std::vector<GridTrial>& trials) {
  std::ostringstream out;
  out << "lambda,val_fine_bce,best_epoch\n";
  for (const GridTrial& t : trials) {
    out << format_double(t.lambda) << ',' << format_double(t.val_fine_bce) << ','
        << t.best_epoch << '\n';
  }
  return out.str();
}

std::string thresholds_to_json(const std::vector<double>& fine,
                               const std::vector<double>& coarse, const Hierarchy& hierarchy) {
  if (fine.size() != static_cast<std::size_t>(hierarchy.n_fine()) ||
      coarse.size() != static_cast<std::size_t>(hierarchy.n_coarse())) {
    throw LengthMismatch("need one threshold per tag on each level");
  }
  nlohmann::ordered_json j;
  for (int t = 0; t < hierarchy.n_fine(); ++t) {
    j["fine"][hierarchy.fine_tags()[static_cast<std::size_t>(t)]] =
        fine[static_cast<std::size_t>(t)];
  }
  for (int c = 0; c < hierarchy.n_coarse(); ++c) {
    j["coarse"][hierarchy.coarse_tags()[static_cast<std::size_t>(c)]] =
        coarse[static_cast<std::size_t>(c)];
  }
  return j.dump(2);
}

void thresholds_from_json(const std::string& text, const Hierarchy& hierarchy,
                          std::vector<double>& fine, std::vector<double>& coarse) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedDocument(std::string("thresholds file is not valid JSON: ") + e.what());
  }
  auto read_level = [&](const char* level, const std::vector<std::string>& tags,
                        std::vector<double>& out) {
    if (!j.contains(level) || !j[level].is_object() || j[level].size() != tags.size()) {
      throw HierarchyMismatch(std::string("thresholds '") + level +
                              "' must hold exactly the hierarchy's tags");
    }
    out.clear();
    for (const std::string& tag : tags) {
      if (!j[level].contains(tag) || !j[level][tag].is_number()) {
        throw HierarchyMismatch("thresholds missing tag '" + tag + "'");
      }
      out.push_back(j[level][tag].get<double>());
    }
  };
  read_level("fine", hierarchy.fine_tags(), fine);
  read_level("coarse", hierarchy.coarse_tags(), coarse);
}

}  // namespace hiertag
