#include <algorithm>
#include <cmath>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hiertag/attention_export.hpp"
#include "hiertag/errors.hpp"
#include "hiertag/manifest.hpp"

using namespace hiertag;
namespace fs = std::filesystem;

namespace {

const Hierarchy& tree() {
  static const Hierarchy h = Hierarchy::from_groups({{"g0", {"a", "b"}}, {"g1", {"c"}}});
  return h;
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "hiertag_export_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("file fingerprints depend only on content") {
  const fs::path a = scratch() / "a.txt";
  const fs::path b = scratch() / "b.txt";
  write_file(a, "same bytes");
  write_file(b, "same bytes");
  CHECK(file_fingerprint(a.string()) == file_fingerprint(b.string()));
  write_file(b, "same bytes!");
  CHECK(file_fingerprint(a.string()) != file_fingerprint(b.string()));
  CHECK(file_fingerprint(a.string()).size() == 16);
  CHECK_THROWS_AS(file_fingerprint((scratch() / "absent").string()), MissingFile);
}

TEST_CASE("manifests embed input fingerprints and round-trip") {
  const fs::path f = scratch() / "feat.csv";
  const fs::path l = scratch() / "lab.csv";
  write_file(f, "id,f0\nx,1\n");
  write_file(l, "id,a,b,c\nx,1,0,NA\n");

  RunManifest m = make_manifest("train", R"({"epochs": 2})", f.string(), l.string(),
                                "configs/h.json", tree());
  m.checkpoint_path = "model.ckpt";
  m.train_rows = 34;
  m.val_rows = 6;
  m.best_epoch = 1;
  m.best_val_fine_bce = 0.625;

  CHECK(m.config_hash.size() == 16);
  CHECK(m.dataset_fingerprint.size() == 16);
  CHECK(m.hierarchy_fingerprint.size() == 16);

  // Same inputs, same manifest; touched labels, new fingerprint.
  const RunManifest again =
      make_manifest("train", R"({"epochs": 2})", f.string(), l.string(), "configs/h.json", tree());
  CHECK(again.dataset_fingerprint == m.dataset_fingerprint);
  write_file(l, "id,a,b,c\nx,1,0,0\n");
  const RunManifest touched =
      make_manifest("train", R"({"epochs": 2})", f.string(), l.string(), "configs/h.json", tree());
  CHECK(touched.dataset_fingerprint != m.dataset_fingerprint);

  const RunManifest back = manifest_from_json(manifest_to_json(m));
  CHECK(back.command == m.command);
  CHECK(back.config_hash == m.config_hash);
  CHECK(back.dataset_fingerprint == m.dataset_fingerprint);
  CHECK(back.checkpoint_path == m.checkpoint_path);
  CHECK(back.train_rows == 34);
  CHECK(back.val_rows == 6);
  CHECK(back.best_epoch == 1);
  CHECK(back.best_val_fine_bce == 0.625);

  CHECK_THROWS_AS(manifest_from_json("nope"), MalformedDocument);
  CHECK_THROWS_AS(manifest_from_json("{}"), BadValue);
}

TEST_CASE("trace CSV leaves absent coarse losses empty") {
  std::vector<EpochTrace> trace;
  trace.push_back({0, 2e-5, 0.7, std::nan(""), 0.71, std::nan("")});
  trace.push_back({1, 4e-5, 0.6, 0.5, 0.62, 0.52});
  const std::string csv = trace_to_csv(trace);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,lr,train_fine_bce,train_coarse_bce,val_fine_bce,val_coarse_bce");
  std::getline(in, line);
  CHECK(line == "0,2e-05,0.7,,0.71,");
  std::getline(in, line);
  CHECK(line == "1,4e-05,0.6,0.5,0.62,0.52");
}

TEST_CASE("grid CSV lists one row per trial") {
  const std::string csv = grid_to_csv({{0.7, 0.61, 3}, {0.8, 0.6, 5}});
  CHECK(csv == "lambda,val_fine_bce,best_epoch\n0.7,0.61,3\n0.8,0.6,5\n");
}

TEST_CASE("thresholds round-trip by tag name") {
  std::vector<double> fine{0.1, 0.2, 0.3};
  std::vector<double> coarse{0.4, 0.5};
  const std::string text = thresholds_to_json(fine, coarse, tree());
  std::vector<double> fine_back, coarse_back;
  thresholds_from_json(text, tree(), fine_back, coarse_back);
  CHECK(fine_back == fine);
  CHECK(coarse_back == coarse);

  CHECK_THROWS_AS(thresholds_to_json({0.1}, coarse, tree()), LengthMismatch);
  CHECK_THROWS_AS(thresholds_from_json("{}", tree(), fine_back, coarse_back),
                  HierarchyMismatch);
  const Hierarchy other = Hierarchy::from_groups({{"g0", {"x", "y"}}, {"g1", {"z"}}});
  CHECK_THROWS_AS(thresholds_from_json(text, other, fine_back, coarse_back),
                  HierarchyMismatch);
}

TEST_CASE("attention CSV carries tag names and six-decimal cells") {
  Matrix att(3, 2);
  att(0, 0) = 1.0;
  att(1, 1) = 0.25;
  att(2, 1) = 0.75;
  const std::string csv = attention_to_csv(att, tree());
  CHECK(csv ==
        "fine_tag,g0,g1\n"
        "a,1.000000,0.000000\n"
        "b,0.000000,0.250000\n"
        "c,0.000000,0.750000\n");
  CHECK_THROWS_AS(attention_to_csv(Matrix(2, 2), tree()), ShapeMismatch);
}

TEST_CASE("attention SVG has one annotated cell per entry") {
  Matrix att(3, 2);
  att(0, 0) = 0.5;
  att(1, 0) = 0.5;
  att(2, 0) = 0.0;
  att(0, 1) = 0.123456;
  att(1, 1) = 0.6;
  att(2, 1) = 0.276544;
  const std::string svg = attention_to_svg(att, tree());
  CHECK(svg.rfind("<svg", 0) == 0);
  auto count = [&](const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = svg.find(needle, pos)) != std::string::npos) {
      ++n;
      pos += needle.size();
    }
    return n;
  };
  CHECK(count("data-value=") == 6);
  CHECK(count("%</text>") == 6);
  CHECK(svg.find("data-value=\"0.123456\"") != std::string::npos);
  for (const char* tag : {">a<", ">b<", ">c<", ">g0<", ">g1<"}) {
    CHECK(svg.find(tag) != std::string::npos);
  }
  CHECK_THROWS_AS(attention_to_svg(Matrix(3, 3), tree()), ShapeMismatch);
}
