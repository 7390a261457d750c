#pragma once

// Run records and artifact writers. A manifest records what a training
// run consumed (file paths plus content fingerprints) and what it
// produced, so a result can be traced back to its exact inputs. Nothing
// here includes wall-clock state: rerunning the same command yields
// byte-identical artifacts.

#include <cstdint>
#include <string>
#include <vector>

#include <hiertag/hierarchy.hpp>
#include <hiertag/trainer.hpp>

namespace hiertag {

// FNV-1a over a file's raw bytes, as 16 hex digits. Throws MissingFile.
std::string file_fingerprint(const std::string& path);

struct RunManifest {
  std::string command;  // subcommand that produced this manifest
  std::string config_json;
  std::string config_hash;  // fnv1a64 of config_json, hex
  std::string features_path;
  std::string labels_path;
  std::string hierarchy_path;
  std::string dataset_fingerprint;    // fnv1a64 over both CSVs' bytes, hex
  std::string hierarchy_fingerprint;  // hex
  std::string checkpoint_path;
  int train_rows = 0;
  int val_rows = 0;
  int best_epoch = -1;
  double best_val_fine_bce = 0.0;
};

// Fills command/config/fingerprint fields; path and result fields are the
// caller's. Reads both dataset files.
RunManifest make_manifest(const std::string& command, const std::string& config_json,
                          const std::string& features_path, const std::string& labels_path,
                          const std::string& hierarchy_path, const Hierarchy& hierarchy);

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

// One row per epoch; absent coarse losses become empty cells.
std::string trace_to_csv(const std::vector<EpochTrace>& trace);

std::string grid_to_csv(const std::vector<GridTrial>& trials);

// Decision thresholds keyed by tag name, grouped per level.
std::string thresholds_to_json(const std::vector<double>& fine,
                               const std::vector<double>& coarse, const Hierarchy& hierarchy);
// Validates tag names against `hierarchy`; missing or extra tags are errors.
void thresholds_from_json(const std::string& text, const Hierarchy& hierarchy,
                          std::vector<double>& fine, std::vector<double>& coarse);

}  // namespace hiertag
