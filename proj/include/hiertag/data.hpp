#pragma once

// Dataset container, CSV serialization, synthetic data generation, and a
// label-aware train/test splitter.
//
// On disk a dataset is two CSV files sharing an id column:
//   features.csv  header `id,f0,...,f<d-1>`, one double per feature cell
//   labels.csv    header `id,<fine tag names in hierarchy order>`,
//                 cells `1` (positive), `0` (negative), `NA` (unobserved)
// Fields are comma-separated with no quoting, so ids and tag names must not
// contain commas. Feature values are written with shortest round-trip
// formatting and reload bit-identically. Rows may appear in any order; both
// files must contain exactly the same ids. Loading sorts rows by id, so a
// dataset's in-memory layout is independent of on-disk row order.

#include <cstdint>
#include <string>
#include <vector>

#include <hiertag/hierarchy.hpp>
#include <hiertag/matrix.hpp>

namespace hiertag {

struct Dataset {
  std::vector<std::string> ids;  // sorted, unique
  Matrix features{0, 0};         // (n_samples x input_dim)
  StateMatrix fine_states{0, 0};
  StateMatrix coarse_states{0, 0};  // always induced from fine_states
  Hierarchy hierarchy;

  int n_samples() const { return features.rows(); }
  int input_dim() const { return features.cols(); }
};

// Reads the two CSVs and induces coarse labels. The labels header must name
// the hierarchy's fine tags in order. Throws MissingFile, HeaderMismatch,
// RaggedRows, BadValue, IdMismatch (ids duplicated or differing between the
// two files), or EmptyDataset.
Dataset load_dataset(const std::string& features_path, const std::string& labels_path,
                     const Hierarchy& hierarchy);

void save_dataset(const Dataset& dataset, const std::string& features_path,
                  const std::string& labels_path);

struct SynthConfig {
  int n_samples = 1000;
  int input_dim = 16;
  double label_noise = 0.02;  // chance of flipping a label before masking
  double mask_rate = 0.3;     // chance of hiding a fine entry
  std::uint64_t seed = 0;
};

// Linearly separable multi-label data, softened by label noise: each fine
// tag gets a random Gaussian weight vector, each sample a random Gaussian
// feature vector, and the clean label is the sign of their dot product.
// Entries are then hidden independently at `mask_rate`. Deterministic in
// the seed.
Dataset generate_dataset(const Hierarchy& hierarchy, const SynthConfig& config);

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;  // both ascending
};

// Greedy iterative stratification over observed positive labels: rarest tag
// first, each of its samples sent to the split that most needs that tag.
// Keeps per-tag positive rates close across splits even for rare tags,
// where an unstratified shuffle has high variance. Deterministic in the
// seed, which only breaks ties.
SplitIndices stratified_split(const StateMatrix& fine_states, double test_fraction,
                              std::uint64_t seed);

Dataset take_rows(const Dataset& dataset, const std::vector<int>& rows);

}  // namespace hiertag
