#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hiertag/errors.hpp"

namespace hiertag {

// Per-(sample, tag) annotation state. Unobserved entries are excluded from
// every loss and every metric.
enum class LabelState : std::uint8_t { Negative = 0, Positive = 1, Unobserved = 2 };

// Rectangular block of label states. Orientation is documented at each use
// site: datasets store (samples x tags), graph losses take (tags x batch).
class StateMatrix {
 public:
  StateMatrix() = default;
  StateMatrix(int rows, int cols, LabelState init = LabelState::Unobserved)
      : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, init) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  LabelState& operator()(int r, int c) { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
  LabelState operator()(int r, int c) const { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::span<const LabelState> flat() const { return v_; }

  friend bool operator==(const StateMatrix&, const StateMatrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<LabelState> v_;
};

// Two-level tag tree: each fine tag has exactly one coarse parent, and the
// per-coarse groups partition the fine tags. Immutable once built.
class Hierarchy {
 public:
  Hierarchy() = default;

  // Parses the JSON config format: an object mapping each coarse tag name to
  // an array of fine tag names. Document order defines index order at both
  // levels. Throws MalformedDocument, DuplicateFineTag, DuplicateName,
  // EmptyGroup.
  static Hierarchy parse(const std::string& json_text);

  // Programmatic construction, same validation as parse().
  static Hierarchy from_groups(
      const std::vector<std::pair<std::string, std::vector<std::string>>>& groups);

  int n_fine() const { return static_cast<int>(fine_tags_.size()); }
  int n_coarse() const { return static_cast<int>(coarse_tags_.size()); }
  const std::vector<std::string>& fine_tags() const { return fine_tags_; }
  const std::vector<std::string>& coarse_tags() const { return coarse_tags_; }
  int parent(int fine_index) const { return parent_[fine_index]; }
  const std::vector<int>& group(int coarse_index) const { return groups_[coarse_index]; }

  // Stable content hash used to pair checkpoints and datasets.
  std::uint64_t fingerprint() const;

  // Canonical re-serialization of the config document.
  std::string to_json() const;

  friend bool operator==(const Hierarchy&, const Hierarchy&) = default;

 private:
  void validate_and_index();

  std::vector<std::string> fine_tags_;
  std::vector<std::string> coarse_tags_;
  std::vector<int> parent_;              // fine index -> coarse index
  std::vector<std::vector<int>> groups_; // coarse index -> fine indices
};

// Derives coarse states from fine states for one sample. A coarse tag is
// Positive iff some child is Positive, Negative iff every child is observed
// Negative, and Unobserved otherwise. Throws LengthMismatch.
std::vector<LabelState> induce_coarse_labels(std::span<const LabelState> fine_states,
                                             const Hierarchy& h);

// Row-wise induction for a (samples x n_fine) block; returns (samples x n_coarse).
StateMatrix induce_coarse_rows(const StateMatrix& fine_rows, const Hierarchy& h);

}  // namespace hiertag
