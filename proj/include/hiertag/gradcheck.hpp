#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "hiertag/tape.hpp"

namespace hiertag {

// A freshly built graph: the scalar root plus the leaves whose gradients
// should be probed.
struct BuiltGraph {
  Tape::Id root = -1;
  std::vector<Tape::Id> checked_inputs;
};

// Builds one randomized graph instance on the given tape.
using GraphBuilder = std::function<BuiltGraph(Tape&, std::mt19937_64&)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  int trials_run = 0;
  // Instances rejected because a grouped max was within kTieMargin of a tie,
  // where the subgradient is not a two-sided derivative.
  int trials_skipped = 0;
};

// Margin below which a grouped_max instance counts as a tie and is skipped.
inline constexpr double kTieMargin = 1e-3;

// Compares every checked input's analytic gradient against central finite
// differences with the given step. The error is |analytic - fd| divided by
// max(|analytic|, |fd|, 1e-3); the floor keeps near-zero gradients from
// turning round-off into huge ratios. Throws NonScalarRoot if a builder
// returns a non-scalar root.
GradCheckReport check_gradients(const GraphBuilder& build, int trials, std::uint64_t seed,
                                double step = 1e-5);

}  // namespace hiertag
