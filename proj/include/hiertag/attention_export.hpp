#pragma once

// Renders a column-stochastic attention map (n_fine x n_coarse) as CSV and
// as a standalone SVG heatmap. Both outputs are deterministic text.

#include <string>

#include <hiertag/hierarchy.hpp>
#include <hiertag/matrix.hpp>

namespace hiertag {

// Header `fine_tag,<coarse tags>`; one row per fine tag, six decimals.
std::string attention_to_csv(const Matrix& attention, const Hierarchy& hierarchy);

// White-to-blue cells with percentage annotations; every cell rect carries
// a machine-readable `data-value` attribute.
std::string attention_to_svg(const Matrix& attention, const Hierarchy& hierarchy);

}  // namespace hiertag
