#include "hiertag/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "hiertag/rng.hpp"

namespace hiertag {

GradCheckReport check_gradients(const GraphBuilder& build, int trials, std::uint64_t seed,
                                double step) {
  GradCheckReport report;
  for (int trial = 0; trial < trials; ++trial) {
    Tape tape;
    std::mt19937_64 rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
    const BuiltGraph g = build(tape, rng);

    // Near-ties make grouped_max one-sided; the perturbation below could
    // cross the argmax boundary, so such instances are excluded.
    if (tape.min_grouped_max_margin() < kTieMargin) {
      ++report.trials_skipped;
      continue;
    }

    tape.zero_grads();
    tape.backward(g.root);

    for (Tape::Id leaf : g.checked_inputs) {
      Matrix& v = tape.mutable_value(leaf);
      const Matrix& analytic = tape.grad(leaf);
      for (std::size_t e = 0; e < v.size(); ++e) {
        const double orig = v.data()[e];
        v.data()[e] = orig + step;
        tape.forward_all();
        const double f_plus = tape.value(g.root)(0, 0);
        v.data()[e] = orig - step;
        tape.forward_all();
        const double f_minus = tape.value(g.root)(0, 0);
        v.data()[e] = orig;

        const double fd = (f_plus - f_minus) / (2.0 * step);
        const double a = analytic.data()[e];
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-3});
        report.max_rel_error = std::max(report.max_rel_error, std::abs(a - fd) / denom);
      }
    }
    ++report.trials_run;
  }
  return report;
}

}  // namespace hiertag
