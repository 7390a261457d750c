#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "hiertag/hierarchy.hpp"
#include "hiertag/matrix.hpp"

// Dense kernels behind the autodiff tape. Every kernel exists twice with an
// identical contract: kernels::serial is the reference implementation,
// kernels::par distributes the independent outer loop with OpenMP. Both
// produce bit-identical results because each output element is accumulated
// in the same order; tests assert exact equality and tools/bench_kernels
// compares throughput. The unqualified wrappers dispatch by work size.
namespace hiertag::kernels {

// Numerically stable logistic function, safe for |x| up to ~700.
inline double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline constexpr double kBceEps = 1e-7;

// One binary cross-entropy term with probability clamping. Shared by the
// graph op and the plain validation-loss path so both use the same formula.
inline double bce_term(double p, bool positive) {
  double q = p;
  if (q < kBceEps) q = kBceEps;
  if (q > 1.0 - kBceEps) q = 1.0 - kBceEps;
  return positive ? -std::log(q) : -std::log(1.0 - q);
}

// d bce_term / d p. Zero outside the clamp interval.
inline double bce_term_grad(double p, bool positive) {
  if (p < kBceEps || p > 1.0 - kBceEps) return 0.0;
  return positive ? -1.0 / p : 1.0 / (1.0 - p);
}

struct Config {
  bool force_serial = false;
  // Minimum per-call flop estimate before the parallel path is taken.
  std::size_t parallel_min_work = 1 << 15;
};

Config& config();
void set_force_serial(bool v);
void set_max_threads(int n);  // 0 keeps the OpenMP default
bool use_parallel(std::size_t work);

struct AdamParams {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool decoupled = false;
  double bias_c1 = 1.0;  // 1 - beta1^t
  double bias_c2 = 1.0;  // 1 - beta2^t
};

#define HIERTAG_KERNEL_SET                                                                \
  /* c = a.b (accumulate: c += a.b) */                                                    \
  void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);              \
  /* c = a^T.b */                                                                         \
  void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);           \
  /* c = a.b^T */                                                                         \
  void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);           \
  /* c(:,j) += bias for every column j */                                                 \
  void add_bias_cols(Matrix& c, const Matrix& bias);                                      \
  /* out += row sums of g (bias gradient of add_bias_cols) */                             \
  void row_sum_accum(const Matrix& g, Matrix& out);                                       \
  void map_sigmoid(const Matrix& x, Matrix& y);                                           \
  void map_tanh(const Matrix& x, Matrix& y);                                              \
  /* dx += y*(1-y)*dy, with y = sigmoid(x) */                                             \
  void sigmoid_backward(const Matrix& y, const Matrix& dy, Matrix& dx);                   \
  /* dx += (1-y^2)*dy */                                                                  \
  void tanh_backward(const Matrix& y, const Matrix& dy, Matrix& dx);                      \
  void mul_ew(const Matrix& a, const Matrix& b, Matrix& c);                               \
  /* da += b*dc (hadamard product backward, one side) */                                  \
  void mul_ew_backward(const Matrix& b, const Matrix& dc, Matrix& da);                    \
  void scale(const Matrix& a, double s, Matrix& c);                                       \
  /* y += s*x */                                                                          \
  void axpy(double s, const Matrix& x, Matrix& y);                                        \
  void add(const Matrix& a, const Matrix& b, Matrix& c);                                  \
  /* column-wise softmax with max subtraction */                                          \
  void softmax_cols(const Matrix& x, Matrix& y);                                          \
  /* dx(:,j) += y(:,j)*(dy(:,j) - <y(:,j), dy(:,j)>) */                                   \
  void softmax_cols_backward(const Matrix& y, const Matrix& dy, Matrix& dx);              \
  /* out(c,j) = max over group(c) of p(i,j); argmax records the winning row,  */          \
  /* ties resolved to the lowest index; margin records max - runner_up        */          \
  void grouped_max(const Matrix& p, const Hierarchy& h, Matrix& out,                      \
                   std::vector<int>& argmax, std::vector<double>& margin);                \
  void grouped_max_backward(const Matrix& dout, const std::vector<int>& argmax,           \
                            Matrix& dp);                                                  \
  void grouped_avg(const Matrix& p, const Hierarchy& h, Matrix& out);                     \
  void grouped_avg_backward(const Matrix& dout, const Hierarchy& h, Matrix& dp);          \
  /* mean BCE over observed entries; 0 when nothing is observed. Summation    */          \
  /* runs per row first, row partials combined in row order.                  */          \
  double masked_bce_mean(const Matrix& p, const StateMatrix& states,                      \
                         long& observed_count);                                           \
  /* dp += (upstream/observed_count) * d bce_term/dp at observed entries */               \
  void masked_bce_backward(const Matrix& p, const StateMatrix& states, double coeff,      \
                           Matrix& dp);                                                   \
  void adam_step(Matrix& theta, const Matrix& grad, Matrix& m, Matrix& v,                 \
                 const AdamParams& ap);

namespace serial {
HIERTAG_KERNEL_SET
}
namespace par {
HIERTAG_KERNEL_SET
}
// Dispatching wrappers used by the tape and the trainer.
HIERTAG_KERNEL_SET

#undef HIERTAG_KERNEL_SET

}  // namespace hiertag::kernels
