#include "hiertag/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hiertag::kernels {

Config& config() {
  static Config cfg;
  return cfg;
}

void set_force_serial(bool v) { config().force_serial = v; }

void set_max_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

bool use_parallel(std::size_t work) {
#ifndef _OPENMP
  (void)work;
  return false;
#else
  const Config& cfg = config();
  return !cfg.force_serial && work >= cfg.parallel_min_work;
#endif
}

namespace {
inline std::size_t sz(const Matrix& m) { return m.size(); }
}  // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  const std::size_t work = sz(a) * static_cast<std::size_t>(b.cols());
  use_parallel(work) ? par::matmul(a, b, c, accumulate) : serial::matmul(a, b, c, accumulate);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  const std::size_t work = sz(a) * static_cast<std::size_t>(b.cols());
  use_parallel(work) ? par::matmul_tn(a, b, c, accumulate)
                     : serial::matmul_tn(a, b, c, accumulate);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  const std::size_t work = sz(a) * static_cast<std::size_t>(b.rows());
  use_parallel(work) ? par::matmul_nt(a, b, c, accumulate)
                     : serial::matmul_nt(a, b, c, accumulate);
}

void add_bias_cols(Matrix& c, const Matrix& bias) {
  use_parallel(sz(c)) ? par::add_bias_cols(c, bias) : serial::add_bias_cols(c, bias);
}

void row_sum_accum(const Matrix& g, Matrix& out) {
  use_parallel(sz(g)) ? par::row_sum_accum(g, out) : serial::row_sum_accum(g, out);
}

void map_sigmoid(const Matrix& x, Matrix& y) {
  use_parallel(sz(x)) ? par::map_sigmoid(x, y) : serial::map_sigmoid(x, y);
}

void map_tanh(const Matrix& x, Matrix& y) {
  use_parallel(sz(x)) ? par::map_tanh(x, y) : serial::map_tanh(x, y);
}

void sigmoid_backward(const Matrix& y, const Matrix& dy, Matrix& dx) {
  use_parallel(sz(y)) ? par::sigmoid_backward(y, dy, dx) : serial::sigmoid_backward(y, dy, dx);
}

void tanh_backward(const Matrix& y, const Matrix& dy, Matrix& dx) {
  use_parallel(sz(y)) ? par::tanh_backward(y, dy, dx) : serial::tanh_backward(y, dy, dx);
}

void mul_ew(const Matrix& a, const Matrix& b, Matrix& c) {
  use_parallel(sz(a)) ? par::mul_ew(a, b, c) : serial::mul_ew(a, b, c);
}

void mul_ew_backward(const Matrix& b, const Matrix& dc, Matrix& da) {
  use_parallel(sz(b)) ? par::mul_ew_backward(b, dc, da) : serial::mul_ew_backward(b, dc, da);
}

void scale(const Matrix& a, double s, Matrix& c) {
  use_parallel(sz(a)) ? par::scale(a, s, c) : serial::scale(a, s, c);
}

void axpy(double s, const Matrix& x, Matrix& y) {
  use_parallel(sz(x)) ? par::axpy(s, x, y) : serial::axpy(s, x, y);
}

void add(const Matrix& a, const Matrix& b, Matrix& c) {
  use_parallel(sz(a)) ? par::add(a, b, c) : serial::add(a, b, c);
}

void softmax_cols(const Matrix& x, Matrix& y) {
  use_parallel(3 * sz(x)) ? par::softmax_cols(x, y) : serial::softmax_cols(x, y);
}

void softmax_cols_backward(const Matrix& y, const Matrix& dy, Matrix& dx) {
  use_parallel(3 * sz(y)) ? par::softmax_cols_backward(y, dy, dx)
                          : serial::softmax_cols_backward(y, dy, dx);
}

void grouped_max(const Matrix& p, const Hierarchy& h, Matrix& out, std::vector<int>& argmax,
                 std::vector<double>& margin) {
  use_parallel(sz(p)) ? par::grouped_max(p, h, out, argmax, margin)
                      : serial::grouped_max(p, h, out, argmax, margin);
}

void grouped_max_backward(const Matrix& dout, const std::vector<int>& argmax, Matrix& dp) {
  use_parallel(sz(dp)) ? par::grouped_max_backward(dout, argmax, dp)
                       : serial::grouped_max_backward(dout, argmax, dp);
}

void grouped_avg(const Matrix& p, const Hierarchy& h, Matrix& out) {
  use_parallel(sz(p)) ? par::grouped_avg(p, h, out) : serial::grouped_avg(p, h, out);
}

void grouped_avg_backward(const Matrix& dout, const Hierarchy& h, Matrix& dp) {
  use_parallel(sz(dp)) ? par::grouped_avg_backward(dout, h, dp)
                       : serial::grouped_avg_backward(dout, h, dp);
}

double masked_bce_mean(const Matrix& p, const StateMatrix& states, long& observed_count) {
  return use_parallel(sz(p)) ? par::masked_bce_mean(p, states, observed_count)
                             : serial::masked_bce_mean(p, states, observed_count);
}

void masked_bce_backward(const Matrix& p, const StateMatrix& states, double coeff, Matrix& dp) {
  use_parallel(sz(p)) ? par::masked_bce_backward(p, states, coeff, dp)
                      : serial::masked_bce_backward(p, states, coeff, dp);
}

void adam_step(Matrix& theta, const Matrix& grad, Matrix& m, Matrix& v, const AdamParams& ap) {
  use_parallel(2 * sz(theta)) ? par::adam_step(theta, grad, m, v, ap)
                              : serial::adam_step(theta, grad, m, v, ap);
}

}  // namespace hiertag::kernels
