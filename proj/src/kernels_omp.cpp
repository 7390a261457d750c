// OpenMP twins of the reference kernels. Parallelism is only ever over an
// outer dimension whose iterations touch disjoint outputs; the per-output
// accumulation order matches kernels_serial.cpp exactly, so results are
// bit-identical at any thread count.

#include <cmath>
#include <limits>

#include "hiertag/kernels.hpp"

namespace hiertag::kernels::par {

using std::int64_t;

void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    double* ci = c.data() + static_cast<std::size_t>(i) * n;
    if (!accumulate) {
      for (int j = 0; j < n; ++j) ci[j] = 0.0;
    }
    for (int kk = 0; kk < k; ++kk) {
      const double aik = a(static_cast<int>(i), kk);
      const double* bk = b.data() + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  const int k = a.rows(), m = a.cols(), n = b.cols();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    double* ci = c.data() + static_cast<std::size_t>(i) * n;
    if (!accumulate) {
      for (int j = 0; j < n; ++j) ci[j] = 0.0;
    }
    for (int kk = 0; kk < k; ++kk) {
      const double aki = a(kk, static_cast<int>(i));
      const double* bk = b.data() + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  const int m = a.rows(), k = a.cols(), n = b.rows();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a.data() + static_cast<std::size_t>(i) * k;
    double* ci = c.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b.data() + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
      ci[j] = accumulate ? ci[j] + acc : acc;
    }
  }
}

void add_bias_cols(Matrix& c, const Matrix& bias) {
  const int m = c.rows(), n = c.cols();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const double bi = bias(static_cast<int>(i), 0);
    double* ci = c.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) ci[j] += bi;
  }
}

void row_sum_accum(const Matrix& g, Matrix& out) {
  const int m = g.rows(), n = g.cols();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const double* gi = g.data() + static_cast<std::size_t>(i) * n;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += gi[j];
    out(static_cast<int>(i), 0) += acc;
  }
}

void map_sigmoid(const Matrix& x, Matrix& y) {
  const int64_t n = static_cast<int64_t>(x.size());
  const double* xd = x.data();
  double* yd = y.data();
#pragma omp parallel for schedule(static)
  for (int64_t e = 0; e < n; ++e) yd[e] = sigmoid_scalar(xd[e]);
}

void map_tanh(const Matrix& x, Matrix& y) {
  const int64_t n = static_cast<int64_t>(x.size());
  const double* xd = x.data();
  double* yd = y.data();
#pragma omp parallel for schedule(static)
  for (int64_t e = 0; e < n; ++e) yd[e] = std::tanh(xd[e]);
}

void sigmoid_backward(const Matrix& y, const Matrix& dy, Matrix& dx) {
  const int64_t n = static_cast<int64_t>(y.size());
  const double* yd = y.data();
  const double* gd = dy.data();
  double* xd = dx.data();
#pragma omp parallel for schedule(static)
  for (int64_t e = 0; e < n; ++e) xd[e] += yd[e] * (1.0 - yd[e]) * gd[e];
}

void tanh_backward(const Matrix& y, const Matrix& dy, Matrix& dx) {
  const int64_t n = static_cast<int64_t>(y.size());
  const double* yd = y.data();
  const double* gd = dy.data();
  double* xd = dx.data();
#pragma omp parallel for schedule(static)
  for (int64_t e = 0; e < n; ++e) xd[e] += (1.0 - yd[e] * yd[e]) * gd[e];
}

void mul_ew(const Matrix& a, const Matrix& b, Matrix& c) {
  const int64_t n = static_cast<int64_t>(a.size());
#pragma omp parallel for schedule(static)
  for (int64_t e = 0; e < n; ++e) c.data()[e] = a.data()[e] * b.data()[e];
}

void mul_ew_backward(const Matrix& b, const Matrix& dc, Matrix& da) {
  const int64_t n = static_cast<int64_t>(b.size());
#pragma omp parallel for schedule(static)
  for (int64_t e = 0; e < n; ++e) da.data()[e] += b.data()[e] * dc.data()[e];
}

void scale(const Matrix& a, double s, Matrix& c) {
  const int64_t n = static_cast<int64_t>(a.size());
#pragma omp parallel for schedule(static)
  for (int64_t e = 0; e < n; ++e) c.data()[e] = s * a.data()[e];
}

void axpy(double s, const Matrix& x, Matrix& y) {
  const int64_t n = static_cast<int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (int64_t e = 0; e < n; ++e) y.data()[e] += s * x.data()[e];
}

void add(const Matrix& a, const Matrix& b, Matrix& c) {
  const int64_t n = static_cast<int64_t>(a.size());
#pragma omp parallel for schedule(static)
  for (int64_t e = 0; e < n; ++e) c.data()[e] = a.data()[e] + b.data()[e];
}

void softmax_cols(const Matrix& x, Matrix& y) {
  const int r = x.rows(), c = x.cols();
#pragma omp parallel for schedule(static)
  for (int64_t j = 0; j < c; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < r; ++i) mx = std::max(mx, x(i, static_cast<int>(j)));
    double sum = 0.0;
    for (int i = 0; i < r; ++i) {
      const double e = std::exp(x(i, static_cast<int>(j)) - mx);
      y(i, static_cast<int>(j)) = e;
      sum += e;
    }
    for (int i = 0; i < r; ++i) y(i, static_cast<int>(j)) /= sum;
  }
}

void softmax_cols_backward(const Matrix& y, const Matrix& dy, Matrix& dx) {
  const int r = y.rows(), c = y.cols();
#pragma omp parallel for schedule(static)
  for (int64_t j = 0; j < c; ++j) {
    double dot = 0.0;
    for (int i = 0; i < r; ++i) dot += y(i, static_cast<int>(j)) * dy(i, static_cast<int>(j));
    for (int i = 0; i < r; ++i) {
      dx(i, static_cast<int>(j)) += y(i, static_cast<int>(j)) * (dy(i, static_cast<int>(j)) - dot);
    }
  }
}

void grouped_max(const Matrix& p, const Hierarchy& h, Matrix& out, std::vector<int>& argmax,
                 std::vector<double>& margin) {
  const int nc = h.n_coarse(), n = p.cols();
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    const auto& g = h.group(static_cast<int>(c));
    for (int j = 0; j < n; ++j) {
      int best = g[0];
      double best_v = p(g[0], j);
      double second = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 1; t < g.size(); ++t) {
        const double v = p(g[t], j);
        if (v > best_v) {
          second = best_v;
          best_v = v;
          best = g[t];
        } else if (v > second) {
          second = v;
        }
      }
      out(static_cast<int>(c), j) = best_v;
      argmax[static_cast<std::size_t>(c) * n + j] = best;
      margin[static_cast<std::size_t>(c) * n + j] = best_v - second;
    }
  }
}

void grouped_max_backward(const Matrix& dout, const std::vector<int>& argmax, Matrix& dp) {
  const int nc = dout.rows(), n = dout.cols();
  // Groups partition the fine rows, so distinct c write distinct rows of dp.
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    for (int j = 0; j < n; ++j) {
      dp(argmax[static_cast<std::size_t>(c) * n + j], j) += dout(static_cast<int>(c), j);
    }
  }
}

void grouped_avg(const Matrix& p, const Hierarchy& h, Matrix& out) {
  const int nc = h.n_coarse(), n = p.cols();
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    const auto& g = h.group(static_cast<int>(c));
    const double inv = 1.0 / static_cast<double>(g.size());
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int idx : g) acc += p(idx, j);
      out(static_cast<int>(c), j) = acc * inv;
    }
  }
}

void grouped_avg_backward(const Matrix& dout, const Hierarchy& h, Matrix& dp) {
  const int nc = dout.rows(), n = dout.cols();
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    const auto& g = h.group(static_cast<int>(c));
    const double inv = 1.0 / static_cast<double>(g.size());
    for (int j = 0; j < n; ++j) {
      const double share = dout(static_cast<int>(c), j) * inv;
      for (int idx : g) dp(idx, j) += share;
    }
  }
}

double masked_bce_mean(const Matrix& p, const StateMatrix& states, long& observed_count) {
  const int r = p.rows(), c = p.cols();
  std::vector<double> partial(static_cast<std::size_t>(r), 0.0);
  std::vector<long> counts(static_cast<std::size_t>(r), 0);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < r; ++i) {
    double acc = 0.0;
    long cnt = 0;
    for (int j = 0; j < c; ++j) {
      const LabelState s = states(static_cast<int>(i), j);
      if (s == LabelState::Unobserved) continue;
      acc += bce_term(p(static_cast<int>(i), j), s == LabelState::Positive);
      ++cnt;
    }
    partial[i] = acc;
    counts[i] = cnt;
  }
  // Combine in row order so the total matches the serial kernel bitwise.
  double sum = 0.0;
  long total = 0;
  for (int i = 0; i < r; ++i) {
    sum += partial[i];
    total += counts[i];
  }
  observed_count = total;
  return total > 0 ? sum / static_cast<double>(total) : 0.0;
}

void masked_bce_backward(const Matrix& p, const StateMatrix& states, double coeff, Matrix& dp) {
  const int r = p.rows(), c = p.cols();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      const LabelState s = states(static_cast<int>(i), j);
      if (s == LabelState::Unobserved) continue;
      dp(static_cast<int>(i), j) += coeff * bce_term_grad(p(static_cast<int>(i), j), s == LabelState::Positive);
    }
  }
}

void adam_step(Matrix& theta, const Matrix& grad, Matrix& m, Matrix& v, const AdamParams& ap) {
  const int64_t n = static_cast<int64_t>(theta.size());
  double* th = theta.data();
  const double* gr = grad.data();
  double* md = m.data();
  double* vd = v.data();
#pragma omp parallel for schedule(static)
  for (int64_t e = 0; e < n; ++e) {
    double g = gr[e];
    if (!ap.decoupled) g += ap.weight_decay * th[e];
    md[e] = ap.beta1 * md[e] + (1.0 - ap.beta1) * g;
    vd[e] = ap.beta2 * vd[e] + (1.0 - ap.beta2) * g * g;
    const double mhat = md[e] / ap.bias_c1;
    const double vhat = vd[e] / ap.bias_c2;
    double step = mhat / (std::sqrt(vhat) + ap.eps);
    if (ap.decoupled) step += ap.weight_decay * th[e];
    th[e] -= ap.lr * step;
  }
}

}  // namespace hiertag::kernels::par
