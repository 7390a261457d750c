// Throughput comparison between the serial reference kernels and their
// OpenMP twins, plus a bitwise agreement check at every benchmarked shape.
//
//   bench_kernels [--threads N] [--reps R]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hiertag/hierarchy.hpp"
#include "hiertag/kernels.hpp"
#include "hiertag/matrix.hpp"
#include "hiertag/rng.hpp"

using namespace hiertag;

namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Matrix m(r, c);
  for (std::size_t e = 0; e < m.size(); ++e) m.data()[e] = d(rng);
  return m;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double par_ms, bool equal) {
  std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   %s\n", name,
              serial_ms, par_ms, serial_ms / par_ms, equal ? "bit-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  int reps = 5;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" && i + 1 < argc) {
      threads = std::atoi(argv[++i]);
    } else if (a == "--reps" && i + 1 < argc) {
      reps = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: bench_kernels [--threads N] [--reps R]\n");
      return 2;
    }
  }
  kernels::set_max_threads(threads);

  std::mt19937_64 rng = make_rng(12345);

  for (int n : {64, 128, 256, 512}) {
    Matrix a = random_matrix(n, n, rng);
    Matrix b = random_matrix(n, n, rng);
    Matrix cs(n, n), cp(n, n);
    const double ts = time_ms([&] { kernels::serial::matmul(a, b, cs, false); }, reps);
    const double tp = time_ms([&] { kernels::par::matmul(a, b, cp, false); }, reps);
    char name[64];
    std::snprintf(name, sizeof(name), "matmul %dx%dx%d", n, n, n);
    report(name, ts, tp, cs == cp);
  }

  {
    const int n = 4'000'000;
    Matrix x = random_matrix(n, 1, rng);
    Matrix ys(n, 1), yp(n, 1);
    const double ts = time_ms([&] { kernels::serial::map_sigmoid(x, ys); }, reps);
    const double tp = time_ms([&] { kernels::par::map_sigmoid(x, yp); }, reps);
    report("sigmoid 4M", ts, tp, ys == yp);
  }

  {
    Matrix x = random_matrix(256, 4096, rng);
    Matrix ys(256, 4096), yp(256, 4096);
    const double ts = time_ms([&] { kernels::serial::softmax_cols(x, ys); }, reps);
    const double tp = time_ms([&] { kernels::par::softmax_cols(x, yp); }, reps);
    report("softmax_cols 256x4096", ts, tp, ys == yp);
  }

  {
    const int r = 1024, c = 1024;
    Matrix p(r, c);
    StateMatrix st(r, c);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) {
        p(i, j) = u(rng);
        const double roll = u(rng);
        st(i, j) = roll < 0.3   ? LabelState::Unobserved
                   : roll < 0.6 ? LabelState::Positive
                                : LabelState::Negative;
      }
    }
    long n_s = 0, n_p = 0;
    double vs = 0.0, vp = 0.0;
    const double ts = time_ms([&] { vs = kernels::serial::masked_bce_mean(p, st, n_s); }, reps);
    const double tp = time_ms([&] { vp = kernels::par::masked_bce_mean(p, st, n_p); }, reps);
    report("masked_bce 1024x1024", ts, tp, vs == vp && n_s == n_p);
  }

  {
    const int n = 2'000'000;
    Matrix th_s = random_matrix(n, 1, rng);
    Matrix th_p = th_s;
    Matrix g = random_matrix(n, 1, rng);
    Matrix ms(n, 1), vs(n, 1), mp(n, 1), vp(n, 1);
    kernels::AdamParams ap;
    ap.lr = 1e-3;
    ap.weight_decay = 1e-4;
    const double ts = time_ms([&] { kernels::serial::adam_step(th_s, g, ms, vs, ap); }, reps);
    const double tp = time_ms([&] { kernels::par::adam_step(th_p, g, mp, vp, ap); }, reps);
    report("adam_step 2M", ts, tp, th_s == th_p);
  }

  return 0;
}
