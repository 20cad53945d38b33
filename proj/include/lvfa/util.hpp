#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace lvfa {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Formats a double with up to 17 significant digits (round-trip exact).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Deterministic uniform generator. mt19937_64 is fully specified by the
// standard; the [0,1) mapping below avoids the implementation-defined
// std::uniform_real_distribution so streams are identical across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Componentwise draw from (0, hi_i]; never returns an exact zero.
  Vec positive_box(const Vec& hi) {
    Vec out(hi.size());
    for (Eigen::Index i = 0; i < hi.size(); ++i) out[i] = hi[i] * (1.0 - uniform());
    return out;
  }

 private:
  std::mt19937_64 eng_;
};

// Least-squares fit of y = intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of fit residuals
  int count = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  f.count = static_cast<int>(x.size());
  if (f.count < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < f.count; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double n = static_cast<double>(f.count);
  const double det = n * sxx - sx * sx;
  if (det == 0.0) return f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0;
  for (int i = 0; i < f.count; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

// Number of worker threads to use: LVFA_THREADS if set, else hardware count,
// clamped to [1, 16].
int thread_cap();

// Runs f(i) for i in [0, n). Results must be written into caller-owned slots
// so output order is independent of scheduling.
void parallel_for(int n, const std::function<void(int)>& f);

// Largest principal angle (radians) between the column spans of A and B.
double subspace_angle(const Mat& A, const Mat& B);

// Operator 2-norm.
inline double opnorm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  return M.jacobiSvd().singularValues()(0);
}

}  // namespace lvfa
