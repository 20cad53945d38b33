#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "lvfa/model.hpp"
#include "lvfa/util.hpp"

namespace lvfa {

// Why integration lands where it does. The generic core only reports Reached
// or Stopped (a caller predicate fired); the population wrapper refines
// Stopped into Escaped (caller-requested norm threshold) or Diverged
// (divergence guard).
enum class StopReason { Reached, Stopped, Escaped, Diverged };

struct IntegrateOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_max = 1.0;   // also bounds the dense-output resolution
  double h_init = 0.0;  // 0 -> automatic
  long max_steps = 2'000'000;

  // Fixed-step mode: no error control, |h| = h_fixed exactly (final step
  // shortened to hit the endpoint).
  bool fixed_step = false;
  double h_fixed = 0.0;

  // Only grid points / dense steps with t >= record_from are stored
  // (forward runs); lets long pull-back transients run without storage.
  double record_from = -std::numeric_limits<double>::infinity();

  // Population wrapper only: stop once max_i u_i reaches this value.
  std::optional<double> escape_norm;
  // Population wrapper only: divergence guard threshold on max_i u_i.
  double blowup_threshold = 1e12;
};

// One accepted step's interpolation data on [t0, t0+h] (h is signed).
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec, 5> rcont;
  Vec eval(double t) const;  // fifth-order interpolant
};

struct OdeSolution {
  std::vector<double> t;  // strictly increasing, regardless of direction
  std::vector<Vec> y;
  std::vector<DenseStep> steps;  // sorted by interval start
  StopReason reason = StopReason::Reached;
  double stop_time = 0.0;  // where the predicate fired; last t otherwise
  long accepted = 0, rejected = 0;

  Vec eval(double tq) const;  // dense interpolation inside the stored range
  double t_front() const { return t.front(); }
  double t_back() const { return t.back(); }
};

using OdeRhs = std::function<Vec(double, const Vec&)>;
// Componentwise error scales s_i given both endpoint states of a trial step;
// the controller accepts when rms(e_i/s_i) <= 1.
using ErrorScale = std::function<Vec(double, const Vec&, const Vec&)>;
// Returns true when integration should stop; the crossing is located by
// bisection on the dense output.
using StopPredicate = std::function<bool(double, const Vec&)>;

// Dormand-Prince 5(4) with PI step control and continuous output. Integrates
// from t0 to t1 in either direction. Throws NumericError on step-size
// underflow or step-count overflow.
OdeSolution integrate(const OdeRhs& f, double t0, const Vec& y0, double t1,
                      const IntegrateOptions& opts = {}, const ErrorScale& scale = nullptr,
                      const StopPredicate& stop = nullptr);

// Linear matrix problem M' = J(t) M, returning M(t1). Used for propagators.
Mat integrate_matrix(const std::function<Mat(double)>& jac, double t0, const Mat& M0,
                     double t1, const IntegrateOptions& opts = {});

// Population trajectory in full coordinates. Components that start at exact
// zero stay exactly zero; positive components are integrated as logarithms,
// with the error controlled in the original coordinates.
struct LvSolution {
  std::vector<double> t;  // strictly increasing
  std::vector<Vec> u;     // full-length, absent components exactly 0
  StopReason reason = StopReason::Reached;
  double stop_time = 0.0;
  SupportSet support;  // support of the initial state

  Vec eval(double tq) const;
  double t_front() const { return t.front(); }
  double t_back() const { return t.back(); }

  // interpolation internals (log coordinates of the present components)
  std::vector<DenseStep> steps;
  int full_n = 0;
};

LvSolution lv_integrate(const SystemSpec& spec, double t0, const Vec& u0, double t1,
                        const IntegrateOptions& opts = {});

}  // namespace lvfa
