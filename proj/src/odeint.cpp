#include "lvfa/odeint.hpp"

#include <algorithm>
#include <cmath>

#include "lvfa/errors.hpp"

namespace lvfa {
namespace {

// Dormand-Prince RK5(4)7M tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// embedded error coefficients (5th minus 4th order weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output coefficients
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

double rms(const Vec& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

Vec dense_lookup(const std::vector<DenseStep>& steps, double tq) {
  const double lo = std::min(steps.front().t0, steps.front().t0 + steps.front().h);
  const double hi_end = std::max(steps.back().t0, steps.back().t0 + steps.back().h);
  if (tq < lo - 1e-9 || tq > hi_end + 1e-9)
    throw ArgError("dense evaluation outside the stored range");
  const double tc = std::clamp(tq, lo, hi_end);
  std::size_t a = 0, b = steps.size() - 1;
  while (a < b) {
    const std::size_t mid = (a + b) / 2;
    const double end = std::max(steps[mid].t0, steps[mid].t0 + steps[mid].h);
    if (tc <= end)
      b = mid;
    else
      a = mid + 1;
  }
  return steps[a].eval(tc);
}

Vec default_scale(double atol, double rtol, const Vec& y0, const Vec& y1) {
  Vec s(y0.size());
  for (Eigen::Index i = 0; i < y0.size(); ++i)
    s[i] = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
  return s;
}

double initial_step(const OdeRhs& f, double t0, const Vec& y0, const Vec& f0, double dir,
                    double span, const IntegrateOptions& opts, const ErrorScale& scale) {
  const Vec s = scale ? scale(t0, y0, y0) : default_scale(opts.atol, opts.rtol, y0, y0);
  Vec q0(y0.size()), q1(y0.size());
  for (Eigen::Index i = 0; i < y0.size(); ++i) {
    q0[i] = y0[i] / s[i];
    q1[i] = f0[i] / s[i];
  }
  const double d0 = rms(q0), dd1 = rms(q1);
  double h0 = (d0 < 1e-10 || dd1 < 1e-10) ? 1e-6 : 0.01 * d0 / dd1;
  h0 = std::min({h0, opts.h_max, span});
  const Vec y1 = y0 + dir * h0 * f0;
  const Vec f1 = f(t0 + dir * h0, y1);
  Vec q2(y0.size());
  for (Eigen::Index i = 0; i < y0.size(); ++i) q2[i] = (f1[i] - f0[i]) / s[i];
  const double d2 = rms(q2) / h0;
  double h1;
  if (std::max(dd1, d2) <= 1e-15)
    h1 = std::max(1e-6, h0 * 1e-3);
  else
    h1 = std::pow(0.01 / std::max(dd1, d2), 0.2);
  return std::min({100.0 * h0, h1, opts.h_max, span});
}

}  // namespace

Vec DenseStep::eval(double t) const {
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  return rcont[0] + th * (rcont[1] + th1 * (rcont[2] + th * (rcont[3] + th1 * rcont[4])));
}

Vec OdeSolution::eval(double tq) const {
  if (steps.empty()) {
    if (!t.empty() && std::abs(tq - t.front()) <= 1e-9) return y.front();
    throw ArgError("no dense data stored for this solution");
  }
  return dense_lookup(steps, tq);
}

OdeSolution integrate(const OdeRhs& f, double t0, const Vec& y0, double t1,
                      const IntegrateOptions& opts, const ErrorScale& scale,
                      const StopPredicate& stop) {
  OdeSolution sol;
  const double dir = (t1 >= t0) ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);

  auto record_point = [&](double t, const Vec& y) {
    if (t >= opts.record_from) {
      sol.t.push_back(t);
      sol.y.push_back(y);
    }
  };

  if (stop && stop(t0, y0)) {
    sol.t = {t0};
    sol.y = {y0};
    sol.reason = StopReason::Stopped;
    sol.stop_time = t0;
    return sol;
  }
  record_point(t0, y0);

  double t = t0;
  Vec y = y0;
  Vec k1 = f(t, y);

  if (span == 0.0) {
    sol.stop_time = t0;
    if (sol.t.empty()) record_point(t0, y0);
    return sol;
  }

  double h;
  if (opts.fixed_step) {
    if (!(opts.h_fixed > 0.0)) throw ArgError("fixed_step requires h_fixed > 0");
    h = opts.h_fixed;
  } else {
    h = (opts.h_init > 0.0) ? std::min({opts.h_init, opts.h_max, span})
                            : initial_step(f, t0, y, k1, dir, span, opts, scale);
  }

  double facold = 1e-4;
  const double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  const double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;  // hnew/h within [0.2, 10]
  bool last = false, rejected_prev = false;
  long steps_taken = 0;

  Vec k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()), k6(y.size()), k7(y.size());

  while (!last) {
    if (++steps_taken > opts.max_steps)
      throw NumericError("step count exceeded at t=" + format_double(t));
    if (std::abs(h) <= std::abs(t) * 1e-15 + 1e-300)
      throw NumericError("step size underflow at t=" + format_double(t));
    if (std::abs(t - t0) + std::abs(h) >= span) {
      h = span - std::abs(t - t0);
      last = true;
    }
    const double hs = dir * h;

    const Vec y2 = y + hs * (a21 * k1);
    k2 = f(t + c2 * hs, y2);
    const Vec y3 = y + hs * (a31 * k1 + a32 * k2);
    k3 = f(t + c3 * hs, y3);
    const Vec y4 = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    k4 = f(t + c4 * hs, y4);
    const Vec y5 = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    k5 = f(t + c5 * hs, y5);
    const Vec y6 = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    k6 = f(t + hs, y6);
    const Vec ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    k7 = f(t + hs, ynew);

    double err = 0.0;
    if (!opts.fixed_step) {
      const Vec e = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const Vec s = scale ? scale(t, y, ynew) : default_scale(opts.atol, opts.rtol, y, ynew);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < e.size(); ++i) {
        const double q = e[i] / s[i];
        acc += q * q;
      }
      err = std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(e.size(), 1)));
    }

    if (opts.fixed_step || err <= 1.0) {
      // accept
      DenseStep ds;
      ds.t0 = t;
      ds.h = hs;
      ds.rcont[0] = y;
      const Vec dy = ynew - y;
      ds.rcont[1] = dy;
      ds.rcont[2] = hs * k1 - dy;
      ds.rcont[3] = dy - hs * k7 - ds.rcont[2];
      ds.rcont[4] = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      const double tnew = last ? t1 : t + hs;  // land exactly on the endpoint

      bool fired = stop && stop(tnew, ynew);
      if (fired) {
        double lo_t = t, hi_t = tnew;
        for (int it = 0; it < 200 && std::abs(hi_t - lo_t) > 1e-13 * std::max(1.0, std::abs(hi_t));
             ++it) {
          const double mid = 0.5 * (lo_t + hi_t);
          if (stop(mid, ds.eval(mid)))
            hi_t = mid;
          else
            lo_t = mid;
        }
        const Vec ystop = ds.eval(hi_t);
        if (std::max(ds.t0, ds.t0 + ds.h) >= opts.record_from) sol.steps.push_back(ds);
        record_point(hi_t, ystop);
        sol.reason = StopReason::Stopped;
        sol.stop_time = hi_t;
        break;
      }

      if (std::max(ds.t0, ds.t0 + ds.h) >= opts.record_from) sol.steps.push_back(ds);
      record_point(tnew, ynew);
      ++sol.accepted;
      t = tnew;
      y = ynew;
      k1 = k7;  // FSAL
      if (last) {
        sol.stop_time = t;
        break;
      }
      if (!opts.fixed_step) {
        const double fac11 = std::pow(std::max(err, 1e-32), expo1);
        double fac = fac11 / std::pow(facold, beta);
        fac = std::max(facc2, std::min(facc1, fac / safe));
        double hnew = h / fac;
        if (rejected_prev) hnew = std::min(hnew, h);
        h = std::min(hnew, opts.h_max);
        facold = std::max(err, 1e-4);
      }
      rejected_prev = false;
    } else {
      ++sol.rejected;
      const double fac11 = std::pow(err, expo1);
      h = h / std::min(facc1, fac11 / safe);
      rejected_prev = true;
      last = false;
    }
  }

  if (dir < 0) {
    std::reverse(sol.t.begin(), sol.t.end());
    std::reverse(sol.y.begin(), sol.y.end());
    std::reverse(sol.steps.begin(), sol.steps.end());
  }
  if (sol.reason == StopReason::Reached && !sol.t.empty()) sol.stop_time = dir > 0 ? sol.t.back() : sol.t.front();
  return sol;
}

Mat integrate_matrix(const std::function<Mat(double)>& jac, double t0, const Mat& M0,
                     double t1, const IntegrateOptions& opts) {
  const Eigen::Index rows = M0.rows(), cols = M0.cols();
  Vec y0(rows * cols);
  Eigen::Map<Mat>(y0.data(), rows, cols) = M0;
  auto f = [&](double t, const Vec& y) {
    const Eigen::Map<const Mat> M(y.data(), rows, cols);
    Vec dy(rows * cols);
    Eigen::Map<Mat>(dy.data(), rows, cols) = jac(t) * M;
    return dy;
  };
  IntegrateOptions o = opts;
  o.record_from = t1;  // endpoints only
  const OdeSolution sol = integrate(f, t0, y0, t1, o);
  if (sol.reason != StopReason::Reached || sol.y.empty())
    throw NumericError("matrix propagation stopped early");
  const Vec& yend = (t1 >= t0) ? sol.y.back() : sol.y.front();
  return Eigen::Map<const Mat>(yend.data(), rows, cols);
}

Vec LvSolution::eval(double tq) const {
  Vec u_full = Vec::Zero(full_n);
  const auto idx = support.present();
  if (idx.empty()) return u_full;
  if (steps.empty()) {
    if (!t.empty() && std::abs(tq - t.front()) <= 1e-9) return u.front();
    throw ArgError("no dense data stored for this trajectory");
  }
  const Vec v = dense_lookup(steps, tq);
  for (std::size_t r = 0; r < idx.size(); ++r) u_full[idx[r]] = std::exp(v[r]);
  return u_full;
}

LvSolution lv_integrate(const SystemSpec& spec, double t0, const Vec& u0, double t1,
                        const IntegrateOptions& opts) {
  if (static_cast<int>(u0.size()) != spec.n) throw ArgError("initial state has wrong length");
  for (int i = 0; i < spec.n; ++i)
    if (u0[i] < 0.0) throw ArgError("initial state must be nonnegative");

  LvSolution out;
  out.full_n = spec.n;
  out.support = support_of(u0);
  const auto idx = out.support.present();

  if (idx.empty()) {
    out.t = {std::min(t0, t1), std::max(t0, t1)};
    if (out.t[0] == out.t[1]) out.t = {t0};
    out.u.assign(out.t.size(), Vec::Zero(spec.n));
    out.stop_time = t1;
    return out;
  }

  const SystemSpec sub = out.support.is_full() ? spec : subcommunity(spec, out.support);
  const int m = sub.n;

  auto rhs = [&sub, m](double t, const Vec& v) {
    Vec u(m), g(m);
    for (int i = 0; i < m; ++i) u[i] = std::exp(v[i]);
    for (int i = 0; i < m; ++i) {
      double gi = sub.a[i].eval(t);
      for (int j = 0; j < m; ++j) gi -= sub.b[i][j].eval(t) * u[j];
      g[i] = gi;
    }
    return g;
  };

  // |e_i| * u_i <= atol + rtol * u_i, i.e. scale_i = rtol + atol / u_i.
  auto scale = [&opts, m](double, const Vec& va, const Vec& vb) {
    Vec s(m);
    for (int i = 0; i < m; ++i) {
      const double u = std::max({std::exp(va[i]), std::exp(vb[i]), 1e-300});
      s[i] = opts.rtol + opts.atol / u;
    }
    return s;
  };

  const double log_blow = std::log(opts.blowup_threshold);
  const double log_escape =
      opts.escape_norm ? std::log(*opts.escape_norm) : std::numeric_limits<double>::infinity();
  const double log_stop = std::min(log_blow, log_escape);
  auto stop = [log_stop](double, const Vec& v) { return v.maxCoeff() >= log_stop; };

  Vec v0(m);
  for (int i = 0; i < m; ++i) v0[i] = std::log(u0[idx[i]]);

  const OdeSolution core = integrate(rhs, t0, v0, t1, opts, scale, stop);

  out.t = core.t;
  out.u.reserve(core.y.size());
  for (const auto& v : core.y) {
    Vec u = Vec::Zero(spec.n);
    for (int i = 0; i < m; ++i) u[idx[i]] = std::exp(v[i]);
    out.u.push_back(u);
  }
  out.steps = core.steps;
  out.stop_time = core.stop_time;
  if (core.reason == StopReason::Stopped)
    out.reason = (log_escape <= log_blow) ? StopReason::Escaped : StopReason::Diverged;
  else
    out.reason = core.reason;
  return out;
}

}  // namespace lvfa
