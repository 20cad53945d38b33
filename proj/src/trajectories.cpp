#include "lvfa/trajectories.hpp"

#include <algorithm>
#include <cmath>

#include "lvfa/errors.hpp"

namespace lvfa {
namespace {

double max_gap_on_grid(const LvSolution& s1, const LvSolution& s2, double lo, double hi,
                       double spacing) {
  double gap = 0.0;
  const int m = std::max(2, static_cast<int>(std::ceil((hi - lo) / spacing)) + 1);
  for (int k = 0; k < m; ++k) {
    const double t = lo + (hi - lo) * k / (m - 1);
    gap = std::max(gap, (s1.eval(t) - s2.eval(t)).cwiseAbs().maxCoeff());
  }
  return gap;
}

}  // namespace

CompleteSolution compute_star(const SystemSpec& spec, const Witness& w,
                              const PullbackOptions& opts) {
  CompleteSolution out;
  out.support = w.support;
  out.witness = w;

  const double lo = spec.window_lo, hi = spec.window_hi;

  if (w.support.empty()) {
    out.t = {lo, hi};
    out.u.assign(2, Vec::Zero(spec.n));
    out.flow = lv_integrate(spec, lo, Vec::Zero(spec.n), hi);
    return out;
  }

  for (int i : w.support.present()) {
    if (!(w.dbar[i] > 0.0) || !(w.d[i] >= w.dbar[i]))
      throw ArgError("witness box is empty on the support");
  }

  const Vec u_hi0 = [&] {
    Vec v = Vec::Zero(spec.n);
    for (int i : w.support.present()) v[i] = w.d[i];
    return v;
  }();
  const Vec u_lo0 = [&] {
    Vec v = Vec::Zero(spec.n);
    for (int i : w.support.present()) v[i] = w.dbar[i];
    return v;
  }();

  IntegrateOptions ode = opts.ode;
  ode.record_from = lo;

  LvSolution prev_upper;
  bool have_prev = false;

  for (double T = opts.horizon_min; T <= opts.horizon_max * (1.0 + 1e-12); T *= 2.0) {
    const double start = lo - T;
    LvSolution upper = lv_integrate(spec, start, u_hi0, hi, ode);
    LvSolution lower = lv_integrate(spec, start, u_lo0, hi, ode);
    if (upper.reason != StopReason::Reached || lower.reason != StopReason::Reached)
      throw CertError("pull-back run left the admissible region before reaching the window");

    const double run_gap = max_gap_on_grid(upper, lower, lo, hi, opts.compare_spacing);
    if (have_prev) {
      const double horizon_gap = max_gap_on_grid(upper, prev_upper, lo, hi, opts.compare_spacing);
      if (run_gap <= opts.tol && horizon_gap <= opts.tol) {
        out.horizon = T;
        out.residual = std::max(run_gap, horizon_gap);
        out.flow = std::move(upper);
        out.t = out.flow.t;
        out.u = out.flow.u;
        for (const auto& u : out.u) {
          for (int i : w.support.present()) {
            if (u[i] < w.dbar[i] - opts.tol || u[i] > w.d[i] + opts.tol)
              throw CertError("pull-back limit leaves the witness box");
          }
        }
        return out;
      }
    }
    prev_upper = std::move(upper);
    have_prev = true;
  }
  throw CertError("pull-back runs did not stabilize within the maximal horizon");
}

ContractionEstimate estimate_contraction(const SystemSpec& spec, const Vec& u0, const Vec& v0,
                                         double t0, double t1, double delta,
                                         const IntegrateOptions& ode) {
  if (!(t1 > t0)) throw ArgError("contraction estimate needs t1 > t0");
  ContractionEstimate est;

  const LvSolution su = lv_integrate(spec, t0, u0, t1, ode);
  const LvSolution sv = lv_integrate(spec, t0, v0, t1, ode);
  if (su.reason != StopReason::Reached || sv.reason != StopReason::Reached)
    throw NumericError("contraction runs stopped early");

  const int probes = 400;
  std::vector<double> ts(probes), gap(probes);
  double scale_max = 0.0;
  for (int k = 0; k < probes; ++k) {
    ts[k] = t0 + (t1 - t0) * k / (probes - 1);
    const Vec a = su.eval(ts[k]), b = sv.eval(ts[k]);
    gap[k] = (a - b).cwiseAbs().maxCoeff();
    scale_max = std::max({scale_max, a.maxCoeff(), b.maxCoeff()});
  }

  // Gaps near the integration accuracy carry no decay information; keep
  // only the prefix above that reliability floor.
  const double floor_hard = 1e-14;
  const double floor_gap = std::max(floor_hard, 50.0 * ode.rtol * scale_max);
  int k_end = probes;
  for (int k = 0; k < probes; ++k) {
    if (gap[k] < floor_gap) {
      k_end = k;
      if (gap[k] < floor_hard) est.degenerate = true;
      break;
    }
  }

  // largest transient growth rate over adjacent reliable probes
  for (int k = 0; k + 1 < k_end; ++k) {
    const double rate = (std::log(gap[k + 1]) - std::log(gap[k])) / (ts[k + 1] - ts[k]);
    est.kappa = std::max(est.kappa, rate);
  }

  // fit over the second half of the reliable prefix
  std::vector<double> fx, fy;
  double s1 = std::numeric_limits<double>::infinity(), s2 = 0.0;
  for (int k = k_end / 2; k < k_end; ++k) {
    fx.push_back(ts[k]);
    fy.push_back(std::log(gap[k]));
    const Vec a = su.eval(ts[k]), b = sv.eval(ts[k]);
    for (int i : su.support.present()) s1 = std::min(s1, a[i]);
    for (int i : sv.support.present()) s1 = std::min(s1, b[i]);
    s2 = std::max({s2, a.maxCoeff(), b.maxCoeff()});
  }
  if (fx.size() >= 2) {
    est.fit = fit_line(fx, fy);
    est.fitted_decay = -est.fit.slope;
  } else {
    est.degenerate = true;
  }
  if (std::isfinite(s1)) {
    est.sigma1 = s1;
    est.sigma2 = s2;
  }
  est.predicted_decay = delta * est.sigma1;
  return est;
}

SupportSurvey list_complete_solutions(const SystemSpec& spec, const SearchConfig& cfg) {
  require_valid(spec);
  SupportSurvey survey;
  for (std::uint32_t mask = 0; mask < (1u << spec.n); ++mask) {
    SupportSurvey::Item item;
    item.support = SupportSet(spec.n, mask);
    if (item.support.empty()) {
      item.certified = true;  // the zero state is always a bounded solution
      item.witness.support = item.support;
      survey.items.push_back(item);
      continue;
    }
    const SystemSpec sub = subcommunity(spec, item.support);
    const auto full_sub = SupportSet::full(sub.n);
    const auto h2 = search_witness(sub, ConditionKind::H2, full_sub, cfg);
    if (!h2.witness) {
      item.note = "column dominance: " +
                  (h2.note.empty() ? std::string("no witness found") : h2.note);
      survey.items.push_back(item);
      continue;
    }
    const auto a = search_witness(sub, ConditionKind::A, full_sub, cfg);
    if (!a.witness) {
      item.note =
          "coexistence envelope: " + (a.note.empty() ? std::string("no witness found") : a.note);
      survey.items.push_back(item);
      continue;
    }
    item.certified = true;
    item.witness.support = item.support;
    item.witness.cbar = embed_state(h2.witness->cbar, item.support);
    item.witness.delta = h2.witness->delta;
    item.witness.d = embed_state(a.witness->d, item.support);
    item.witness.dbar = embed_state(a.witness->dbar, item.support);
    survey.items.push_back(item);
  }
  return survey;
}

}  // namespace lvfa
