#pragma once

#include <string>
#include <vector>

#include "lvfa/conditions.hpp"
#include "lvfa/odeint.hpp"

namespace lvfa {

// A bounded trajectory defined on the whole window, produced by pulling the
// witness box back from ever earlier start times until the limit stabilizes.
struct CompleteSolution {
  SupportSet support;
  std::vector<double> t;  // integration grid restricted to the window
  std::vector<Vec> u;     // full-length states, absent components exactly 0
  double horizon = 0.0;   // pull-back horizon at acceptance
  double residual = 0.0;  // max of run difference and horizon-to-horizon difference
  Witness witness;
  LvSolution flow;  // dense interpolant over the window

  Vec at(double tq) const { return flow.eval(tq); }
};

struct PullbackOptions {
  double tol = 1e-8;
  double horizon_min = 20.0;
  double horizon_max = 1280.0;
  double compare_spacing = 0.5;  // grid used for run/horizon comparisons
  IntegrateOptions ode;
};

// Computes the coexistence state pinned by the witness box: two runs started
// on the box floor and ceiling must collapse onto the same trajectory over
// the window. Throws CertError if the runs do not converge within the
// horizon ladder or the limit leaves the box.
CompleteSolution compute_star(const SystemSpec& spec, const Witness& w,
                              const PullbackOptions& opts = {});

// Distance decay between two trajectories started at u0 and v0 at time t0.
struct ContractionEstimate {
  double fitted_decay = 0.0;     // -slope of log gap over the fit window
  double sigma1 = 0.0;           // smallest component of either run on the fit window
  double sigma2 = 0.0;           // largest component of either run on the fit window
  double predicted_decay = 0.0;  // delta * sigma1 (0 when no delta given)
  double kappa = 0.0;            // largest transient growth rate of the gap
  bool degenerate = false;       // gap at rounding floor; fit uses the earlier part
  LineFit fit;
};

ContractionEstimate estimate_contraction(const SystemSpec& spec, const Vec& u0, const Vec& v0,
                                         double t0, double t1, double delta = 0.0,
                                         const IntegrateOptions& ode = {});

// One entry per support: can a bounded coexistence trajectory on exactly
// that support be certified (column dominance + coexistence envelope on the
// sub-community)?
struct SupportSurvey {
  struct Item {
    SupportSet support;
    bool certified = false;
    Witness witness;   // full-length embedding when certified
    std::string note;  // reason when not certified
  };
  std::vector<Item> items;  // by ascending support mask; the empty support leads
};

SupportSurvey list_complete_solutions(const SystemSpec& spec, const SearchConfig& cfg = {});

}  // namespace lvfa
