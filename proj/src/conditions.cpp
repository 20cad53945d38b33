#include "lvfa/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lvfa {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Safety slack applied to every grid-search feasibility test. Declared
// coefficient ranges are only enforced up to 1e-12 per sample and float
// rounding perturbs the comparisons, so a searched witness must clear its
// envelope by this much before it is accepted; the sampled re-check then
// passes with a genuinely nonnegative margin.
constexpr double kFeasSlack = 1e-8;

void require_positive(const Vec& v, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0)) throw ArgError(std::string(name) + " must be positive");
}

// Lower bound of sum_j w_j * b_{row j}(t) (or b_{j row} when column=true),
// valid for every t, built from per-coefficient range bounds. Requires w > 0.
double conservative_row_value(const CoeffBounds& cb, const Vec& w, int i, bool column) {
  const int n = static_cast<int>(w.size());
  double v = 0.0;
  for (int j = 0; j < n; ++j) v += w[j] * (column ? cb.b_inf(j, i) : cb.b_inf(i, j));
  return v;
}

struct RowSweep {
  double min_value = kInf;
  double argmin_t = 0.0;
};

// Per-row minimum over the sampling grid of sum_j w_j b_ij(t) (row pattern)
// or sum_j w_j b_ji(t) (column pattern).
std::vector<RowSweep> sampled_rows(const SystemSpec& spec, const Vec& w, bool column) {
  const int n = spec.n;
  std::vector<RowSweep> out(n);
  const int m = spec.sample_count;
  const double step = (spec.window_hi - spec.window_lo) / static_cast<double>(m - 1);
  bool all_const = true;
  for (int i = 0; i < n && all_const; ++i)
    for (int j = 0; j < n; ++j)
      if (!spec.b[i][j].is_constant()) {
        all_const = false;
        break;
      }
  const int mm = all_const ? 1 : m;
  for (int k = 0; k < mm; ++k) {
    const double t = (k == m - 1) ? spec.window_hi : spec.window_lo + step * k;
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int j = 0; j < n; ++j) v += w[j] * (column ? spec.b[j][i].eval(t) : spec.b[i][j].eval(t));
      if (v < out[i].min_value) {
        out[i].min_value = v;
        out[i].argmin_t = t;
      }
    }
  }
  return out;
}

ConditionReport dominance_report(const SystemSpec& spec, const Vec& w, double delta,
                                 bool column) {
  if (static_cast<int>(w.size()) != spec.n) throw ArgError("weight vector has wrong length");
  require_positive(w, column ? "cbar" : "c");
  if (!(delta > 0.0)) throw ArgError("delta must be positive");

  const CoeffBounds cb = coefficient_bounds(spec);
  const auto sweep = sampled_rows(spec, w, column);

  ConditionReport rep;
  rep.condition = column ? "H2" : "H1";
  double cons_min = kInf, samp_min = kInf;
  for (int i = 0; i < spec.n; ++i) {
    RowTrace tr;
    tr.index = i + 1;
    tr.conservative_margin = conservative_row_value(cb, w, i, column) - delta;
    tr.sampled_margin = sweep[i].min_value - delta;
    tr.worst_t = sweep[i].argmin_t;
    if (tr.conservative_margin < cons_min) cons_min = tr.conservative_margin;
    if (tr.sampled_margin < samp_min) {
      samp_min = tr.sampled_margin;
      rep.worst_t = tr.worst_t;
    }
    rep.rows.push_back(tr);
  }
  if (cons_min >= 0.0) {
    rep.verdict = Verdict::PassConservative;
    rep.margin = cons_min;
  } else if (samp_min >= 0.0) {
    rep.verdict = Verdict::PassSampled;
    rep.margin = samp_min;
  } else {
    rep.verdict = Verdict::Fail;
    rep.margin = samp_min;
  }
  return rep;
}

}  // namespace

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::PassConservative: return "pass-conservative";
    case Verdict::PassSampled: return "pass-sampled";
    case Verdict::Fail: return "fail";
  }
  return "fail";
}

ConditionReport check_h1(const SystemSpec& spec, const Vec& c, double delta) {
  return dominance_report(spec, c, delta, /*column=*/false);
}

ConditionReport check_h2(const SystemSpec& spec, const Vec& cbar, double delta) {
  return dominance_report(spec, cbar, delta, /*column=*/true);
}

ConditionReport check_a(const SystemSpec& spec, const Vec& d, const Vec& dbar,
                        const SupportSet& support) {
  if (static_cast<int>(d.size()) != spec.n || static_cast<int>(dbar.size()) != spec.n)
    throw ArgError("d/dbar have wrong length");
  for (int i : support.present()) {
    if (!(d[i] > 0.0)) throw ArgError("d must be positive on the support");
    if (!(dbar[i] > 0.0)) throw ArgError("dbar must be positive on the support");
  }

  ConditionReport rep;
  rep.condition = "A";
  const auto idx = support.present();
  if (idx.empty()) {
    rep.verdict = Verdict::PassSampled;
    return rep;
  }

  const int m = spec.sample_count;
  const double step = (spec.window_hi - spec.window_lo) / static_cast<double>(m - 1);
  std::vector<RowTrace> rows(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    rows[r].index = idx[r] + 1;
    rows[r].sampled_margin = kInf;
  }
  for (int k = 0; k < m; ++k) {
    const double t = (k == m - 1) ? spec.window_hi : spec.window_lo + step * k;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const int i = idx[r];
      const double ai = spec.a[i].eval(t);
      const double bii = spec.b[i][i].eval(t);
      double upper = d[i] * bii;
      for (int j : idx)
        if (j != i) upper += d[j] * spec.b[i][j].eval(t);
      const double lower_margin = ai - dbar[i] * bii;
      const double upper_margin = upper - ai;
      const double margin = std::min(lower_margin, upper_margin);
      if (margin < rows[r].sampled_margin) {
        rows[r].sampled_margin = margin;
        rows[r].worst_t = t;
      }
    }
  }
  double worst = kInf;
  for (auto& tr : rows) {
    if (tr.sampled_margin < worst) {
      worst = tr.sampled_margin;
      rep.worst_t = tr.worst_t;
    }
    rep.rows.push_back(tr);
  }
  rep.margin = worst;
  rep.verdict = worst >= 0.0 ? Verdict::PassSampled : Verdict::Fail;
  return rep;
}

ConditionReport check_b(const SystemSpec& spec, const Witness& w) {
  if (static_cast<int>(w.c.size()) != spec.n || static_cast<int>(w.d.size()) != spec.n)
    throw ArgError("witness c/d have wrong length");
  require_positive(w.c, "c");
  require_positive(w.d, "d");
  if (!(w.eps > 0.0)) throw ArgError("eps must be positive");
  if (!(w.theta > 0.0)) throw ArgError("theta must be positive");
  for (int i : w.support.present())
    if (!(w.dbar[i] > 0.0)) throw ArgError("dbar must be positive on the support");

  ConditionReport rep;
  rep.condition = "B";
  const int m = spec.sample_count;
  const double step = (spec.window_hi - spec.window_lo) / static_cast<double>(m - 1);
  std::vector<RowTrace> rows(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    rows[i].index = i + 1;
    rows[i].branch = w.support.contains(i) ? 'I' : 'J';
    rows[i].sampled_margin = kInf;
  }
  for (int k = 0; k < m; ++k) {
    const double t = (k == m - 1) ? spec.window_hi : spec.window_lo + step * k;
    for (int i = 0; i < spec.n; ++i) {
      const double ai = spec.a[i].eval(t);
      double coupling = 0.0;
      for (int j = 0; j < spec.n; ++j)
        if (j != i) coupling += spec.b[i][j].eval(t) * (w.d[j] + w.theta * w.c[j]);
      double margin;
      if (w.support.contains(i)) {
        const double bii = spec.b[i][i].eval(t);
        const double lower_margin = ai - (bii * w.dbar[i] + w.eps);
        const double upper_margin = (bii * w.d[i] + coupling - w.eps) - ai;
        margin = std::min(lower_margin, upper_margin);
      } else {
        margin = (coupling - w.eps) - ai;
      }
      if (margin < rows[i].sampled_margin) {
        rows[i].sampled_margin = margin;
        rows[i].worst_t = t;
      }
    }
  }
  double worst = kInf;
  for (auto& tr : rows) {
    if (tr.sampled_margin < worst) {
      worst = tr.sampled_margin;
      rep.worst_t = tr.worst_t;
    }
    rep.rows.push_back(tr);
  }
  rep.margin = worst;
  rep.verdict = worst >= 0.0 ? Verdict::PassSampled : Verdict::Fail;
  return rep;
}

namespace {

// maximize delta over { c >= 0, sum c = 1, (L c)_i >= delta } by enumerating
// basic feasible points: the normalization plus n active constraints chosen
// among the 2n inequalities.
struct LpResult {
  Vec c;
  double delta = -kInf;
  bool solved = false;
};

LpResult lp_vertex_enumeration(const Mat& L, double tol) {
  const int n = static_cast<int>(L.rows());
  LpResult best;
  // Constraint ids: 0..n-1 -> row constraints, n..2n-1 -> c_i >= 0.
  std::vector<bool> pick(2 * n, false);
  std::fill(pick.begin(), pick.begin() + n, true);
  // Enumerate all size-n subsets of 2n ids via permutations of the mask.
  std::sort(pick.begin(), pick.end());
  do {
    Mat Asys = Mat::Zero(n + 1, n + 1);
    Vec rhs = Vec::Zero(n + 1);
    int r = 0;
    for (int id = 0; id < 2 * n; ++id) {
      if (!pick[id]) continue;
      if (id < n) {
        for (int j = 0; j < n; ++j) Asys(r, j) = L(id, j);
        Asys(r, n) = -1.0;
      } else {
        Asys(r, id - n) = 1.0;
      }
      ++r;
    }
    for (int j = 0; j < n; ++j) Asys(n, j) = 1.0;  // sum c = 1
    rhs[n] = 1.0;
    Eigen::FullPivLU<Mat> lu(Asys);
    if (!lu.isInvertible()) continue;
    const Vec x = lu.solve(rhs);
    const Vec c = x.head(n);
    const double delta = x[n];
    bool feasible = true;
    for (int i = 0; i < n && feasible; ++i) {
      if (c[i] < -tol) feasible = false;
      double row = 0.0;
      for (int j = 0; j < n; ++j) row += L(i, j) * c[j];
      if (row < delta - tol) feasible = false;
    }
    if (feasible && delta > best.delta) {
      best.delta = delta;
      best.c = c;
      best.solved = true;
    }
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

double min_row(const Mat& L, const Vec& c) {
  double v = kInf;
  for (int i = 0; i < L.rows(); ++i) {
    double row = 0.0;
    for (int j = 0; j < L.cols(); ++j) row += L(i, j) * c[j];
    v = std::min(v, row);
  }
  return v;
}

LpResult lp_coordinate_ascent(const Mat& L) {
  const int n = static_cast<int>(L.rows());
  LpResult res;
  Vec c = Vec::Constant(n, 1.0 / n);
  double val = min_row(L, c);
  const double factors[] = {0.25, 0.5, 0.8, 0.9, 1.1, 1.25, 2.0, 4.0};
  for (int sweep = 0; sweep < 200; ++sweep) {
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      for (double f : factors) {
        Vec trial = c;
        trial[i] = std::max(1e-9, c[i] * f);
        trial /= trial.sum();
        const double tv = min_row(L, trial);
        if (tv > val + 1e-12) {
          val = tv;
          c = trial;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  res.c = c;
  res.delta = val;
  res.solved = true;
  return res;
}

// Log-spaced grid over [lo, hi] with `points` nodes.
std::vector<double> log_grid(const SearchConfig& cfg) {
  std::vector<double> g(cfg.grid_points);
  const double ratio = std::log(cfg.grid_hi / cfg.grid_lo);
  for (int k = 0; k < cfg.grid_points; ++k)
    g[k] = cfg.grid_lo * std::exp(ratio * static_cast<double>(k) /
                                  static_cast<double>(cfg.grid_points - 1));
  return g;
}

SearchOutcome search_dominance(const SystemSpec& spec, bool column, const SearchConfig& cfg) {
  SearchOutcome out;
  const CoeffBounds cb = coefficient_bounds(spec);
  Mat L(spec.n, spec.n);
  for (int i = 0; i < spec.n; ++i)
    for (int j = 0; j < spec.n; ++j) L(i, j) = column ? cb.b_inf(j, i) : cb.b_inf(i, j);

  LpResult lp = spec.n <= 3 ? lp_vertex_enumeration(L, cfg.lp_tol) : lp_coordinate_ascent(L);
  if (!lp.solved || lp.delta <= cfg.lp_tol) {
    out.conservative_infeasible = true;
    out.note = "dominance linear program infeasible relative to coefficient bounds";
    return out;
  }
  // Enforce strict positivity of the weights, renormalize, and re-derive the
  // certified delta from the same conservative row values the check uses.
  Vec c = lp.c;
  for (double floor_val : {1e-6, 1e-9, 1e-12}) {
    Vec trial = c;
    for (int i = 0; i < spec.n; ++i) trial[i] = std::max(trial[i], floor_val);
    trial /= trial.sum();
    const double delta = min_row(L, trial);
    if (delta > 0.0) {
      Witness w;
      if (column) {
        w.cbar = trial;
      } else {
        w.c = trial;
      }
      w.delta = delta;
      w.support = SupportSet::full(spec.n);
      out.witness = w;
      return out;
    }
  }
  out.note = "optimum sits on the boundary; no strictly positive weights found";
  return out;
}

SearchOutcome search_coexistence(const SystemSpec& spec, const SupportSet& support,
                                 const SearchConfig& cfg) {
  SearchOutcome out;
  const auto idx = support.present();
  if (idx.empty()) {
    out.note = "empty support";
    return out;
  }
  const CoeffBounds cb = coefficient_bounds(spec);

  Vec dbar = Vec::Zero(spec.n);
  for (int i : idx) {
    if (!(cb.a_inf[i] > 0.0)) {
      out.conservative_infeasible = true;
      out.note = "a_" + std::to_string(i + 1) + " is not positive over the window";
      return out;
    }
    dbar[i] = (cb.a_inf[i] - kFeasSlack) / cb.b_sup(i, i);
    if (!(dbar[i] > 0.0)) {
      out.note = "a_" + std::to_string(i + 1) + " has no usable positive slack";
      return out;
    }
  }

  const auto grid = log_grid(cfg);
  const int k = static_cast<int>(idx.size());
  std::vector<int> pos(k, 0);
  for (;;) {
    Vec d = Vec::Zero(spec.n);
    for (int r = 0; r < k; ++r) d[idx[r]] = grid[pos[r]];
    bool ok = true;
    for (int r = 0; r < k && ok; ++r) {
      const int i = idx[r];
      if (d[i] < dbar[i]) {
        ok = false;
        break;
      }
      double upper = cb.b_inf(i, i) * d[i];
      for (int j : idx)
        if (j != i) upper += cb.b_inf(i, j) * d[j];
      if (upper < cb.a_sup[i] + kFeasSlack) ok = false;
    }
    if (ok) {
      Witness w;
      w.d = d;
      w.dbar = dbar;
      w.support = support;
      out.witness = w;
      return out;
    }
    // lexicographic increment, last axis fastest
    int r = k - 1;
    while (r >= 0 && ++pos[r] == cfg.grid_points) {
      pos[r] = 0;
      --r;
    }
    if (r < 0) break;
  }
  out.note = "no grid point satisfies the coexistence envelope";
  return out;
}

SearchOutcome search_two_branch(const SystemSpec& spec, const SupportSet& support,
                                const SearchConfig& cfg) {
  SearchOutcome out;
  const auto h1 = search_dominance(spec, /*column=*/false, cfg);
  if (!h1.witness) {
    out.conservative_infeasible = h1.conservative_infeasible;
    out.note = "row dominance unavailable: " + h1.note;
    return out;
  }
  const Vec& c = h1.witness->c;
  const double delta = h1.witness->delta;
  const CoeffBounds cb = coefficient_bounds(spec);
  const auto grid = log_grid(cfg);
  const auto idx = support.present();
  const int k = static_cast<int>(idx.size());

  std::vector<int> pos(k, 0);
  for (;;) {
    Vec d = Vec::Constant(spec.n, grid.front());  // off-support axes pinned small
    for (int r = 0; r < k; ++r) d[idx[r]] = grid[pos[r]];
    for (double theta : grid) {
      for (double eps : grid) {
        bool ok = true;
        Vec dbar = Vec::Zero(spec.n);
        for (int i = 0; i < spec.n && ok; ++i) {
          double coupling = 0.0;
          for (int j = 0; j < spec.n; ++j)
            if (j != i) coupling += cb.b_inf(i, j) * (d[j] + theta * c[j]);
          if (support.contains(i)) {
            dbar[i] = (cb.a_inf[i] - eps - kFeasSlack) / cb.b_sup(i, i);
            if (!(dbar[i] > 0.0) || dbar[i] > d[i]) ok = false;
            if (ok && cb.a_sup[i] + kFeasSlack > cb.b_inf(i, i) * d[i] + coupling - eps)
              ok = false;
          } else {
            if (cb.a_sup[i] + kFeasSlack > coupling - eps) ok = false;
          }
        }
        if (ok) {
          Witness w;
          w.c = c;
          w.delta = delta;
          w.d = d;
          w.dbar = dbar;
          w.eps = eps;
          w.theta = theta;
          w.support = support;
          out.witness = w;
          return out;
        }
      }
    }
    if (k == 0) break;
    int r = k - 1;
    while (r >= 0 && ++pos[r] == cfg.grid_points) {
      pos[r] = 0;
      --r;
    }
    if (r < 0) break;
  }
  out.note = "no grid point satisfies the two-branch envelope";
  return out;
}

}  // namespace

SearchOutcome search_witness(const SystemSpec& spec, ConditionKind kind,
                             const SupportSet& support, const SearchConfig& cfg) {
  require_valid(spec);
  switch (kind) {
    case ConditionKind::H1: return search_dominance(spec, false, cfg);
    case ConditionKind::H2: return search_dominance(spec, true, cfg);
    case ConditionKind::A: return search_coexistence(spec, support, cfg);
    case ConditionKind::B: return search_two_branch(spec, support, cfg);
  }
  return {};
}

std::string RegimeCertification::describe() const {
  switch (kind) {
    case Kind::Permanence: return "permanence";
    case Kind::TotalExtinction: return "total-extinction";
    case Kind::Extinction:
      return "extinction-of-" +
             std::to_string(attractor_support.n() - attractor_support.count());
  }
  return "";
}

RegimeCertification certify_regime(const SystemSpec& spec, const SearchConfig& cfg) {
  require_valid(spec);
  const auto full = SupportSet::full(spec.n);

  const auto h1 = search_witness(spec, ConditionKind::H1, full, cfg);
  const auto h2 = search_witness(spec, ConditionKind::H2, full, cfg);

  if (h2.witness) {
    const auto a = search_witness(spec, ConditionKind::A, full, cfg);
    if (a.witness) {
      RegimeCertification rc;
      rc.kind = RegimeCertification::Kind::Permanence;
      rc.attractor_support = full;
      rc.witness = *a.witness;
      rc.witness.cbar = h2.witness->cbar;
      rc.witness.delta = h2.witness->delta;
      if (h1.witness) {
        rc.witness.c = h1.witness->c;
        rc.witness.delta = std::min(rc.witness.delta, h1.witness->delta);
      }
      rc.reports.push_back(check_h2(spec, rc.witness.cbar, rc.witness.delta));
      rc.reports.push_back(check_a(spec, rc.witness.d, rc.witness.dbar, full));
      if (h1.witness) rc.reports.push_back(check_h1(spec, rc.witness.c, rc.witness.delta));
      for (const auto& r : rc.reports)
        if (!r.passed())
          throw CertError("internal: searched witness fails its own check (" + r.condition + ")");
      return rc;
    }
  }

  if (h1.witness) {
    // Persistence supports by decreasing size, masks ascending within a size.
    for (int size = spec.n - 1; size >= 0; --size) {
      for (std::uint32_t mask = 0; mask < (1u << spec.n); ++mask) {
        SupportSet I(spec.n, mask);
        if (I.count() != size) continue;
        const auto b = search_witness(spec, ConditionKind::B, I, cfg);
        if (!b.witness) continue;
        Witness w = *b.witness;
        if (!I.empty()) {
          const auto sub = subcommunity(spec, I);
          const auto h2s = search_witness(sub, ConditionKind::H2, SupportSet::full(sub.n), cfg);
          if (!h2s.witness) continue;
          w.cbar = embed_state(h2s.witness->cbar, I);
          w.delta = std::min(w.delta, h2s.witness->delta);
        }
        RegimeCertification rc;
        rc.kind = I.empty() ? RegimeCertification::Kind::TotalExtinction
                            : RegimeCertification::Kind::Extinction;
        rc.attractor_support = I;
        rc.witness = w;
        rc.reports.push_back(check_h1(spec, w.c, w.delta));
        rc.reports.push_back(check_b(spec, w));
        if (!I.empty()) {
          const auto sub = subcommunity(spec, I);
          rc.reports.push_back(check_h2(sub, restrict_state(w.cbar, I), w.delta));
          rc.reports.push_back(check_a(sub, restrict_state(w.d, I), restrict_state(w.dbar, I),
                                       SupportSet::full(I.count())));
        }
        for (const auto& r : rc.reports)
          if (!r.passed())
            throw CertError("internal: searched witness fails its own check (" + r.condition +
                            ")");
        return rc;
      }
    }
  }

  throw CertError(
      "no regime certified: neither the coexistence envelope nor any two-branch envelope "
      "admits a constant witness relative to the coefficient bounds");
}

}  // namespace lvfa
