#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lvfa/model.hpp"

namespace lvfa {

// Constants certifying the coefficient conditions. All vectors are full
// length; entries of dbar outside `support` are meaningless and kept at 0.
struct Witness {
  Vec c;      // row-dominance weights (positive)
  Vec cbar;   // column-dominance weights (positive)
  Vec d;      // componentwise upper bounds (positive)
  Vec dbar;   // componentwise lower bounds on `support` (positive there)
  double eps = 0.0;
  double theta = 0.0;
  double delta = 0.0;  // dominance lower bound certified by c/cbar
  SupportSet support;  // species asserted to persist
};

enum class Verdict { PassConservative, PassSampled, Fail };

std::string verdict_name(Verdict v);

struct RowTrace {
  int index = 0;    // 1-based species index
  char branch = 0;  // 'I' or 'J' for the two-branch check, 0 otherwise
  double conservative_margin = std::numeric_limits<double>::quiet_NaN();
  double sampled_margin = 0.0;
  double worst_t = 0.0;
};

struct ConditionReport {
  std::string condition;          // "H1" | "H2" | "A" | "B"
  Verdict verdict = Verdict::Fail;
  double margin = 0.0;            // slack of the strongest passing tier (or the failure)
  double worst_t = 0.0;           // sampled argmin time
  std::vector<RowTrace> rows;
  bool passed() const { return verdict != Verdict::Fail; }
};

// Weighted row diagonal dominance, uniformly in time:
//   c_i b_ii(t) + sum_{j != i} c_j b_ij(t) >= delta  for every i.
// Conservative tier uses per-coefficient range bounds; sampled tier sweeps
// the grid. Requires c > 0, delta > 0.
ConditionReport check_h1(const SystemSpec& spec, const Vec& c, double delta);

// Weighted column diagonal dominance:
//   cbar_i b_ii(t) + sum_{j != i} cbar_j b_ji(t) >= delta.
ConditionReport check_h2(const SystemSpec& spec, const Vec& cbar, double delta);

// Two-sided envelope pinning a coexistence state on `support`:
//   0 < dbar_i b_ii(t) <= a_i(t) <= d_i b_ii(t) + sum_{j in I, j != i} d_j b_ij(t).
// Sampled verification only (rows outside `support` are ignored).
ConditionReport check_a(const SystemSpec& spec, const Vec& d, const Vec& dbar,
                        const SupportSet& support);

// Two-branch persistence/extinction envelope. For i in the witness support I:
//   b_ii dbar_i + eps <= a_i <= b_ii d_i + sum_{j != i} b_ij (d_j + theta c_j) - eps,
// and for i outside I:
//   a_i <= sum_{j != i} b_ij (d_j + theta c_j) - eps.
ConditionReport check_b(const SystemSpec& spec, const Witness& w);

enum class ConditionKind { H1, H2, A, B };

struct SearchConfig {
  int grid_points = 21;        // per axis
  double grid_lo = 0.05;       // log-spaced axis range
  double grid_hi = 20.0;
  double lp_tol = 1e-9;        // LP feasibility slack
};

struct SearchOutcome {
  std::optional<Witness> witness;
  // True when the conservative-bounds linear program is infeasible, which
  // rules the condition out relative to the declared/sampled ranges. All
  // other failures only mean the search did not find a witness.
  bool conservative_infeasible = false;
  std::string note;
};

// Searches constant witnesses using only coefficient range bounds, so any
// hit also passes the sampled check. `support` is the persistence set for
// kinds A and B (ignored by H1/H2, which run on the full index set of spec).
SearchOutcome search_witness(const SystemSpec& spec, ConditionKind kind,
                             const SupportSet& support, const SearchConfig& cfg = {});

// Which long-run structure the coefficient conditions certify.
struct RegimeCertification {
  enum class Kind { Permanence, Extinction, TotalExtinction } kind;
  SupportSet attractor_support;       // support of the globally attracting state
  Witness witness;                    // composed constants (c, cbar, d, dbar, eps, theta, delta)
  std::vector<ConditionReport> reports;
  std::string describe() const;
};

// Tries full coexistence first, then persistence supports by decreasing
// size. Throws CertError when nothing certifies.
RegimeCertification certify_regime(const SystemSpec& spec, const SearchConfig& cfg = {});

}  // namespace lvfa
