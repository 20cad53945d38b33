#include "lvfa/dichotomy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lvfa/errors.hpp"

namespace lvfa {

namespace {

using JacFn = std::function<Mat(double)>;

Mat select_block(const Mat& M, const std::vector<int>& rows, const std::vector<int>& cols) {
  Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = M(rows[r], cols[c]);
  return out;
}

// QR with positive diagonal of R, for frame continuity across segments.
void qr_positive(const Mat& M, Mat& Q, Mat& R) {
  Eigen::HouseholderQR<Mat> qr(M);
  const Eigen::Index k = std::min(M.rows(), M.cols());
  Q = qr.householderQ() * Mat::Identity(M.rows(), M.cols());
  R = qr.matrixQR().topRows(M.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (R(j, j) < 0.0) {
      Q.col(j) = -Q.col(j);
      R.row(j) = -R.row(j);
    }
  }
}

// Propagates an orthonormal frame from t_from to t_to (either direction) with
// re-orthonormalization every ~dt, accumulating the growth rates of the
// frame's diagonal scales per unit of elapsed sweep time.
struct SweepResult {
  Mat Q;      // final frame, orthonormal columns
  Vec rates;  // per-column growth rates along the sweep direction
};

SweepResult qr_sweep(const JacFn& J, const Mat& Q0, double t_from, double t_to, double dt,
                     const IntegrateOptions& ode) {
  const double span = std::abs(t_to - t_from);
  const int segs = std::max(1, static_cast<int>(std::lround(span / dt)));
  const double step = (t_to - t_from) / segs;

  SweepResult out;
  out.Q = Q0;
  out.rates = Vec::Zero(Q0.cols());
  Mat R;
  for (int s = 0; s < segs; ++s) {
    const double ta = t_from + s * step;
    const double tb = (s + 1 == segs) ? t_to : t_from + (s + 1) * step;
    const Mat phi = integrate_matrix(J, ta, out.Q, tb, ode);
    qr_positive(phi, out.Q, R);
    for (Eigen::Index j = 0; j < R.cols(); ++j)
      out.rates[j] += std::log(std::max(R(j, j), 1e-300));
  }
  out.rates /= span;
  return out;
}

// Number of leading rates >= gap when the vector partitions cleanly into a
// positive head and a negative tail, all clear of the gap band; -1 otherwise.
int clean_split(const Vec& rates, double gap) {
  const int n = static_cast<int>(rates.size());
  int split = n;
  for (int j = 0; j < n; ++j) {
    if (std::abs(rates[j]) < gap) return -1;
    if (rates[j] < 0.0 && split == n) split = j;
    if (rates[j] > 0.0 && split < n) return -1;  // sign pattern broken
  }
  return split;
}

int positive_count(const Vec& rates) {
  int c = 0;
  for (Eigen::Index j = 0; j < rates.size(); ++j) c += (rates[j] > 0.0) ? 1 : 0;
  return c;
}

// Fixed full-rank frame with no column on an invariant subspace of anything
// we meet in practice; identity columns would sit exactly on coordinate-axis
// solutions and freeze the sweep's sorting.
Mat generic_frame(int n) {
  Rng rng(0x9e3779b97f4a7c15ull);
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
  Mat Q, R;
  qr_positive(A, Q, R);
  return Q;
}

// Frame-propagation splitting of an arbitrary linear flow around t0.
// avail_bwd/avail_fwd bound how far data exists on each side of t0.
Subspaces split_spectrum(const JacFn& J, int n, double t0, const DichotomyOptions& opts,
                         double avail_bwd, double avail_fwd) {
  if (n == 0) throw ArgError("cannot split a zero-dimensional flow");
  const double avail = std::min(avail_bwd, avail_fwd);
  if (avail < 2.0 * opts.qr_interval)
    throw SpectralGapError("not enough trajectory data around the splitting time");

  double hf_prev = -1.0, hb_prev = -1.0;
  for (double h = opts.horizon_init; ; h *= 2.0) {
    const double hf = std::min(h, avail_fwd);
    const double hb = std::min(h, avail_bwd);
    if (hf == hf_prev && hb == hb_prev) {
      throw SpectralGapError(
          "exponent gap below threshold at the largest horizon the window allows");
    }
    hf_prev = hf;
    hb_prev = hb;

    // A generic frame swept forward into t0 sorts itself so its leading
    // columns span the fastest (backward-decaying) directions there.
    const SweepResult into = qr_sweep(J, generic_frame(n), t0 - hb, t0, opts.qr_interval,
                                      opts.ode);
    // Starting the rate sweep from that aligned frame makes the diagonal
    // growths converge to the true exponents, in descending order.
    const SweepResult fwd = qr_sweep(J, into.Q, t0, t0 + hf, opts.qr_interval, opts.ode);
    const int q = clean_split(fwd.rates, opts.gap_threshold);
    // A generic frame swept backward into t0 sorts its leading columns onto
    // the forward-decaying directions.
    const SweepResult rev = qr_sweep(J, generic_frame(n), t0 + hf, t0, opts.qr_interval,
                                     opts.ode);

    if (q >= 0 && positive_count(into.rates) == q && positive_count(rev.rates) == n - q) {
      Subspaces out;
      out.unstable = into.Q.leftCols(q);
      out.stable = rev.Q.leftCols(n - q);
      out.exponents = fwd.rates;
      std::sort(out.exponents.data(), out.exponents.data() + out.exponents.size(),
                std::greater<double>());
      out.horizon = hf;
      out.gap = out.exponents.size() ? out.exponents.cwiseAbs().minCoeff() : 0.0;
      return out;
    }
    if (h >= opts.horizon_max)
      throw SpectralGapError("exponent gap below threshold at the maximal horizon");
  }
}

// Projection onto span(S) along span(U). Exact 0 / identity for the vacuous
// splittings so trivial certificates carry no rounding residue.
Mat projection_from_frames(const Mat& S, const Mat& U) {
  const Eigen::Index n = S.cols() > 0 ? S.rows() : U.rows();
  const Eigen::Index k = S.cols();
  if (k == 0) return Mat::Zero(n, n);
  if (U.cols() == 0) return Mat::Identity(n, n);
  Mat F(n, n);
  F.leftCols(k) = S;
  F.rightCols(U.cols()) = U;
  const Mat Fi = F.partialPivLu().inverse();
  return S * Fi.topRows(k);
}

JacFn base_jacobian(const SystemSpec& spec, const CompleteSolution& base) {
  return [&spec, &base](double t) { return linearize(spec, t, base.at(t)); };
}

struct PairSamples {
  std::vector<double> dt;       // separations
  std::vector<double> log_lhs;  // log of the measured restricted norm
};

double max_or(const std::vector<double>& v, double fallback) {
  return v.empty() ? fallback : *std::max_element(v.begin(), v.end());
}

}  // namespace

Mat linearize(const SystemSpec& spec, double t, const Vec& u) {
  if (static_cast<int>(u.size()) != spec.n) throw ArgError("state has wrong length");
  Mat J(spec.n, spec.n);
  for (int i = 0; i < spec.n; ++i) {
    double g = spec.a[i](t);
    for (int j = 0; j < spec.n; ++j) {
      const double bij = spec.b[i][j](t);
      g -= bij * u[j];
      J(i, j) = -u[i] * bij;
    }
    J(i, i) += g;
  }
  return J;
}

Subspaces subspaces(const SystemSpec& spec, const CompleteSolution& base, double t0,
                    const DichotomyOptions& opts) {
  const double lo = base.flow.t_front(), hi = base.flow.t_back();
  if (!(t0 >= lo && t0 <= hi)) throw ArgError("splitting time outside the stored window");
  return split_spectrum(base_jacobian(spec, base), spec.n, t0, opts, t0 - lo, hi - t0);
}

const Mat& DichotomyCertificate::P_at(double t) const {
  if (grid.empty()) throw ArgError("certificate holds no grid nodes");
  const double lo = grid.front(), hi = grid.back();
  const double x = std::min(std::max(t, lo), hi);
  const double sp = grid.size() > 1 ? (hi - lo) / static_cast<double>(grid.size() - 1) : 1.0;
  long j = std::lround((x - lo) / sp);
  j = std::max(0l, std::min(j, static_cast<long>(grid.size()) - 1));
  return P[static_cast<std::size_t>(j)];
}

DichotomyCertificate build_certificate(const SystemSpec& spec, const CompleteSolution& base,
                                       const DichotomyOptions& opts) {
  const JacFn J = base_jacobian(spec, base);
  const int n = spec.n;
  const double flow_lo = base.flow.t_front(), flow_hi = base.flow.t_back();
  const double clo = std::max({opts.window_lo, spec.window_lo, flow_lo});
  const double chi = std::min({opts.window_hi, spec.window_hi, flow_hi});
  if (!(chi > clo)) throw ArgError("certificate window is empty");

  // Splittings at both ends fix the dimensions and seed the two sweeps.
  const Subspaces at_lo = split_spectrum(J, n, clo, opts, clo - flow_lo, flow_hi - clo);
  const Subspaces at_hi = split_spectrum(J, n, chi, opts, chi - flow_lo, flow_hi - chi);
  const int k = static_cast<int>(at_lo.stable.cols());
  const int q = n - k;
  if (static_cast<int>(at_hi.stable.cols()) != k)
    throw SpectralGapError("splitting dimension changes across the certificate window");

  DichotomyCertificate cert;
  cert.stable_dim = k;
  cert.unstable_dim = q;
  cert.stable_vacuous = (k == 0);
  cert.unstable_vacuous = (q == 0);

  const int nodes = std::max(1, static_cast<int>(std::lround((chi - clo) / opts.node_spacing)));
  const double sp = (chi - clo) / nodes;
  cert.grid.resize(nodes + 1);
  for (int j = 0; j <= nodes; ++j) cert.grid[j] = (j == nodes) ? chi : clo + j * sp;

  // Forward sweep carries the backward-decaying frame, backward sweep the
  // forward-decaying one; both refine their seeds exponentially fast.
  std::vector<Mat> U(nodes + 1), S(nodes + 1);
  Mat R;
  U[0] = at_lo.unstable;
  for (int j = 1; j <= nodes; ++j) {
    if (q == 0) {
      U[j] = Mat(n, 0);
      continue;
    }
    const Mat phi = integrate_matrix(J, cert.grid[j - 1], U[j - 1], cert.grid[j], opts.ode);
    qr_positive(phi, U[j], R);
  }
  S[nodes] = at_hi.stable;
  for (int j = nodes - 1; j >= 0; --j) {
    if (k == 0) {
      S[j] = Mat(n, 0);
      continue;
    }
    const Mat phi = integrate_matrix(J, cert.grid[j + 1], S[j + 1], cert.grid[j], opts.ode);
    qr_positive(phi, S[j], R);
  }

  cert.P.resize(nodes + 1);
  for (int j = 0; j <= nodes; ++j) {
    cert.P[j] = projection_from_frames(S[j], U[j]);
    cert.residual_idempotent =
        std::max(cert.residual_idempotent, opnorm(cert.P[j] * cert.P[j] - cert.P[j]));
  }

  const std::vector<double> deltas = {0.5, 1.0, 2.0, 5.0, 10.0};
  const int per = std::max(1, static_cast<int>(std::lround(1.0 / sp)));
  const auto node_at = [&](double t) {
    return static_cast<std::size_t>(std::lround((t - clo) / sp));
  };

  // Measures the restricted propagator norms for every admissible separation
  // starting at node s0. Each side is integrated along its own dominant
  // direction and the opposite bound is read off a solve, so integration
  // error never rides an exponentially growing mode: the unstable frame is
  // carried forward and inverted for the backward bound; the stable frame is
  // carried backward from the arrival node and inverted for the forward
  // bound (on an invariant family the restricted propagators are mutual
  // inverses; the violation is the invariance residual, reported separately).
  const auto measure = [&](int s0, PairSamples& st, PairSamples& un, double* inv_residual) {
    const double s = cert.grid[s0];
    Mat phi_u = U[s0];
    Mat m_full = (inv_residual != nullptr) ? Mat::Identity(n, n) : Mat();
    double cur = s;
    const Mat y_s = (k > 0) ? Mat(S[s0].transpose() * cert.P[s0]) : Mat();
    for (double d : deltas) {
      const double t = s + d;
      if (t > chi + 1e-9) break;
      if (q > 0) phi_u = integrate_matrix(J, cur, phi_u, t, opts.ode);
      if (inv_residual != nullptr && d <= 2.0 + 1e-9)
        m_full = integrate_matrix(J, cur, m_full, t, opts.ode);
      cur = t;
      const std::size_t tj = node_at(t);
      if (k > 0) {
        const Mat back = integrate_matrix(J, t, S[tj], s, opts.ode);
        const Mat gram = S[s0].transpose() * back;
        const double lhs = opnorm(gram.partialPivLu().solve(y_s));
        if (lhs >= opts.noise_floor) {
          st.dt.push_back(d);
          st.log_lhs.push_back(std::log(lhs));
        }
      }
      if (q > 0) {
        const Mat tq = U[tj].transpose() * phi_u;
        const Mat z = U[tj].transpose() * (Mat::Identity(n, n) - cert.P[tj]);
        const double lhs = opnorm(tq.partialPivLu().solve(z));
        if (lhs >= opts.noise_floor) {
          un.dt.push_back(d);
          un.log_lhs.push_back(std::log(lhs));
        }
      }
      if (inv_residual != nullptr && d <= 2.0 + 1e-9) {
        *inv_residual = std::max(
            *inv_residual, opnorm(cert.P[tj] * m_full - m_full * cert.P[s0]));
      }
    }
  };

  PairSamples fit_st, fit_un;
  for (int j = 0; j <= nodes && cert.grid[j] + deltas.front() <= chi + 1e-9; j += per)
    measure(j, fit_st, fit_un, &cert.residual_invariance);

  const auto fit_rate = [](const PairSamples& ps, double* rate, double* kconst) {
    if (ps.dt.size() < 2) return false;
    const LineFit f = fit_line(ps.dt, ps.log_lhs);
    if (f.count < 2) return false;
    *rate = -f.slope;
    std::vector<double> ks;
    ks.reserve(ps.dt.size());
    for (std::size_t i = 0; i < ps.dt.size(); ++i)
      ks.push_back(std::exp(ps.log_lhs[i] + *rate * ps.dt[i]));
    *kconst = max_or(ks, 1.0);
    return true;
  };

  double k_st = 0.0, k_un = 0.0;
  if (k > 0 && fit_rate(fit_st, &cert.alpha, &k_st)) {
    // fitted
  } else {
    cert.alpha = 1.0;
    cert.stable_vacuous = cert.stable_vacuous || (k > 0);
  }
  if (q > 0 && fit_rate(fit_un, &cert.beta, &k_un)) {
    // fitted
  } else {
    cert.beta = 1.0;
    cert.unstable_vacuous = cert.unstable_vacuous || (q > 0);
  }
  cert.k = std::max({1.0, k_st, k_un});

  // Fresh pair family (offset half a pair spacing), bound re-checked with 5%
  // slack on the constant.
  PairSamples ver_st, ver_un;
  for (int j = std::max(1, per / 2); j <= nodes && cert.grid[j] + deltas.front() <= chi + 1e-9;
       j += per)
    measure(j, ver_st, ver_un, nullptr);
  bool ok = true;
  double margin = std::numeric_limits<double>::infinity();
  const auto check_side = [&](const PairSamples& ps, double rate) {
    for (std::size_t i = 0; i < ps.dt.size(); ++i) {
      const double bound = std::log(1.05 * cert.k) - rate * ps.dt[i];
      const double ratio = std::exp(bound - ps.log_lhs[i]);
      margin = std::min(margin, ratio);
      if (ratio < 1.0) ok = false;
    }
  };
  if (k > 0 && !cert.stable_vacuous) check_side(ver_st, cert.alpha);
  if (q > 0 && !cert.unstable_vacuous) check_side(ver_un, cert.beta);
  cert.verified = ok;
  cert.verify_margin = std::isfinite(margin) ? margin : 0.0;
  return cert;
}

LinkingResult linking_operators(const SystemSpec& spec, const CompleteSolution& base,
                                double t0, const DichotomyOptions& opts) {
  const auto pres = base.support.present();
  const auto absent = base.support.absent();
  const int m = static_cast<int>(pres.size());
  const int q = static_cast<int>(absent.size());
  if (m == 0 || q == 0)
    throw ArgError("linking needs both present and absent species in the base support");

  const JacFn J = base_jacobian(spec, base);
  const auto blockA = [&](double t) { return select_block(J(t), pres, pres); };
  const auto blockB = [&](double t) { return select_block(J(t), absent, absent); };
  const auto blockC = [&](double t) { return select_block(J(t), pres, absent); };

  const double flow_lo = base.flow.t_front(), flow_hi = base.flow.t_back();
  const Subspaces spl_a = split_spectrum(blockA, m, t0, opts, t0 - flow_lo, flow_hi - t0);
  const Subspaces spl_b = split_spectrum(blockB, q, t0, opts, t0 - flow_lo, flow_hi - t0);

  LinkingResult out;
  out.P_A = projection_from_frames(spl_a.stable, spl_a.unstable);
  out.P_B = projection_from_frames(spl_b.stable, spl_b.unstable);

  // One-sided integrals of the block flow against the coupling, truncated
  // once the integrand stops mattering. State = (F, Z, G) with
  // F' = -F A (a projected left propagator), Z' = B Z, G' = F C Z.
  const auto accumulate = [&](const Mat& F0, bool forward, Mat* G_out, double* tail,
                              bool* convergent, std::string* note) {
    *G_out = Mat::Zero(m, q);
    *tail = 0.0;
    if (F0.lpNorm<Eigen::Infinity>() < 1e-14) return;  // projected side empty: exact zero

    const int mm = m * m, qq = q * q;
    Vec y(mm + qq + m * q);
    Eigen::Map<Mat>(y.data(), m, m) = F0;
    Eigen::Map<Mat>(y.data() + mm, q, q) = Mat::Identity(q, q);
    Eigen::Map<Mat>(y.data() + mm + qq, m, q).setZero();

    const OdeRhs rhs = [&](double s, const Vec& st) {
      const Eigen::Map<const Mat> F(st.data(), m, m), Z(st.data() + mm, q, q);
      Vec d(st.size());
      Eigen::Map<Mat>(d.data(), m, m) = -F * blockA(s);
      Eigen::Map<Mat>(d.data() + mm, q, q) = blockB(s) * Z;
      Eigen::Map<Mat>(d.data() + mm + qq, m, q) = F * blockC(s) * Z;
      return d;
    };

    const double chunk = 5.0;
    const double s_end = forward ? std::min(t0 + 60.0, flow_hi) : std::max(t0 - 60.0, flow_lo);
    double cur = t0;
    double prev_norm = std::numeric_limits<double>::infinity();
    while (std::abs(s_end - cur) > 1e-9) {
      const double nxt = forward ? std::min(cur + chunk, s_end) : std::max(cur - chunk, s_end);
      const OdeSolution sol = integrate(rhs, cur, y, nxt, opts.ode);
      y = forward ? sol.y.back() : sol.y.front();  // states are stored by ascending time
      cur = nxt;
      const Eigen::Map<const Mat> F(y.data(), m, m), Z(y.data() + mm, q, q);
      const Eigen::Map<const Mat> G(y.data() + mm + qq, m, q);
      const double inorm = opnorm(F * blockC(cur) * Z);
      *tail = inorm;
      if (inorm < 1e-12 * (1.0 + G.lpNorm<Eigen::Infinity>())) break;
      if (inorm > prev_norm) {
        *convergent = false;
        *note += std::string(note->empty() ? "" : "; ") + "integrand grows " +
                 (forward ? "forward" : "backward") + " of the base time";
        break;
      }
      prev_norm = inorm;
    }
    *G_out = Eigen::Map<const Mat>(y.data() + mm + qq, m, q);
  };

  Mat g_plus, g_minus;
  const Mat eye_m = Mat::Identity(m, m);
  accumulate(eye_m - out.P_A, true, &g_plus, &out.tail_plus, &out.convergent, &out.note);
  accumulate(out.P_A, false, &g_minus, &out.tail_minus, &out.convergent, &out.note);
  out.Lplus = -g_plus;
  out.Lminus = g_minus;

  const Mat L = out.Lplus + out.Lminus;
  out.P_composed = Mat::Zero(m + q, m + q);
  out.P_composed.topLeftCorner(m, m) = out.P_A;
  out.P_composed.topRightCorner(m, q) = L;
  out.P_composed.bottomRightCorner(q, q) = out.P_B;
  out.idempotency = opnorm(out.P_composed * out.P_composed - out.P_composed);

  const int dim_u = static_cast<int>(spl_a.unstable.cols() + spl_b.unstable.cols());
  Mat basis_full(spec.n, dim_u);
  if (dim_u > 0) {
    const Mat ip = Mat::Identity(m + q, m + q) - out.P_composed;
    Eigen::ColPivHouseholderQR<Mat> qr(ip);
    const Mat qbig = qr.householderQ() * Mat::Identity(m + q, dim_u);
    for (int i = 0; i < m; ++i) basis_full.row(pres[i]) = qbig.row(i);
    for (int j = 0; j < q; ++j) basis_full.row(absent[j]) = qbig.row(m + j);
  }
  out.unstable_composed = basis_full;

  const Subspaces full = split_spectrum(J, spec.n, t0, opts, t0 - flow_lo, flow_hi - t0);
  out.agreement_angle = subspace_angle(basis_full, full.unstable);
  return out;
}

}  // namespace lvfa
