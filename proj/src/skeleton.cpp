#include "lvfa/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lvfa/errors.hpp"

namespace lvfa {

namespace {

std::string fmt3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

std::string vec_str(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt3(v[i]);
  }
  return s + ")";
}

// Re-expresses a bounded trajectory of the full system in the coordinates of
// the sub-community on `target` (which must contain its support). The dense
// interpolation data stores the logarithms of the present components in
// ascending index order, and dropping coordinates outside `target` preserves
// that order, so the stored steps remain valid verbatim; only the bookkeeping
// (support pattern, state length) changes.
CompleteSolution restrict_solution(const SystemSpec& spec, const CompleteSolution& full,
                                   const SupportSet& target) {
  if (!full.support.subset_of(target)) throw ArgError("trajectory support leaves the sub-community");
  const auto tp = target.present();
  std::vector<int> sub_idx;
  for (std::size_t r = 0; r < tp.size(); ++r)
    if (full.support.contains(tp[r])) sub_idx.push_back(static_cast<int>(r));
  const SupportSet sub = SupportSet::of(target.count(), sub_idx);

  CompleteSolution out;
  out.support = sub;
  out.t = full.t;
  out.u.reserve(full.u.size());
  for (const auto& v : full.u) out.u.push_back(restrict_state(v, target));
  out.horizon = full.horizon;
  out.residual = full.residual;

  out.witness = full.witness;
  out.witness.support = sub;
  for (Vec* f : {&out.witness.c, &out.witness.cbar, &out.witness.d, &out.witness.dbar})
    if (f->size() == spec.n) *f = restrict_state(*f, target);

  out.flow.t = full.flow.t;
  out.flow.u.reserve(full.flow.u.size());
  for (const auto& v : full.flow.u) out.flow.u.push_back(restrict_state(v, target));
  out.flow.reason = full.flow.reason;
  out.flow.stop_time = full.flow.stop_time;
  out.flow.support = sub;
  out.flow.steps = full.flow.steps;
  out.flow.full_n = target.count();
  return out;
}

}  // namespace

Vec seed_direction(const Mat& unstable, const std::vector<int>& absent) {
  const int m = static_cast<int>(absent.size());
  if (m == 0) throw SkeletonError("no transversal coordinates to seed");
  if (static_cast<int>(unstable.cols()) != m)
    throw SkeletonError("backward-decaying bundle has dimension " +
                        std::to_string(static_cast<int>(unstable.cols())) + " but " +
                        std::to_string(m) + " coordinates must be seeded");
  Mat rows(m, m);
  for (int r = 0; r < m; ++r) {
    if (absent[r] < 0 || absent[r] >= unstable.rows())
      throw SkeletonError("seed coordinate out of range");
    rows.row(r) = unstable.row(absent[r]);
  }
  Eigen::FullPivLU<Mat> lu(rows);
  if (!lu.isInvertible())
    throw SkeletonError("backward-decaying bundle is tangent to the seeded coordinates");
  const Vec x = lu.solve(Vec::Constant(m, 1.0 / std::sqrt(static_cast<double>(m))));
  return unstable * x;
}

ConnectionTrace trace_connection(const SystemSpec& spec, const CompleteSolution& source,
                                 const CompleteSolution& target, const TraceOptions& opts) {
  if (!source.support.proper_subset_of(target.support))
    throw ArgError("source support must be a proper subset of the target support");

  const SystemSpec sub = subcommunity(spec, target.support);
  const CompleteSolution src = restrict_solution(spec, source, target.support);
  const CompleteSolution dst = restrict_solution(spec, target, target.support);

  const double t_seed = opts.t0 - opts.horizon_backward;
  const double t_arrive = opts.t0 + opts.horizon_forward;
  if (t_seed < sub.window_lo || t_arrive > sub.window_hi)
    throw ArgError("trace horizons leave the time window");

  const Subspaces spl = subspaces(sub, src, t_seed, opts.splitting);
  const Vec v = seed_direction(spl.unstable, src.support.absent());
  const double vnorm = v.norm();

  std::string why = "no admissible seed size";
  for (double alpha : opts.alphas) {
    const double back_err = alpha * vnorm;
    if (back_err > opts.seed_tol) {
      why = "seed displacement " + fmt3(back_err) + " exceeds tolerance";
      continue;
    }
    Vec w = src.at(t_seed) + alpha * v;
    bool positive = true;
    for (int i = 0; i < sub.n; ++i)
      if (!(w[i] > 0.0)) positive = false;
    if (!positive) {
      why = "seed leaves the open positive cone";
      continue;
    }

    LvSolution run;
    try {
      run = lv_integrate(sub, t_seed, w, t_arrive, opts.ode);
    } catch (const Error& e) {
      why = e.what();
      continue;
    }
    if (run.reason != StopReason::Reached) {
      why = "seeded run left the bounded region";
      continue;
    }

    // The gap to the source must open monotonically while the run departs
    // and grow exponentially while still small. Once the gap saturates it
    // tracks the difference of two bounded trajectories, which oscillates
    // when the coefficients do, so monotonicity is only required up to the
    // first crossing of half the maximum gap.
    std::vector<double> ts, ds;
    for (double tq = t_seed; tq <= t_seed + opts.horizon_backward / 2.0 + 1e-9; tq += 0.5) {
      ts.push_back(tq);
      ds.push_back((run.eval(tq) - src.at(tq)).lpNorm<Eigen::Infinity>());
    }
    const double dmax = *std::max_element(ds.begin(), ds.end());
    const double jitter = std::max(1e-9, 1e-6 * dmax);
    std::size_t sat = ds.size() - 1;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds[i] > 0.5 * dmax) {
        sat = i;
        break;
      }
    bool monotone = true;
    for (std::size_t i = 0; i + 1 <= sat; ++i)
      if (ds[i + 1] < ds[i] - jitter) monotone = false;
    if (!monotone) {
      why = "gap to the source is not monotone";
      continue;
    }
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds[i] > 0.0 && ds[i] <= dmax / 10.0) {
        fx.push_back(ts[i]);
        fy.push_back(std::log(ds[i]));
      }
    const LineFit fit = fit_line(fx, fy);
    if (fit.count < 3 || !(fit.slope > 0.0)) {
      why = "departure from the source has no measurable exponential rate";
      continue;
    }

    const double forward_error = (run.eval(t_arrive) - dst.at(t_arrive)).lpNorm<Eigen::Infinity>();
    if (!(forward_error <= opts.forward_tol)) {
      why = "arrival misses the target by " + fmt3(forward_error);
      continue;
    }

    ConnectionTrace out;
    out.source = source.support;
    out.target = target.support;
    out.alpha = alpha;
    out.direction = v;
    out.t_seed = t_seed;
    out.t_arrive = t_arrive;
    out.forward_error = forward_error;
    out.backward_error = back_err;
    out.departure_rate = fit.slope;
    out.path = std::move(run);
    return out;
  }
  throw SkeletonError("no run connects " + source.support.label() + " to " +
                      target.support.label() + ": " + why);
}

std::optional<double> detect_backward_unbounded(const SystemSpec& spec, const Vec& u0, double t0,
                                                double horizon, double escape_norm,
                                                const IntegrateOptions& ode) {
  IntegrateOptions io = ode;
  io.escape_norm = escape_norm;
  const LvSolution run = lv_integrate(spec, t0, u0, t0 - horizon, io);
  if (run.reason == StopReason::Escaped || run.reason == StopReason::Diverged)
    return run.stop_time;
  return std::nullopt;
}

const SkeletonNode* Skeleton::node(const SupportSet& s) const {
  for (const auto& n : nodes)
    if (n.support == s) return &n;
  return nullptr;
}

Skeleton build_skeleton(const SystemSpec& spec, const SkeletonOptions& opts) {
  Skeleton sk;
  sk.regime = certify_regime(spec, opts.search);

  const SupportSurvey survey = list_complete_solutions(spec, opts.search);
  for (const auto& item : survey.items) {
    if (!item.certified) continue;
    SkeletonNode node;
    node.support = item.support;
    node.witness = item.witness;
    node.star = compute_star(spec, item.witness, opts.pullback);
    sk.nodes.push_back(std::move(node));
  }

  struct Job {
    std::size_t src, dst;
  };
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < sk.nodes.size(); ++a)
    for (std::size_t b = 0; b < sk.nodes.size(); ++b)
      if (sk.nodes[a].support.proper_subset_of(sk.nodes[b].support)) jobs.push_back({a, b});

  std::vector<std::optional<SkeletonEdge>> slots(jobs.size());
  std::vector<std::string> failures(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), [&](int j) {
    const Job& job = jobs[static_cast<std::size_t>(j)];
    try {
      SkeletonEdge e;
      e.source = sk.nodes[job.src].support;
      e.target = sk.nodes[job.dst].support;
      e.trace = trace_connection(spec, sk.nodes[job.src].star, sk.nodes[job.dst].star, opts.trace);
      slots[static_cast<std::size_t>(j)] = std::move(e);
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(j)] = sk.nodes[job.src].support.label() + "->" +
                                              sk.nodes[job.dst].support.label() + " (" + e.what() +
                                              ")";
    }
  });
  std::string failed;
  for (const auto& f : failures)
    if (!f.empty()) failed += (failed.empty() ? "" : "; ") + f;
  if (!failed.empty()) throw SkeletonError("untraceable edges: " + failed);
  for (auto& s : slots) sk.edges.push_back(std::move(*s));

  if (sk.regime.kind != RegimeCertification::Kind::Permanence) {
    const SkeletonNode* att = sk.node(sk.regime.attractor_support);
    Vec hi = Vec::Constant(spec.n, 2.0);
    if (sk.regime.witness.d.size() == spec.n)
      for (int i = 0; i < spec.n; ++i) hi[i] = 2.0 * std::max(sk.regime.witness.d[i], 1e-3);
    Rng rng(opts.seed);
    const double t_f = std::min(opts.trace.t0 + opts.annotation_horizon, spec.window_hi);
    for (int k = 0; k < opts.annotation_starts; ++k) {
      const Vec u0 = rng.positive_box(hi);
      std::string line = "start " + std::to_string(k) + ": u0=" + vec_str(u0);
      const LvSolution fwd = lv_integrate(spec, opts.trace.t0, u0, t_f, opts.trace.ode);
      if (fwd.reason == StopReason::Reached && att != nullptr) {
        const double gap = (fwd.eval(t_f) - att->star.at(t_f)).lpNorm<Eigen::Infinity>();
        line += "; forward gap to " + att->support.label() + " at t=" + fmt3(t_f) + ": " + fmt3(gap);
      } else {
        line += "; forward run did not settle";
      }
      const auto esc = detect_backward_unbounded(spec, u0, opts.trace.t0, opts.backward_horizon,
                                                 opts.escape_norm, opts.trace.ode);
      if (esc)
        line += "; backward escape at t=" + fmt3(*esc);
      else
        line += "; backward run bounded over " + fmt3(opts.backward_horizon) + " units";
      sk.annotations.push_back(std::move(line));
    }
  }
  return sk;
}

Classification classify_initial(const SystemSpec& spec, const Skeleton& sk, const Vec& u0,
                                double t0, const ClassifyOptions& opts) {
  if (static_cast<int>(u0.size()) != spec.n) throw ArgError("initial state has wrong length");
  for (int i = 0; i < spec.n; ++i)
    if (u0[i] < 0.0) throw ArgError("initial state must be nonnegative");
  if (t0 < spec.window_lo || t0 > spec.window_hi) throw ArgError("start time outside the window");

  Classification c;
  c.support = support_of(u0);

  for (const auto& node : sk.nodes) {
    const double d = (u0 - node.star.at(t0)).lpNorm<Eigen::Infinity>();
    if (d < opts.tol) {
      c.label = "node:" + node.support.tag();
      c.detail = "within " + fmt3(opts.tol) + " of the bounded state on " + node.support.label();
      c.forward_distance = d;
      c.forward_node = node.support;
      c.backward_node = node.support;
      return c;
    }
  }

  // Forward: does the run settle onto a unique node by the horizon?
  const double t_f = std::min(t0 + opts.horizon_forward, spec.window_hi);
  const SkeletonNode* fnode = nullptr;
  double fmin = std::numeric_limits<double>::infinity();
  bool forward_settled = false;
  const LvSolution fwd = lv_integrate(spec, t0, u0, t_f, opts.ode);
  if (fwd.reason == StopReason::Reached) {
    forward_settled = true;
    const Vec z = fwd.eval(t_f);
    int matches = 0;
    for (const auto& node : sk.nodes) {
      const double d = (z - node.star.at(t_f)).lpNorm<Eigen::Infinity>();
      fmin = std::min(fmin, d);
      if (d < opts.tol) {
        ++matches;
        fnode = &node;
      }
    }
    if (matches != 1) fnode = nullptr;
  }
  c.forward_distance = fmin;
  if (fnode) c.forward_node = fnode->support;

  // Backward: escape, or settle onto a node at the far end of the window?
  c.backward_escape_time =
      detect_backward_unbounded(spec, u0, t0, opts.horizon_backward, opts.escape_norm, opts.ode);
  const SkeletonNode* bnode = nullptr;
  if (!c.backward_escape_time) {
    const double t_b = std::max(t0 - opts.horizon_backward, spec.window_lo);
    const LvSolution bwd = lv_integrate(spec, t0, u0, t0 - opts.horizon_backward, opts.ode);
    if (bwd.reason == StopReason::Reached) {
      const Vec z = bwd.eval(t_b);
      int matches = 0;
      for (const auto& node : sk.nodes) {
        if ((z - node.star.at(t_b)).lpNorm<Eigen::Infinity>() < opts.tol) {
          ++matches;
          bnode = &node;
        }
      }
      if (matches != 1) bnode = nullptr;
    }
  }
  if (bnode) c.backward_node = bnode->support;

  if (c.backward_escape_time) {
    c.label = "unbounded-backward";
    c.detail = "backward run reaches norm " + fmt3(opts.escape_norm) + " at t=" +
               fmt3(*c.backward_escape_time);
    if (fnode) c.detail += "; forward limit " + fnode->support.label();
  } else if (fnode && bnode && bnode->support.proper_subset_of(fnode->support)) {
    c.label = "connection:" + bnode->support.tag() + "->" + fnode->support.tag();
    c.detail = "backward limit " + bnode->support.label() + ", forward limit " +
               fnode->support.label();
  } else {
    c.label = "unresolved";
    if (!forward_settled)
      c.detail = "forward run did not settle";
    else if (!fnode)
      c.detail = "no unique forward node within tolerance";
    else if (!bnode)
      c.detail = "backward run bounded but resolves no unique node";
    else
      c.detail = "backward node does not feed the forward node";
  }
  return c;
}

}  // namespace lvfa
