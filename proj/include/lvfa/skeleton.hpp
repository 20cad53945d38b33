#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lvfa/dichotomy.hpp"

namespace lvfa {

// Direction spanned by the backward-decaying bundle that puts equal positive
// weight 1/sqrt(m) on each of the m listed coordinates. Throws SkeletonError
// when the bundle's dimension does not match the coordinate count.
Vec seed_direction(const Mat& unstable, const std::vector<int>& absent);

struct TraceOptions {
  double t0 = 0.0;
  double horizon_forward = 40.0;   // arrival is checked at t0 + this
  double horizon_backward = 30.0;  // the seed sits this far before t0
  double forward_tol = 1e-5;       // admissible arrival distance
  double seed_tol = 1e-4;          // admissible seed displacement
  std::vector<double> alphas = {1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
  IntegrateOptions ode;
  DichotomyOptions splitting;  // for the seed basis at the seed time
};

// One certified heteroclinic run between two bounded trajectories whose
// supports are strictly nested. All data lives in the coordinates of the
// target's sub-community.
struct ConnectionTrace {
  SupportSet source, target;  // full-system supports
  double alpha = 0.0;         // accepted seed size (smallest that works)
  Vec direction;              // unit-transversal seed direction, sub coordinates
  double t_seed = 0.0, t_arrive = 0.0;
  double forward_error = 0.0;   // distance to the target at t_arrive
  double backward_error = 0.0;  // seed displacement from the source
  double departure_rate = 0.0;  // fitted growth of the gap to the source
  LvSolution path;              // sub-system run from t_seed to t_arrive
};

// Seeds the source trajectory with every admissible displacement size in
// ascending order and returns the first run that leaves the source
// monotonically and lands on the target. Throws SkeletonError when no seed
// size works, and requires source.support to be a proper subset of
// target.support.
ConnectionTrace trace_connection(const SystemSpec& spec, const CompleteSolution& source,
                                 const CompleteSolution& target, const TraceOptions& opts = {});

// Time at which the backward run from (t0, u0) first reaches escape_norm, or
// nothing when it stays below that over the whole backward horizon.
std::optional<double> detect_backward_unbounded(const SystemSpec& spec, const Vec& u0, double t0,
                                                double horizon = 500.0, double escape_norm = 1e3,
                                                const IntegrateOptions& ode = {});

struct SkeletonNode {
  SupportSet support;
  Witness witness;
  CompleteSolution star;
};

struct SkeletonEdge {
  SupportSet source, target;
  ConnectionTrace trace;
};

struct SkeletonOptions {
  TraceOptions trace;
  SearchConfig search;
  PullbackOptions pullback;
  std::uint64_t seed = 42;  // annotation sampling
  int annotation_starts = 20;
  double annotation_horizon = 60.0;
  double backward_horizon = 500.0;
  double escape_norm = 1e3;
};

// Attractor skeleton: every support with a certified bounded trajectory
// becomes a node, and every strictly nested pair of nodes is connected by a
// traced run in the larger support's sub-community. Nesting makes the graph
// acyclic with the zero state as its unique source.
struct Skeleton {
  RegimeCertification regime;
  std::vector<SkeletonNode> nodes;        // by ascending support mask
  std::vector<SkeletonEdge> edges;        // by (source mask, target mask)
  std::vector<std::string> annotations;   // random-start probes (extinction regimes)

  const SkeletonNode* node(const SupportSet& s) const;
};

// Certifies the regime, builds all nodes and edges, and annotates extinction
// regimes with random-start probes. Throws SkeletonError naming every edge
// that could not be traced.
Skeleton build_skeleton(const SystemSpec& spec, const SkeletonOptions& opts = {});

struct ClassifyOptions {
  double horizon_forward = 60.0;
  double horizon_backward = 500.0;
  double escape_norm = 1e3;
  double tol = 1e-5;
  IntegrateOptions ode;
};

// Where a given initial state sits relative to the skeleton: on a node, on a
// connection between two nodes, or on a run that is unbounded backward.
struct Classification {
  SupportSet support;  // exact-zero pattern of u0
  std::string label;   // "node:<tag>" | "connection:<src>-><dst>" |
                       // "unbounded-backward" | "unresolved"
  std::string detail;
  double forward_distance = 0.0;  // to the matched forward node at the horizon
  std::optional<double> backward_escape_time;
  std::optional<SupportSet> forward_node, backward_node;
};

Classification classify_initial(const SystemSpec& spec, const Skeleton& sk, const Vec& u0,
                                double t0 = 0.0, const ClassifyOptions& opts = {});

}  // namespace lvfa
