#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvfa/expr.hpp"
#include "lvfa/util.hpp"

namespace lvfa {

// Subset of species indices (0-based internally, 1-based in labels/IO).
class SupportSet {
 public:
  SupportSet() = default;
  SupportSet(int n, std::uint32_t mask) : n_(n), mask_(mask) {}

  static SupportSet full(int n) { return SupportSet(n, n >= 32 ? 0 : ((1u << n) - 1u)); }
  static SupportSet none(int n) { return SupportSet(n, 0); }
  static SupportSet of(int n, const std::vector<int>& idx) {
    std::uint32_t m = 0;
    for (int i : idx) m |= (1u << i);
    return SupportSet(n, m);
  }

  int n() const { return n_; }
  std::uint32_t mask() const { return mask_; }
  bool contains(int i) const { return (mask_ >> i) & 1u; }
  int count() const { return __builtin_popcount(mask_); }
  bool empty() const { return mask_ == 0; }
  bool is_full() const { return count() == n_; }

  std::vector<int> present() const {
    std::vector<int> out;
    for (int i = 0; i < n_; ++i)
      if (contains(i)) out.push_back(i);
    return out;
  }
  std::vector<int> absent() const {
    std::vector<int> out;
    for (int i = 0; i < n_; ++i)
      if (!contains(i)) out.push_back(i);
    return out;
  }

  bool subset_of(const SupportSet& o) const { return (mask_ & ~o.mask_) == 0; }
  bool proper_subset_of(const SupportSet& o) const { return subset_of(o) && mask_ != o.mask_; }
  bool operator==(const SupportSet& o) const { return n_ == o.n_ && mask_ == o.mask_; }
  bool operator!=(const SupportSet& o) const { return !(*this == o); }

  // "{1,3}" with 1-based indices; "{}" for the empty set.
  std::string label() const {
    std::string s = "{";
    bool first = true;
    for (int i = 0; i < n_; ++i)
      if (contains(i)) {
        if (!first) s += ",";
        s += std::to_string(i + 1);
        first = false;
      }
    return s + "}";
  }

  // Filesystem-safe tag: "s13" for {1,3}, "s0" for the empty set.
  std::string tag() const {
    std::string s = "s";
    for (int i = 0; i < n_; ++i)
      if (contains(i)) s += std::to_string(i + 1);
    if (s.size() == 1) s += "0";
    return s;
  }

 private:
  int n_ = 0;
  std::uint32_t mask_ = 0;
};

// u_i' = u_i (a_i(t) - sum_j b_ij(t) u_j) with positive self-limitation
// b_ii > 0 and non-positive interaction terms b_ij <= 0 (i != j), so species
// help (or at worst ignore) each other.
struct SystemSpec {
  int n = 0;
  std::vector<TimeFn> a;                // growth rates, size n
  std::vector<std::vector<TimeFn>> b;   // interaction matrix, n x n
  double window_lo = -200.0;            // sign checks/sampled bounds use this window
  double window_hi = 200.0;
  int sample_count = 40001;
};

struct SpecViolation {
  std::string kind;  // "shape" | "self-limitation" | "cooperativity" | "evaluation"
  int i = -1, j = -1;  // 0-based coefficient position; j = -1 for a_i
  double t = 0.0;
  std::string message;
};

// Checks shapes, b_ii(t) > 0, and b_ij(t) <= 1e-12 for i != j on the sampling
// grid. Empty result means the spec passed.
std::vector<SpecViolation> validate_spec(const SystemSpec& spec);

// Throwing wrapper around validate_spec (first violation wins).
void require_valid(const SystemSpec& spec);

// The system restricted to the species in s (rows/columns dropped). The
// ordering of s.present() defines the sub-system's coordinates.
SystemSpec subcommunity(const SystemSpec& spec, const SupportSet& s);

// Scatter a sub-system state into full coordinates, exact zeros elsewhere.
Vec embed_state(const Vec& sub, const SupportSet& s);
// Gather the coordinates in s from a full state.
Vec restrict_state(const Vec& full, const SupportSet& s);

// Right-hand side u_i (a_i(t) - sum_j b_ij(t) u_j).
Vec vector_field(const SystemSpec& spec, double t, const Vec& u);

// Exact-zero pattern of a state vector (bit-zero test).
SupportSet support_of(const Vec& u);

// Sampled-or-declared ranges of every coefficient over the check window.
struct CoeffBounds {
  Vec a_inf, a_sup;
  Mat b_inf, b_sup;
};
CoeffBounds coefficient_bounds(const SystemSpec& spec);

}  // namespace lvfa
