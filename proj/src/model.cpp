#include "lvfa/model.hpp"

#include <cmath>

namespace lvfa {

std::vector<SpecViolation> validate_spec(const SystemSpec& spec) {
  std::vector<SpecViolation> out;
  if (spec.n <= 0 || spec.n > 32) {
    out.push_back({"shape", -1, -1, 0.0, "dimension must be in [1, 32]"});
    return out;
  }
  if (static_cast<int>(spec.a.size()) != spec.n) {
    out.push_back({"shape", -1, -1, 0.0, "a must have n entries"});
    return out;
  }
  if (static_cast<int>(spec.b.size()) != spec.n) {
    out.push_back({"shape", -1, -1, 0.0, "b must have n rows"});
    return out;
  }
  for (int i = 0; i < spec.n; ++i)
    if (static_cast<int>(spec.b[i].size()) != spec.n) {
      out.push_back({"shape", i, -1, 0.0, "b row " + std::to_string(i + 1) + " must have n entries"});
      return out;
    }
  if (!(spec.window_lo < spec.window_hi) || spec.sample_count < 2) {
    out.push_back({"shape", -1, -1, 0.0, "bad check window or sample count"});
    return out;
  }

  const int m = spec.sample_count;
  const double step = (spec.window_hi - spec.window_lo) / static_cast<double>(m - 1);

  // One violation record per coefficient, first witness time wins.
  for (int i = 0; i < spec.n; ++i) {
    for (int j = 0; j < spec.n; ++j) {
      const int mm = spec.b[i][j].is_constant() ? 1 : m;
      bool flagged = false;
      for (int k = 0; k < mm && !flagged; ++k) {
        const double t = (k == m - 1) ? spec.window_hi : spec.window_lo + step * k;
        double v;
        try {
          v = spec.b[i][j].eval(t);
        } catch (const EvalError& e) {
          out.push_back({"evaluation", i, j, t, e.what()});
          flagged = true;
          continue;
        }
        if (i == j && !(v > 0.0)) {
          out.push_back({"self-limitation", i, j, t,
                         "b_" + std::to_string(i + 1) + std::to_string(j + 1) + " = " +
                             format_double(v) + " not positive at t=" + format_double(t)});
          flagged = true;
        } else if (i != j && v > 1e-12) {
          out.push_back({"cooperativity", i, j, t,
                         "b_" + std::to_string(i + 1) + std::to_string(j + 1) + " = " +
                             format_double(v) + " positive at t=" + format_double(t)});
          flagged = true;
        }
      }
    }
    const int ma = spec.a[i].is_constant() ? 1 : m;
    bool flagged = false;
    for (int k = 0; k < ma && !flagged; ++k) {
      const double t = (k == ma - 1) ? spec.window_hi : spec.window_lo + step * k;
      try {
        const double v = spec.a[i].eval(t);
        if (!std::isfinite(v)) {
          out.push_back({"evaluation", i, -1, t, "a_" + std::to_string(i + 1) + " not finite"});
          flagged = true;
        }
      } catch (const EvalError& e) {
        out.push_back({"evaluation", i, -1, t, e.what()});
        flagged = true;
      }
    }
  }
  return out;
}

void require_valid(const SystemSpec& spec) {
  const auto v = validate_spec(spec);
  if (!v.empty()) throw ArgError("invalid system: " + v.front().message);
}

SystemSpec subcommunity(const SystemSpec& spec, const SupportSet& s) {
  const auto idx = s.present();
  SystemSpec out;
  out.n = static_cast<int>(idx.size());
  out.window_lo = spec.window_lo;
  out.window_hi = spec.window_hi;
  out.sample_count = spec.sample_count;
  out.a.reserve(out.n);
  for (int i : idx) out.a.push_back(spec.a[i]);
  out.b.resize(out.n);
  for (int r = 0; r < out.n; ++r) {
    out.b[r].reserve(out.n);
    for (int c = 0; c < out.n; ++c) out.b[r].push_back(spec.b[idx[r]][idx[c]]);
  }
  return out;
}

Vec embed_state(const Vec& sub, const SupportSet& s) {
  Vec out = Vec::Zero(s.n());
  const auto idx = s.present();
  for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = sub[static_cast<Eigen::Index>(k)];
  return out;
}

Vec restrict_state(const Vec& full, const SupportSet& s) {
  const auto idx = s.present();
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = full[idx[k]];
  return out;
}

Vec vector_field(const SystemSpec& spec, double t, const Vec& u) {
  Vec du(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    double g = spec.a[i].eval(t);
    for (int j = 0; j < spec.n; ++j) g -= spec.b[i][j].eval(t) * u[j];
    du[i] = u[i] * g;
  }
  return du;
}

SupportSet support_of(const Vec& u) {
  std::uint32_t m = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u[i] != 0.0) m |= (1u << i);
  return SupportSet(static_cast<int>(u.size()), m);
}

CoeffBounds coefficient_bounds(const SystemSpec& spec) {
  CoeffBounds cb;
  cb.a_inf.resize(spec.n);
  cb.a_sup.resize(spec.n);
  cb.b_inf.resize(spec.n, spec.n);
  cb.b_sup.resize(spec.n, spec.n);
  for (int i = 0; i < spec.n; ++i) {
    const auto ba = estimate_bounds(spec.a[i], spec.window_lo, spec.window_hi, spec.sample_count);
    cb.a_inf[i] = ba.inf;
    cb.a_sup[i] = ba.sup;
    for (int j = 0; j < spec.n; ++j) {
      const auto bb =
          estimate_bounds(spec.b[i][j], spec.window_lo, spec.window_hi, spec.sample_count);
      cb.b_inf(i, j) = bb.inf;
      cb.b_sup(i, j) = bb.sup;
    }
  }
  return cb;
}

}  // namespace lvfa
