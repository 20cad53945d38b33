#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "lvfa/errors.hpp"
#include "lvfa/skeleton.hpp"
#include "lvfa/specfile.hpp"

namespace {

using namespace lvfa;

struct Common {
  std::string spec_path;
  std::string out_dir;
  std::vector<double> window;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("spec", c.spec_path, "system spec JSON file")->required();
  sub->add_option("-o,--out", c.out_dir, "directory for generated files");
  sub->add_option("--window", c.window, "override the check/integration window")
      ->expected(2)
      ->type_name("LO HI");
}

SpecFile load(const Common& c) {
  SpecFile f = load_spec(c.spec_path);
  if (c.window.size() == 2) {
    if (!(c.window[0] < c.window[1])) throw ArgError("--window must satisfy LO < HI");
    f.spec.window_lo = c.window[0];
    f.spec.window_hi = c.window[1];
  }
  return f;
}

void emit_file(const Common& c, const std::string& name, const std::string& content) {
  if (!c.out_dir.empty()) write_file_atomic(c.out_dir + "/" + name, content);
}

void print_doc(const Common& c, const std::string& json, const std::string& filename) {
  std::cout << json << "\n";
  emit_file(c, filename, json + "\n");
}

void header_json(JsonWriter& w, const SpecFile& f) {
  w.key("file").value(f.name);
  w.key("n").value(f.spec.n);
  w.key("window").begin_array().value(f.spec.window_lo).value(f.spec.window_hi).end_array();
}

double tolerance_or(const SpecFile& f, const std::string& key, double cli_tol, double fallback) {
  if (cli_tol > 0.0) return cli_tol;
  const auto it = f.tolerances.find(key);
  return it != f.tolerances.end() ? it->second : fallback;
}

// ---------------------------------------------------------------- check ----

struct CheckFlags {
  bool h1 = false, h2 = false, a = false, b = false;
  bool no_search = false;
  std::string support_tag;
};

int cmd_check(const Common& c, const CheckFlags& fl) {
  const SpecFile f = load(c);
  JsonWriter w;
  w.begin_object();
  header_json(w, f);

  const auto violations = validate_spec(f.spec);
  w.key("valid").value(violations.empty());
  if (!violations.empty()) {
    w.key("violations").begin_array();
    for (const auto& v : violations) {
      w.begin_object();
      w.key("kind").value(v.kind);
      w.key("i").value(v.i + 1);
      w.key("j").value(v.j + 1);  // 0 marks a growth-rate entry
      w.key("t").value(v.t);
      w.key("message").value(v.message);
      w.end_object();
    }
    w.end_array();
    w.key("pass").value(false);
    w.end_object();
    print_doc(c, w.str(), "check.json");
    return 2;
  }

  bool all_pass = true;
  const bool any_flag = fl.h1 || fl.h2 || fl.a || fl.b;
  if (!any_flag) {
    // Full pipeline: certify the long-run regime.
    try {
      const RegimeCertification reg = certify_regime(f.spec);
      w.key("regime").value(reg.describe());
      w.key("attractor").value(reg.attractor_support.label());
      w.key("attractor_tag").value(reg.attractor_support.tag());
      w.key("witness");
      witness_json(w, reg.witness, f.spec.n);
      w.key("conditions").begin_array();
      for (const auto& r : reg.reports) report_json(w, r);
      w.end_array();
    } catch (const CertError& e) {
      w.key("regime").null();
      w.key("error").value(e.what());
      all_pass = false;
    }
  } else {
    const SupportSet support = fl.support_tag.empty()
                                   ? (f.witness ? f.witness->support : SupportSet::full(f.spec.n))
                                   : parse_support_tag(fl.support_tag, f.spec.n);
    w.key("conditions").begin_array();
    auto witness_for = [&](ConditionKind kind, const char* name, auto have_fields) -> Witness {
      if (f.witness && have_fields(*f.witness)) return *f.witness;
      if (fl.no_search)
        throw ArgError(std::string("witness required for ") + name + " (--no-search given)");
      const SearchOutcome out = search_witness(f.spec, kind, support);
      if (!out.witness) throw CertError(std::string(name) + ": " + out.note);
      return *out.witness;
    };
    const int n = f.spec.n;
    auto run = [&](ConditionKind kind, const char* name,
                   std::function<bool(const Witness&)> have_fields,
                   std::function<ConditionReport(const Witness&)> check) {
      try {
        const Witness wit = witness_for(kind, name, have_fields);
        const ConditionReport r = check(wit);
        report_json(w, r);
        all_pass = all_pass && r.passed();
      } catch (const CertError& e) {
        w.begin_object();
        w.key("condition").value(name);
        w.key("verdict").value("fail");
        w.key("note").value(e.what());
        w.end_object();
        all_pass = false;
      }
    };
    if (fl.h1)
      run(
          ConditionKind::H1, "H1",
          [&](const Witness& x) { return x.c.size() == n && x.delta > 0.0; },
          [&](const Witness& x) { return check_h1(f.spec, x.c, x.delta); });
    if (fl.h2)
      run(
          ConditionKind::H2, "H2",
          [&](const Witness& x) { return x.cbar.size() == n && x.delta > 0.0; },
          [&](const Witness& x) { return check_h2(f.spec, x.cbar, x.delta); });
    if (fl.a)
      run(
          ConditionKind::A, "A",
          [&](const Witness& x) { return x.d.size() == n && x.dbar.size() == n; },
          [&](const Witness& x) { return check_a(f.spec, x.d, x.dbar, support); });
    if (fl.b)
      run(
          ConditionKind::B, "B",
          [&](const Witness& x) {
            return x.c.size() == n && x.d.size() == n && x.dbar.size() == n && x.eps > 0.0;
          },
          [&](const Witness& x) {
            Witness y = x;
            y.support = support;
            return check_b(f.spec, y);
          });
    w.end_array();
  }
  w.key("pass").value(all_pass);
  w.end_object();
  print_doc(c, w.str(), "check.json");
  return all_pass ? 0 : 2;
}

// ----------------------------------------------------------------- star ----

int cmd_star(const Common& c, const std::string& support_tag, double cli_tol) {
  const SpecFile f = load(c);
  require_valid(f.spec);
  PullbackOptions popt;
  popt.tol = tolerance_or(f, "pullback", cli_tol, popt.tol);

  const SupportSurvey survey = list_complete_solutions(f.spec);
  std::vector<const SupportSurvey::Item*> selected;
  std::string miss;
  if (support_tag.empty()) {
    for (const auto& it : survey.items)
      if (it.certified) selected.push_back(&it);
  } else {
    const SupportSet want = parse_support_tag(support_tag, f.spec.n);
    for (const auto& it : survey.items)
      if (it.support == want) {
        if (it.certified)
          selected.push_back(&it);
        else
          miss = it.note;
      }
    if (selected.empty() && miss.empty()) miss = "support not found in the survey";
  }

  JsonWriter w;
  w.begin_object();
  header_json(w, f);
  if (selected.empty()) {
    w.key("error").value("no bounded trajectory certified: " + miss);
    w.end_object();
    print_doc(c, w.str(), "star.json");
    return 2;
  }
  w.key("stars").begin_array();
  for (const auto* it : selected) {
    const CompleteSolution star = compute_star(f.spec, it->witness, popt);
    const std::string tag = it->support.tag();
    const std::string csv_name = "star_" + tag + ".csv";
    emit_file(c, csv_name, trajectory_csv(star.t, star.u));
    JsonWriter side;
    side.begin_object();
    side.key("support").value(it->support.label());
    side.key("tag").value(tag);
    side.key("horizon").value(star.horizon);
    side.key("residual").value(star.residual);
    side.key("window").begin_array().value(f.spec.window_lo).value(f.spec.window_hi).end_array();
    side.key("witness");
    witness_json(side, it->witness, f.spec.n);
    side.key("csv").value(csv_name);
    side.end_object();
    emit_file(c, "star_" + tag + ".json", side.str() + "\n");

    w.begin_object();
    w.key("support").value(it->support.label());
    w.key("tag").value(tag);
    w.key("horizon").value(star.horizon);
    w.key("residual").value(star.residual);
    w.key("csv").value(csv_name);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  print_doc(c, w.str(), "star.json");
  return 0;
}

// ------------------------------------------------------------ dichotomy ----

void certificate_json(JsonWriter& w, const DichotomyCertificate& cert, const SupportSet& base) {
  w.begin_object();
  w.key("support").value(base.label());
  w.key("tag").value(base.tag());
  w.key("stable_dim").value(cert.stable_dim);
  w.key("unstable_dim").value(cert.unstable_dim);
  w.key("alpha").value(cert.alpha);
  w.key("beta").value(cert.beta);
  w.key("k").value(cert.k);
  w.key("residual_invariance").value(cert.residual_invariance);
  w.key("residual_idempotent").value(cert.residual_idempotent);
  w.key("stable_vacuous").value(cert.stable_vacuous);
  w.key("unstable_vacuous").value(cert.unstable_vacuous);
  w.key("verified").value(cert.verified);
  w.key("verify_margin").value(cert.verify_margin);
  w.key("window").begin_array().value(cert.grid.front()).value(cert.grid.back()).end_array();
  w.key("P").begin_array();
  for (const double tq :
       {cert.grid.front(), cert.grid[cert.grid.size() / 2], cert.grid.back()}) {
    w.begin_object();
    w.key("t").value(tq);
    w.key("rows").begin_array();
    const Mat& P = cert.P_at(tq);
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      w.begin_array();
      for (Eigen::Index j = 0; j < P.cols(); ++j) w.value(P(i, j));
      w.end_array();
    }
    w.end_array();
    w.end_object();
  }
  w.end_array();
  w.end_object();
}

int cmd_dichotomy(const Common& c, const std::string& support_tag) {
  const SpecFile f = load(c);
  require_valid(f.spec);

  const SupportSurvey survey = list_complete_solutions(f.spec);
  std::vector<const SupportSurvey::Item*> selected;
  if (support_tag.empty()) {
    for (const auto& it : survey.items)
      if (it.certified) selected.push_back(&it);
  } else {
    const SupportSet want = parse_support_tag(support_tag, f.spec.n);
    for (const auto& it : survey.items)
      if (it.certified && it.support == want) selected.push_back(&it);
    if (selected.empty()) {
      JsonWriter w;
      w.begin_object();
      header_json(w, f);
      w.key("error").value("no bounded trajectory certified on " + support_tag);
      w.end_object();
      print_doc(c, w.str(), "dichotomy.json");
      return 2;
    }
  }

  JsonWriter w;
  w.begin_object();
  header_json(w, f);
  w.key("certificates").begin_array();
  bool all_ok = true;
  for (const auto* it : selected) {
    try {
      const CompleteSolution star = compute_star(f.spec, it->witness);
      const DichotomyCertificate cert = build_certificate(f.spec, star);
      certificate_json(w, cert, it->support);
      all_ok = all_ok && cert.verified;
      JsonWriter side;
      certificate_json(side, cert, it->support);
      emit_file(c, "dichotomy_" + it->support.tag() + ".json", side.str() + "\n");
    } catch (const Error& e) {
      w.begin_object();
      w.key("support").value(it->support.label());
      w.key("tag").value(it->support.tag());
      w.key("error").value(e.what());
      w.end_object();
      all_ok = false;
    }
  }
  w.end_array();
  w.key("pass").value(all_ok);
  w.end_object();
  print_doc(c, w.str(), "dichotomy.json");
  return all_ok ? 0 : 2;
}

// ------------------------------------------------------------- skeleton ----

std::string skeleton_dot(const Skeleton& sk) {
  std::string dot = "digraph skeleton {\n  rankdir=BT;\n";
  for (const auto& node : sk.nodes)
    dot += "  " + node.support.tag() + " [label=\"" + node.support.label() + "\"];\n";
  for (const auto& e : sk.edges) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", e.trace.alpha);
    dot += "  " + e.source.tag() + " -> " + e.target.tag() + " [label=\"" + buf + "\"];\n";
  }
  dot += "}\n";
  return dot;
}

std::string skeleton_json(const SpecFile& f, const Skeleton& sk) {
  JsonWriter w;
  w.begin_object();
  header_json(w, f);
  w.key("regime").value(sk.regime.describe());
  w.key("attractor").value(sk.regime.attractor_support.label());
  w.key("nodes").begin_array();
  for (const auto& node : sk.nodes) {
    w.begin_object();
    w.key("support").value(node.support.label());
    w.key("tag").value(node.support.tag());
    w.key("horizon").value(node.star.horizon);
    w.key("residual").value(node.star.residual);
    w.key("witness");
    witness_json(w, node.witness, f.spec.n);
    w.key("csv").value("star_" + node.support.tag() + ".csv");
    w.end_object();
  }
  w.end_array();
  w.key("edges").begin_array();
  for (const auto& e : sk.edges) {
    w.begin_object();
    w.key("source").value(e.source.tag());
    w.key("target").value(e.target.tag());
    w.key("alpha").value(e.trace.alpha);
    w.key("t_seed").value(e.trace.t_seed);
    w.key("t_arrive").value(e.trace.t_arrive);
    w.key("forward_error").value(e.trace.forward_error);
    w.key("backward_error").value(e.trace.backward_error);
    w.key("departure_rate").value(e.trace.departure_rate);
    w.key("csv").value("edge_" + e.source.tag() + "_" + e.target.tag() + ".csv");
    w.end_object();
  }
  w.end_array();
  w.key("annotations").begin_array();
  for (const auto& s : sk.annotations) w.value(s);
  w.end_array();
  w.end_object();
  return w.str();
}

std::string edge_csv(const SkeletonEdge& e) {
  std::vector<Vec> full;
  full.reserve(e.trace.path.u.size());
  for (const auto& u : e.trace.path.u) full.push_back(embed_state(u, e.target));
  return trajectory_csv(e.trace.path.t, full);
}

int cmd_skeleton(const Common& c, std::uint64_t seed, double cli_tol) {
  const SpecFile f = load(c);
  require_valid(f.spec);
  SkeletonOptions opts;
  opts.seed = seed;
  opts.trace.forward_tol = tolerance_or(f, "forward", cli_tol, opts.trace.forward_tol);

  const Skeleton sk = build_skeleton(f.spec, opts);
  for (const auto& node : sk.nodes)
    emit_file(c, "star_" + node.support.tag() + ".csv",
              trajectory_csv(node.star.t, node.star.u));
  for (const auto& e : sk.edges)
    emit_file(c, "edge_" + e.source.tag() + "_" + e.target.tag() + ".csv", edge_csv(e));
  emit_file(c, "skeleton.dot", skeleton_dot(sk));
  print_doc(c, skeleton_json(f, sk), "skeleton.json");
  return 0;
}

// ------------------------------------------------------------- classify ----

int cmd_classify(const Common& c, const std::vector<double>& u0_values, double t0, double cli_tol,
                 std::uint64_t seed) {
  const SpecFile f = load(c);
  require_valid(f.spec);
  if (static_cast<int>(u0_values.size()) != f.spec.n)
    throw ArgError("--u0 needs exactly n components");
  Vec u0(f.spec.n);
  for (int i = 0; i < f.spec.n; ++i) u0[i] = u0_values[i];

  SkeletonOptions sopt;
  sopt.seed = seed;
  const Skeleton sk = build_skeleton(f.spec, sopt);
  ClassifyOptions copt;
  copt.tol = tolerance_or(f, "classify", cli_tol, copt.tol);
  const Classification cls = classify_initial(f.spec, sk, u0, t0, copt);

  JsonWriter w;
  w.begin_object();
  header_json(w, f);
  w.key("u0").begin_array();
  for (int i = 0; i < f.spec.n; ++i) w.value(u0[i]);
  w.end_array();
  w.key("t0").value(t0);
  w.key("support").value(cls.support.label());
  w.key("label").value(cls.label);
  w.key("detail").value(cls.detail);
  w.key("forward_distance").value(cls.forward_distance);
  w.key("backward_escape_time");
  if (cls.backward_escape_time)
    w.value(*cls.backward_escape_time);
  else
    w.null();
  w.key("forward_node");
  if (cls.forward_node)
    w.value(cls.forward_node->tag());
  else
    w.null();
  w.key("backward_node");
  if (cls.backward_node)
    w.value(cls.backward_node->tag());
  else
    w.null();
  w.end_object();
  print_doc(c, w.str(), "classify.json");
  return 0;
}

// ---------------------------------------------------------------- trace ----

int cmd_trace(const Common& c, const std::string& source_tag, const std::string& target_tag,
              double cli_tol) {
  const SpecFile f = load(c);
  require_valid(f.spec);
  const SupportSet src = parse_support_tag(source_tag, f.spec.n);
  const SupportSet dst = parse_support_tag(target_tag, f.spec.n);

  const SupportSurvey survey = list_complete_solutions(f.spec);
  const SupportSurvey::Item *si = nullptr, *ti = nullptr;
  for (const auto& it : survey.items) {
    if (it.support == src && it.certified) si = &it;
    if (it.support == dst && it.certified) ti = &it;
  }
  if (!si || !ti)
    throw SkeletonError(std::string("no bounded trajectory certified on ") +
                        (!si ? source_tag : target_tag));

  TraceOptions topt;
  topt.forward_tol = tolerance_or(f, "forward", cli_tol, topt.forward_tol);
  const CompleteSolution source = compute_star(f.spec, si->witness);
  const CompleteSolution target = compute_star(f.spec, ti->witness);
  const ConnectionTrace tr = trace_connection(f.spec, source, target, topt);

  std::vector<Vec> full;
  full.reserve(tr.path.u.size());
  for (const auto& u : tr.path.u) full.push_back(embed_state(u, dst));
  const std::string csv_name = "trace_" + src.tag() + "_" + dst.tag() + ".csv";
  emit_file(c, csv_name, trajectory_csv(tr.path.t, full));

  JsonWriter w;
  w.begin_object();
  header_json(w, f);
  w.key("source").value(src.tag());
  w.key("target").value(dst.tag());
  w.key("alpha").value(tr.alpha);
  w.key("direction").begin_array();
  for (Eigen::Index i = 0; i < tr.direction.size(); ++i) w.value(tr.direction[i]);
  w.end_array();
  w.key("t_seed").value(tr.t_seed);
  w.key("t_arrive").value(tr.t_arrive);
  w.key("forward_error").value(tr.forward_error);
  w.key("backward_error").value(tr.backward_error);
  w.key("departure_rate").value(tr.departure_rate);
  w.key("csv").value(csv_name);
  w.end_object();
  print_doc(c, w.str(), "trace_" + src.tag() + "_" + dst.tag() + ".json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified attractor structure of cooperative Lotka-Volterra systems"};
  app.require_subcommand(1);

  Common c_check, c_star, c_dicho, c_skel, c_cls, c_trace;
  CheckFlags fl;
  std::string star_support, dicho_support, trace_src, trace_dst;
  std::vector<double> u0_values;
  double t0 = 0.0, tol_star = 0.0, tol_skel = 0.0, tol_cls = 0.0, tol_trace = 0.0;
  std::uint64_t seed_skel = 42, seed_cls = 42;

  CLI::App* sc = app.add_subcommand("check", "verify coefficient conditions / certify the regime");
  add_common(sc, c_check);
  sc->add_flag("--h1", fl.h1, "check row diagonal dominance");
  sc->add_flag("--h2", fl.h2, "check column diagonal dominance");
  sc->add_flag("--a", fl.a, "check the coexistence envelope");
  sc->add_flag("--b", fl.b, "check the two-branch envelope");
  sc->add_flag("--no-search", fl.no_search, "fail instead of searching for a missing witness");
  sc->add_option("--support", fl.support_tag, "persistence support tag for --a/--b (e.g. s12)");

  CLI::App* ss = app.add_subcommand("star", "compute bounded coexistence trajectories");
  add_common(ss, c_star);
  ss->add_option("--support", star_support, "only this support tag (e.g. s12)");
  ss->add_option("--tol", tol_star, "pullback acceptance tolerance");

  CLI::App* sd = app.add_subcommand("dichotomy", "build projection certificates along each base");
  add_common(sd, c_dicho);
  sd->add_option("--support", dicho_support, "only this support tag");

  CLI::App* sk = app.add_subcommand("skeleton", "build the full attractor skeleton");
  add_common(sk, c_skel);
  sk->add_option("--seed", seed_skel, "seed for random-start annotations");
  sk->add_option("--tol", tol_skel, "arrival tolerance for connection traces");

  CLI::App* scl = app.add_subcommand("classify", "locate one initial state in the skeleton");
  add_common(scl, c_cls);
  scl->add_option("--u0", u0_values, "initial state components")->required()->delimiter(',');
  scl->add_option("--t0", t0, "start time");
  scl->add_option("--tol", tol_cls, "node-matching tolerance");
  scl->add_option("--seed", seed_cls, "seed for skeleton annotations");

  CLI::App* st = app.add_subcommand("trace", "trace one connection between two supports");
  add_common(st, c_trace);
  st->add_option("--source", trace_src, "source support tag")->required();
  st->add_option("--target", trace_dst, "target support tag")->required();
  st->add_option("--tol", tol_trace, "arrival tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (sc->parsed()) return cmd_check(c_check, fl);
    if (ss->parsed()) return cmd_star(c_star, star_support, tol_star);
    if (sd->parsed()) return cmd_dichotomy(c_dicho, dicho_support);
    if (sk->parsed()) return cmd_skeleton(c_skel, seed_skel, tol_skel);
    if (scl->parsed()) return cmd_classify(c_cls, u0_values, t0, tol_cls, seed_cls);
    if (st->parsed()) return cmd_trace(c_trace, trace_src, trace_dst, tol_trace);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ArgError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const BoundsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    // Analysis ran but could not certify / classify.
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
