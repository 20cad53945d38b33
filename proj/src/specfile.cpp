#include "lvfa/specfile.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lvfa/errors.hpp"

namespace lvfa {

namespace {

using nlohmann::json;

Vec parse_vec(const json& arr, int n, const std::string& what) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != n)
    throw ArgError(what + " must be an array of length " + std::to_string(n));
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    if (!arr[i].is_number()) throw ArgError(what + " entries must be numbers");
    out[i] = arr[i].get<double>();
  }
  return out;
}

Witness parse_witness(const json& jw, int n) {
  Witness w;
  w.support = SupportSet::full(n);
  if (jw.contains("support")) {
    const auto& js = jw.at("support");
    if (!js.is_array()) throw ArgError("witness support must be an array of 1-based indices");
    std::vector<int> idx;
    for (const auto& e : js) {
      const int k = e.get<int>();
      if (k < 1 || k > n) throw ArgError("witness support index out of range");
      idx.push_back(k - 1);
    }
    w.support = SupportSet::of(n, idx);
  }
  if (jw.contains("c")) w.c = parse_vec(jw.at("c"), n, "witness c");
  if (jw.contains("cbar")) w.cbar = parse_vec(jw.at("cbar"), n, "witness cbar");
  if (jw.contains("d")) w.d = parse_vec(jw.at("d"), n, "witness d");
  if (jw.contains("dbar")) w.dbar = parse_vec(jw.at("dbar"), n, "witness dbar");
  if (jw.contains("eps")) w.eps = jw.at("eps").get<double>();
  if (jw.contains("theta")) w.theta = jw.at("theta").get<double>();
  if (jw.contains("delta")) w.delta = jw.at("delta").get<double>();
  return w;
}

// Coefficient ids use 1-based digits: "a2", "b13". Only n <= 9 is supported,
// which matches the enumeration limits elsewhere.
TimeFn* coefficient_by_id(SystemSpec& spec, const std::string& id) {
  if (id.size() == 2 && id[0] == 'a' && std::isdigit(static_cast<unsigned char>(id[1]))) {
    const int i = id[1] - '1';
    if (i >= 0 && i < spec.n) return &spec.a[i];
  }
  if (id.size() == 3 && id[0] == 'b' && std::isdigit(static_cast<unsigned char>(id[1])) &&
      std::isdigit(static_cast<unsigned char>(id[2]))) {
    const int i = id[1] - '1', j = id[2] - '1';
    if (i >= 0 && i < spec.n && j >= 0 && j < spec.n) return &spec.b[i][j];
  }
  return nullptr;
}

}  // namespace

SpecFile load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgError("cannot open spec file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Map the byte offset to a line number for a readable message.
    std::size_t line = 1;
    for (std::size_t k = 0; k < e.byte && k < text.size(); ++k)
      if (text[k] == '\n') ++line;
    throw ParseError(e.byte, path + ": line " + std::to_string(line) + ": " + e.what());
  }
  if (!doc.is_object()) throw ArgError(path + ": top level must be a JSON object");

  SpecFile out;
  try {
    if (!doc.contains("n")) throw ArgError("missing field: n");
    out.spec.n = doc.at("n").get<int>();
    if (out.spec.n < 1 || out.spec.n > 9) throw ArgError("n must be in [1, 9]");

    if (!doc.contains("a") || !doc.at("a").is_array() ||
        static_cast<int>(doc.at("a").size()) != out.spec.n)
      throw ArgError("a must be an array of n expression strings");
    for (const auto& e : doc.at("a")) out.spec.a.push_back(TimeFn::parse(e.get<std::string>()));

    if (!doc.contains("b") || !doc.at("b").is_array() ||
        static_cast<int>(doc.at("b").size()) != out.spec.n)
      throw ArgError("b must be an n-by-n array of expression strings");
    for (const auto& row : doc.at("b")) {
      if (!row.is_array() || static_cast<int>(row.size()) != out.spec.n)
        throw ArgError("b must be an n-by-n array of expression strings");
      out.spec.b.emplace_back();
      for (const auto& e : row) out.spec.b.back().push_back(TimeFn::parse(e.get<std::string>()));
    }

    if (doc.contains("window")) {
      const auto& w = doc.at("window");
      if (!w.is_array() || w.size() != 2) throw ArgError("window must be [lo, hi]");
      out.spec.window_lo = w[0].get<double>();
      out.spec.window_hi = w[1].get<double>();
      if (!(out.spec.window_lo < out.spec.window_hi)) throw ArgError("window must satisfy lo < hi");
    }
    if (doc.contains("samples")) {
      out.spec.sample_count = doc.at("samples").get<int>();
      if (out.spec.sample_count < 2) throw ArgError("samples must be at least 2");
    }

    if (doc.contains("bounds")) {
      const auto& jb = doc.at("bounds");
      if (!jb.is_object()) throw ArgError("bounds must be an object keyed by coefficient id");
      for (const auto& [id, rng] : jb.items()) {
        TimeFn* f = coefficient_by_id(out.spec, id);
        if (!f) throw ArgError("unknown coefficient id in bounds: " + id);
        if (rng.contains("inf")) f->declared_inf = rng.at("inf").get<double>();
        if (rng.contains("sup")) f->declared_sup = rng.at("sup").get<double>();
      }
    }

    if (doc.contains("witness")) out.witness = parse_witness(doc.at("witness"), out.spec.n);

    if (doc.contains("tolerances")) {
      const auto& jt = doc.at("tolerances");
      if (!jt.is_object()) throw ArgError("tolerances must be an object");
      for (const auto& [k, v] : jt.items()) out.tolerances[k] = v.get<double>();
    }
  } catch (const json::exception& e) {
    throw ArgError(path + ": " + e.what());
  }

  out.name = std::filesystem::path(path).stem().string();
  return out;
}

SupportSet parse_support_tag(const std::string& tag, int n) {
  if (tag == "full") return SupportSet::full(n);
  if (tag.size() >= 2 && tag[0] == 's') {
    if (tag == "s0") return SupportSet::none(n);
    std::vector<int> idx;
    for (std::size_t k = 1; k < tag.size(); ++k) {
      if (!std::isdigit(static_cast<unsigned char>(tag[k]))) break;
      const int i = tag[k] - '1';
      if (i < 0 || i >= n) throw ArgError("support tag index out of range: " + tag);
      idx.push_back(i);
    }
    if (idx.size() == tag.size() - 1) return SupportSet::of(n, idx);
  }
  throw ArgError("cannot parse support tag: " + tag + " (expected e.g. s0, s13, full)");
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const std::filesystem::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgError("cannot write file: " + tmp.string());
    out << content;
    if (!out.good()) throw ArgError("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

JsonWriter& JsonWriter::begin_object() {
  comma();
  out_ += '{';
  has_items_.push_back(false);
  return *this;
}
JsonWriter& JsonWriter::end_object() {
  has_items_.pop_back();
  out_ += '}';
  return *this;
}
JsonWriter& JsonWriter::begin_array() {
  comma();
  out_ += '[';
  has_items_.push_back(false);
  return *this;
}
JsonWriter& JsonWriter::end_array() {
  has_items_.pop_back();
  out_ += ']';
  return *this;
}

void JsonWriter::comma() {
  if (pending_key_) {
    pending_key_ = false;
    return;
  }
  if (!has_items_.empty()) {
    if (has_items_.back()) out_ += ',';
    has_items_.back() = true;
  }
}

namespace {
std::string json_escape(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out + "\"";
}
}  // namespace

JsonWriter& JsonWriter::key(const std::string& k) {
  comma();
  out_ += json_escape(k);
  out_ += ':';
  pending_key_ = true;
  return *this;
}
JsonWriter& JsonWriter::value(const std::string& s) {
  comma();
  out_ += json_escape(s);
  return *this;
}
JsonWriter& JsonWriter::value(const char* s) { return value(std::string(s)); }
JsonWriter& JsonWriter::value(double x) {
  comma();
  out_ += std::isfinite(x) ? format_double(x) : "null";
  return *this;
}
JsonWriter& JsonWriter::value(int x) {
  comma();
  out_ += std::to_string(x);
  return *this;
}
JsonWriter& JsonWriter::value(bool b) {
  comma();
  out_ += b ? "true" : "false";
  return *this;
}
JsonWriter& JsonWriter::null() {
  comma();
  out_ += "null";
  return *this;
}

namespace {
void vec_json(JsonWriter& w, const Vec& v) {
  w.begin_array();
  for (Eigen::Index i = 0; i < v.size(); ++i) w.value(v[i]);
  w.end_array();
}
}  // namespace

void witness_json(JsonWriter& w, const Witness& wit, int n) {
  w.begin_object();
  w.key("support").value(wit.support.label());
  w.key("c");
  vec_json(w, wit.c.size() == n ? wit.c : Vec());
  w.key("cbar");
  vec_json(w, wit.cbar.size() == n ? wit.cbar : Vec());
  w.key("d");
  vec_json(w, wit.d.size() == n ? wit.d : Vec());
  w.key("dbar");
  vec_json(w, wit.dbar.size() == n ? wit.dbar : Vec());
  w.key("eps").value(wit.eps);
  w.key("theta").value(wit.theta);
  w.key("delta").value(wit.delta);
  w.end_object();
}

void report_json(JsonWriter& w, const ConditionReport& r) {
  w.begin_object();
  w.key("condition").value(r.condition);
  w.key("verdict").value(verdict_name(r.verdict));
  w.key("margin").value(r.margin);
  w.key("worst_t").value(r.worst_t);
  w.key("rows").begin_array();
  for (const auto& row : r.rows) {
    w.begin_object();
    w.key("index").value(row.index);
    w.key("branch").value(row.branch ? std::string(1, row.branch) : std::string());
    w.key("conservative_margin").value(row.conservative_margin);
    w.key("sampled_margin").value(row.sampled_margin);
    w.key("worst_t").value(row.worst_t);
    w.end_object();
  }
  w.end_array();
  w.end_object();
}

std::string trajectory_csv(const std::vector<double>& t, const std::vector<Vec>& u) {
  if (t.size() != u.size()) throw ArgError("trajectory table: time/state length mismatch");
  std::string out = "t";
  const int n = u.empty() ? 0 : static_cast<int>(u.front().size());
  for (int i = 1; i <= n; ++i) out += ",u" + std::to_string(i);
  out += '\n';
  for (std::size_t k = 0; k < t.size(); ++k) {
    out += format_double(t[k]);
    for (int i = 0; i < n; ++i) {
      out += ',';
      out += format_double(u[k][i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace lvfa
