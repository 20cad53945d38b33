#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lvfa/conditions.hpp"
#include "lvfa/model.hpp"

namespace lvfa {

// A system description loaded from a JSON file:
//   {
//     "n": 2,
//     "a": ["3+0.5*sin(t)", "3+0.5*cos(t)"],
//     "b": [["2", "-1"], ["-1", "2"]],
//     "bounds":   { "a1": {"inf": 2.5, "sup": 3.5} },   // optional
//     "witness":  { "support": [1, 2], "c": [...], ... },  // optional
//     "window":   [-200, 200],                          // optional
//     "samples":  40001,                                // optional
//     "tolerances": { "pullback": 1e-8 }                // optional
//   }
// Coefficient ids are "a<i>" and "b<i><j>" with 1-based digits (n <= 9).
struct SpecFile {
  SystemSpec spec;
  std::optional<Witness> witness;
  std::map<std::string, double> tolerances;
  std::string name;  // file basename without extension
};

// Parses a spec file. Throws ParseError (with line info) on malformed JSON
// and ArgError on schema violations.
SpecFile load_spec(const std::string& path);

// Parses a support tag like "s0" (empty), "s13" ({1,3}), or "full".
SupportSet parse_support_tag(const std::string& tag, int n);

// Writes content to path via a temporary file in the same directory plus an
// atomic rename, creating parent directories as needed.
void write_file_atomic(const std::string& path, const std::string& content);

// Minimal streaming JSON emitter with caller-controlled key order and fixed
// float formatting (17 significant digits), so equal inputs give equal bytes.
// Non-finite numbers become null.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& k);
  JsonWriter& value(const std::string& s);
  JsonWriter& value(const char* s);
  JsonWriter& value(double x);
  JsonWriter& value(int x);
  JsonWriter& value(bool b);
  JsonWriter& null();
  const std::string& str() const { return out_; }

 private:
  void comma();
  std::string out_;
  std::vector<bool> has_items_;
  bool pending_key_ = false;
};

// Emits one witness as a JSON object (keys: support, c, cbar, d, dbar, eps,
// theta, delta; vectors only when they have full length).
void witness_json(JsonWriter& w, const Witness& wit, int n);

// Emits one condition report as a JSON object.
void report_json(JsonWriter& w, const ConditionReport& r);

// Trajectory table "t,u1,...,un": one row per stored sample, values with 17
// significant digits.
std::string trajectory_csv(const std::vector<double>& t, const std::vector<Vec>& u);

}  // namespace lvfa
