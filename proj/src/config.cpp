#include "beamforge/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

namespace beamforge {

namespace {

using nlohmann::json;

const std::set<std::string> kKeys = {"problem", "orders",    "epsilons",    "times",   "eta",
                                     "norm",    "tolerance", "hz_factor",   "points_per_wavelength",
                                     "k0",      "wave_speed", "threads",    "max_grid", "dump_fields"};

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError(path + ": expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ValidationError(path + ": expected an integer");
  return v.get<int>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

SweepConfig parse_config(const std::string& text, std::optional<Problem> fallback) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("$: expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!kKeys.count(it.key())) throw ValidationError("$." + it.key() + ": unknown key");

  Problem problem = fallback.value_or(Problem::cusp);
  if (doc.contains("problem")) {
    if (!doc["problem"].is_string()) throw ValidationError("$.problem: expected a string");
    problem = parse_problem(doc["problem"].get<std::string>());
  }
  SweepConfig c = default_config(problem);
  if (doc.contains("orders")) {
    const json& v = doc["orders"];
    if (!v.is_array()) throw ValidationError("$.orders: expected an array of integers");
    c.orders.clear();
    for (std::size_t i = 0; i < v.size(); ++i) c.orders.push_back(integer(v[i], "$.orders[" + std::to_string(i) + "]"));
  }
  if (doc.contains("epsilons")) c.epsilons = numbers(doc["epsilons"], "$.epsilons");
  if (doc.contains("times")) c.times = numbers(doc["times"], "$.times");
  if (doc.contains("eta")) {
    const json& v = doc["eta"];
    if (v.is_null()) {
      c.eta.reset();
    } else if (v.is_string()) {
      if (v.get<std::string>() != "inf") throw ValidationError("$.eta: expected a number, \"inf\" or null");
      c.eta = kNoCutoff;
    } else {
      c.eta = number(v, "$.eta");
    }
  }
  if (doc.contains("norm")) {
    if (!doc["norm"].is_string()) throw ValidationError("$.norm: expected a string");
    try {
      c.norm = parse_norm_kind(doc["norm"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string("$.norm: ") + e.what());
    }
  }
  if (doc.contains("tolerance")) c.tolerance = number(doc["tolerance"], "$.tolerance");
  if (doc.contains("hz_factor")) c.hz_factor = number(doc["hz_factor"], "$.hz_factor");
  if (doc.contains("points_per_wavelength"))
    c.points_per_wavelength = number(doc["points_per_wavelength"], "$.points_per_wavelength");
  if (doc.contains("wave_speed")) c.wave_speed = number(doc["wave_speed"], "$.wave_speed");
  if (doc.contains("threads")) c.threads = integer(doc["threads"], "$.threads");
  if (doc.contains("max_grid")) c.max_grid = integer(doc["max_grid"], "$.max_grid");
  if (doc.contains("dump_fields")) {
    if (!doc["dump_fields"].is_boolean()) throw ValidationError("$.dump_fields: expected a boolean");
    c.dump_fields = doc["dump_fields"].get<bool>();
  }
  if (doc.contains("k0")) {
    const json& v = doc["k0"];
    if (!v.is_object()) throw ValidationError("$.k0: expected an object with lower and upper");
    for (auto it = v.begin(); it != v.end(); ++it)
      if (it.key() != "lower" && it.key() != "upper") throw ValidationError("$.k0." + it.key() + ": unknown key");
    if (!v.contains("lower") || !v.contains("upper")) throw ValidationError("$.k0: needs lower and upper");
    c.k0_lower = numbers(v["lower"], "$.k0.lower");
    c.k0_upper = numbers(v["upper"], "$.k0.upper");
  }
  c.validate();
  if (c.k0_lower.empty()) {
    const Box b = c.k0();
    c.k0_lower = b.lower;
    c.k0_upper = b.upper;
  }
  return c;
}

std::string serialize_config(const SweepConfig& c) {
  json doc;
  doc["problem"] = to_string(c.problem);
  doc["orders"] = c.orders;
  doc["epsilons"] = c.epsilons;
  doc["times"] = c.times;
  if (!c.eta)
    doc["eta"] = nullptr;
  else if (std::isinf(*c.eta))
    doc["eta"] = "inf";
  else
    doc["eta"] = *c.eta;
  doc["norm"] = to_string(c.norm);
  doc["tolerance"] = c.tolerance;
  doc["hz_factor"] = c.hz_factor;
  doc["points_per_wavelength"] = c.points_per_wavelength;
  const Box b = c.k0();
  doc["k0"] = {{"lower", b.lower}, {"upper", b.upper}};
  doc["wave_speed"] = c.wave_speed;
  doc["threads"] = c.threads;
  doc["max_grid"] = c.max_grid;
  doc["dump_fields"] = c.dump_fields;
  return doc.dump(2);
}

bool same_config(const SweepConfig& a, const SweepConfig& b) {
  return a.problem == b.problem && a.orders == b.orders && a.epsilons == b.epsilons && a.times == b.times &&
         a.eta == b.eta && a.norm == b.norm && a.tolerance == b.tolerance && a.hz_factor == b.hz_factor &&
         a.points_per_wavelength == b.points_per_wavelength && a.k0().lower == b.k0().lower &&
         a.k0().upper == b.k0().upper && a.wave_speed == b.wave_speed && a.threads == b.threads &&
         a.max_grid == b.max_grid && a.dump_fields == b.dump_fields;
}

}  // namespace beamforge
