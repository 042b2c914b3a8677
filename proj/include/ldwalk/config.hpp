// Experiment configuration: one JSON document per experiment.

#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ldwalk/geometry.hpp"
#include "ldwalk/group.hpp"
#include "ldwalk/ldp.hpp"
#include "ldwalk/step_distribution.hpp"

namespace ldwalk {

using Json = nlohmann::json;

// Invalid configuration; what() names the offending field first.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct GridSpec {
  double start = 0.0;
  double stop = 1.0;
  double step = kDefaultGridStep;
  std::vector<double> points() const { return uniform_grid(start, stop, step); }
};

struct MeasureBlock {
  std::vector<std::pair<GroupElement, Rational>> atoms;
  std::optional<Tail> tail;
};

struct RunBlock {
  std::vector<std::uint64_t> checkpoints{100};
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::size_t admissibility_depth = 8;
};

struct EstimatorBlock {
  std::uint64_t n = 100;
  GridSpec grid{0.0, 1.0, kDefaultGridStep};
  double delta = kDefaultDelta;
  double confidence = 0.99;
  GridSpec theta_grid{-1.0, 1.0, 0.1};
  std::vector<std::uint64_t> n_list{10, 20, 40};
  std::string mode = "exact";  // or "monte_carlo"
};

struct ProbeBlock {
  Length R = 4;
  Length C_max = 2;
  std::size_t k = 2;
  std::int64_t c = 0;
  Length C = 1;
  Truncation truncation;
  std::vector<GroupElement> F;
  std::vector<Rational> nu;
};

struct ExperimentConfig {
  GroupSpec group;
  std::optional<MeasureBlock> measure;
  RunBlock run;
  EstimatorBlock estimator;
  ProbeBlock probe;

  StepDistribution distribution() const {
    if (!measure) throw ConfigError("measure", "this command needs a measure block");
    return StepDistribution(group, measure->atoms, measure->tail);
  }
};

inline std::string rational_text(const Rational& r) {
  if (boost::multiprecision::denominator(r) == 1) return boost::multiprecision::numerator(r).str();
  return to_string(r);
}

namespace detail {

inline std::string field(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline const Json& require(const Json& obj, const std::string& path, const std::string& key) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(field(path, key), "missing");
  return *it;
}

inline void reject_unknown(const Json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError(field(path, k), "unknown key");
  }
}

inline std::uint64_t as_unsigned(const Json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(path, "expected a non-negative integer");
}

inline std::int64_t as_integer(const Json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  throw ConfigError(path, "expected an integer");
}

inline double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

inline bool as_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

inline std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

// Weights: a JSON number (read as its shortest decimal spelling) or a string
// such as "1/3".
inline Rational as_rational(const Json& v, const std::string& path) {
  try {
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_number()) return rational_from_double(v.get<double>());
    if (v.is_string()) return parse_rational(v.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path, "expected a number or a rational string");
}

inline GroupElement as_element(const GroupSpec& spec, const Json& v, const std::string& path) {
  const auto text = as_string(v, path);
  try {
    return parse_element(spec, text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

template <class T, class F>
std::vector<T> as_list(const Json& v, const std::string& path, F&& each) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(each(v[i], index(path, i)));
  return out;
}

inline GridSpec parse_grid(const Json& v, const std::string& path) {
  reject_unknown(v, path, {"start", "stop", "step"});
  GridSpec g{as_number(require(v, path, "start"), field(path, "start")),
             as_number(require(v, path, "stop"), field(path, "stop")),
             as_number(require(v, path, "step"), field(path, "step"))};
  if (!(g.step > 0.0)) throw ConfigError(field(path, "step"), "must be > 0");
  if (g.stop < g.start) throw ConfigError(field(path, "stop"), "must be >= start");
  if ((g.stop - g.start) / g.step > 1e7) throw ConfigError(path, "grid has more than 10^7 points");
  return g;
}

inline Json grid_json(const GridSpec& g) { return Json{{"start", g.start}, {"stop", g.stop}, {"step", g.step}}; }

inline GroupSpec parse_group(const Json& v) {
  reject_unknown(v, "group", {"factors"});
  const auto& list = require(v, "group", "factors");
  if (!list.is_array()) throw ConfigError("group.factors", "expected an array");
  std::vector<FactorSpec> factors;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto path = index("group.factors", i);
    const auto& f = list[i];
    reject_unknown(f, path, {"kind", "order", "rank", "peripheral"});
    const auto kind = as_string(require(f, path, "kind"), field(path, "kind"));
    const bool has_periph = f.contains("peripheral");
    const bool periph = has_periph ? as_bool(f["peripheral"], field(path, "peripheral")) : true;
    if (kind == "finite_cyclic") {
      const auto order = as_unsigned(require(f, path, "order"), field(path, "order"));
      if (order < 2 || order > (1ULL << 40)) throw ConfigError(field(path, "order"), "must lie in [2, 2^40]");
      if (f.contains("rank")) throw ConfigError(field(path, "rank"), "only free factors have a rank");
      factors.push_back(FactorSpec::finite_cyclic(static_cast<std::int64_t>(order), periph));
    } else if (kind == "infinite_cyclic") {
      if (f.contains("order") || f.contains("rank"))
        throw ConfigError(path, "infinite_cyclic takes neither order nor rank");
      factors.push_back(FactorSpec::infinite_cyclic(periph));
    } else if (kind == "free") {
      const auto rank = as_unsigned(require(f, path, "rank"), field(path, "rank"));
      if (rank < 1 || rank > 1000) throw ConfigError(field(path, "rank"), "must lie in [1, 1000]");
      if (has_periph && periph) throw ConfigError(field(path, "peripheral"), "free factors are never peripheral");
      if (f.contains("order")) throw ConfigError(field(path, "order"), "only finite_cyclic factors have an order");
      factors.push_back(FactorSpec::free(static_cast<int>(rank)));
    } else {
      throw ConfigError(field(path, "kind"), "expected finite_cyclic, infinite_cyclic or free");
    }
  }
  try {
    return GroupSpec(std::move(factors));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("group", e.what());
  }
}

inline Json group_json(const GroupSpec& spec) {
  Json list = Json::array();
  for (const auto& f : spec.factors()) {
    const char* kind = f.kind == FactorKind::finite_cyclic     ? "finite_cyclic"
                       : f.kind == FactorKind::infinite_cyclic ? "infinite_cyclic"
                                                               : "free";
    Json j{{"kind", kind}};
    if (f.kind == FactorKind::finite_cyclic) j["order"] = f.order;
    if (f.kind == FactorKind::free) j["rank"] = f.rank;
    if (f.kind != FactorKind::free) j["peripheral"] = f.peripheral;
    list.push_back(j);
  }
  return Json{{"factors", list}};
}

inline MeasureBlock parse_measure(const GroupSpec& spec, const Json& v) {
  reject_unknown(v, "measure", {"atoms", "tail"});
  MeasureBlock m;
  const auto& atoms = require(v, "measure", "atoms");
  if (!atoms.is_array()) throw ConfigError("measure.atoms", "expected an array");
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto path = index("measure.atoms", i);
    reject_unknown(atoms[i], path, {"element", "weight"});
    m.atoms.emplace_back(as_element(spec, require(atoms[i], path, "element"), field(path, "element")),
                         as_rational(require(atoms[i], path, "weight"), field(path, "weight")));
  }
  if (v.contains("tail") && !v["tail"].is_null()) {
    const auto& t = v["tail"];
    reject_unknown(t, "measure.tail", {"factor", "law", "parameter", "mass"});
    Tail tail;
    tail.factor = static_cast<std::uint32_t>(as_unsigned(require(t, "measure.tail", "factor"), "measure.tail.factor"));
    const auto law = as_string(require(t, "measure.tail", "law"), "measure.tail.law");
    if (law == "geometric")
      tail.law = TailLaw::geometric;
    else if (law == "polynomial")
      tail.law = TailLaw::polynomial;
    else
      throw ConfigError("measure.tail.law", "expected geometric or polynomial");
    tail.parameter = as_number(require(t, "measure.tail", "parameter"), "measure.tail.parameter");
    tail.mass = as_number(require(t, "measure.tail", "mass"), "measure.tail.mass");
    m.tail = tail;
  }
  try {
    StepDistribution(spec, m.atoms, m.tail);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("measure", e.what());
  }
  return m;
}

inline Json measure_json(const GroupSpec& spec, const MeasureBlock& m) {
  Json atoms = Json::array();
  for (const auto& [g, w] : m.atoms) atoms.push_back(Json{{"element", to_text(spec, g)}, {"weight", rational_text(w)}});
  Json j{{"atoms", atoms}};
  if (m.tail)
    j["tail"] = Json{{"factor", m.tail->factor},
                     {"law", m.tail->law == TailLaw::geometric ? "geometric" : "polynomial"},
                     {"parameter", m.tail->parameter},
                     {"mass", m.tail->mass}};
  return j;
}

inline std::vector<std::uint64_t> parse_times(const Json& v, const std::string& path) {
  auto out = as_list<std::uint64_t>(v, path, as_unsigned);
  if (out.empty()) throw ConfigError(path, "must not be empty");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == 0) throw ConfigError(index(path, i), "must be >= 1");
    if (i > 0 && out[i] <= out[i - 1]) throw ConfigError(index(path, i), "must be strictly increasing");
  }
  return out;
}

inline RunBlock parse_run(const Json& v) {
  reject_unknown(v, "run", {"checkpoints", "samples", "seed", "threads", "admissibility_depth"});
  RunBlock r;
  if (v.contains("checkpoints")) r.checkpoints = parse_times(v["checkpoints"], "run.checkpoints");
  if (v.contains("samples")) r.samples = as_unsigned(v["samples"], "run.samples");
  if (v.contains("seed")) r.seed = as_unsigned(v["seed"], "run.seed");
  if (v.contains("threads")) r.threads = as_unsigned(v["threads"], "run.threads");
  if (v.contains("admissibility_depth"))
    r.admissibility_depth = as_unsigned(v["admissibility_depth"], "run.admissibility_depth");
  if (r.samples < 2) throw ConfigError("run.samples", "must be >= 2");
  if (r.admissibility_depth < 1) throw ConfigError("run.admissibility_depth", "must be >= 1");
  return r;
}

inline EstimatorBlock parse_estimator(const Json& v) {
  reject_unknown(v, "estimator", {"n", "grid", "delta", "confidence", "theta_grid", "n_list", "mode"});
  EstimatorBlock e;
  if (v.contains("n")) e.n = as_unsigned(v["n"], "estimator.n");
  if (e.n < 1) throw ConfigError("estimator.n", "must be >= 1");
  if (v.contains("grid")) e.grid = parse_grid(v["grid"], "estimator.grid");
  if (v.contains("delta")) e.delta = as_number(v["delta"], "estimator.delta");
  if (!(e.delta > 0.0)) throw ConfigError("estimator.delta", "must be > 0");
  if (v.contains("confidence")) e.confidence = as_number(v["confidence"], "estimator.confidence");
  if (!(e.confidence > 0.0 && e.confidence < 1.0)) throw ConfigError("estimator.confidence", "must lie in (0, 1)");
  if (v.contains("theta_grid")) e.theta_grid = parse_grid(v["theta_grid"], "estimator.theta_grid");
  if (v.contains("n_list")) e.n_list = parse_times(v["n_list"], "estimator.n_list");
  if (v.contains("mode")) e.mode = as_string(v["mode"], "estimator.mode");
  if (e.mode != "exact" && e.mode != "monte_carlo")
    throw ConfigError("estimator.mode", "expected exact or monte_carlo");
  return e;
}

inline ProbeBlock parse_probe(const GroupSpec& spec, const Json& v) {
  reject_unknown(v, "probe", {"R", "C_max", "k", "c", "C", "truncation", "F", "nu"});
  ProbeBlock p;
  if (v.contains("R")) p.R = as_unsigned(v["R"], "probe.R");
  if (v.contains("C_max")) p.C_max = as_unsigned(v["C_max"], "probe.C_max");
  if (v.contains("k")) p.k = as_unsigned(v["k"], "probe.k");
  if (p.k < 2) throw ConfigError("probe.k", "must be >= 2");
  if (v.contains("c")) p.c = as_integer(v["c"], "probe.c");
  if (p.c < 0) throw ConfigError("probe.c", "must be >= 0");
  if (v.contains("C")) p.C = as_unsigned(v["C"], "probe.C");
  if (v.contains("truncation") && !v["truncation"].is_null()) {
    p.truncation = as_integer(v["truncation"], "probe.truncation");
    if (*p.truncation < 1) throw ConfigError("probe.truncation", "must be >= 1");
  }
  if (v.contains("F"))
    p.F = as_list<GroupElement>(v["F"], "probe.F",
                                [&](const Json& x, const std::string& path) { return as_element(spec, x, path); });
  if (v.contains("nu")) p.nu = as_list<Rational>(v["nu"], "probe.nu", as_rational);
  if (!p.F.empty() && p.nu.empty()) p.nu.assign(p.F.size(), Rational(1, static_cast<long>(p.F.size())));
  if (p.nu.size() != p.F.size()) throw ConfigError("probe.nu", "must have one weight per element of probe.F");
  Rational total = 0;
  for (std::size_t i = 0; i < p.nu.size(); ++i) {
    if (p.nu[i] <= 0) throw ConfigError(index("probe.nu", i), "must be > 0");
    total += p.nu[i];
  }
  if (!p.F.empty() && total != 1) throw ConfigError("probe.nu", "must sum to exactly 1");
  if (spec.has_infinite_peripheral() && !p.truncation)
    throw ConfigError("probe.truncation", "required when an infinite cyclic factor is peripheral");
  return p;
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& doc) {
  detail::reject_unknown(doc, "", {"group", "measure", "run", "estimator", "probe"});
  ExperimentConfig cfg{detail::parse_group(detail::require(doc, "", "group")), std::nullopt, {}, {}, {}};
  if (doc.contains("measure") && !doc["measure"].is_null())
    cfg.measure = detail::parse_measure(cfg.group, doc["measure"]);
  if (doc.contains("run")) cfg.run = detail::parse_run(doc["run"]);
  if (doc.contains("estimator")) cfg.estimator = detail::parse_estimator(doc["estimator"]);
  cfg.probe = detail::parse_probe(cfg.group, doc.contains("probe") ? doc["probe"] : Json::object());
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<document>", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline Json serialize(const ExperimentConfig& cfg) {
  Json doc;
  doc["group"] = detail::group_json(cfg.group);
  if (cfg.measure) doc["measure"] = detail::measure_json(cfg.group, *cfg.measure);
  doc["run"] = Json{{"checkpoints", cfg.run.checkpoints},
                    {"samples", cfg.run.samples},
                    {"seed", cfg.run.seed},
                    {"threads", cfg.run.threads},
                    {"admissibility_depth", cfg.run.admissibility_depth}};
  doc["estimator"] = Json{{"n", cfg.estimator.n},
                          {"grid", detail::grid_json(cfg.estimator.grid)},
                          {"delta", cfg.estimator.delta},
                          {"confidence", cfg.estimator.confidence},
                          {"theta_grid", detail::grid_json(cfg.estimator.theta_grid)},
                          {"n_list", cfg.estimator.n_list},
                          {"mode", cfg.estimator.mode}};
  Json probe{{"R", cfg.probe.R}, {"C_max", cfg.probe.C_max}, {"k", cfg.probe.k}, {"c", cfg.probe.c},
             {"C", cfg.probe.C}, {"truncation", nullptr}};
  if (cfg.probe.truncation) probe["truncation"] = *cfg.probe.truncation;
  Json F = Json::array(), nu = Json::array();
  for (const auto& g : cfg.probe.F) F.push_back(to_text(cfg.group, g));
  for (const auto& w : cfg.probe.nu) nu.push_back(rational_text(w));
  probe["F"] = F;
  probe["nu"] = nu;
  doc["probe"] = probe;
  return doc;
}

inline std::string canonical_text(const ExperimentConfig& cfg) { return serialize(cfg).dump(2) + "\n"; }

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

inline std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a64(serialize(cfg).dump())); }

}  // namespace ldwalk
