// ldwalk: command-line front end.
//
//   ldwalk group info        CONFIG
//   ldwalk walk simulate     CONFIG
//   ldwalk ldp rate          CONFIG
//   ldwalk ldp mgf           CONFIG
//   ldwalk ldp legendre      CONFIG
//   ldwalk probe distortion  CONFIG
//   ldwalk probe selection   CONFIG
//
// Artifacts go to --out, else $LDWALK_OUT, else ./ldwalk-out.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "ldwalk/config.hpp"
#include "ldwalk/geometry.hpp"
#include "ldwalk/ldp.hpp"
#include "ldwalk/serialize.hpp"
#include "ldwalk/walk.hpp"

namespace fs = std::filesystem;
using namespace ldwalk;

namespace {

enum Exit { ok = 0, failure = 1, bad_config = 2, refused = 3 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> threads;
  bool force = false;
  std::string out;
  Length radius = 4;
  bool witnesses = false;
};

class Session {
 public:
  Session(std::string command, const Flags& flags) : command_(std::move(command)), flags_(flags) {
    std::ifstream in(flags.config, std::ios::binary);
    if (!in) throw ConfigError(flags.config, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    cfg_ = std::make_unique<ExperimentConfig>(parse_config_text(ss.str()));
    if (flags.seed) cfg_->run.seed = *flags.seed;
    if (flags.samples) {
      if (*flags.samples < 2) throw ConfigError("--samples", "must be >= 2");
      cfg_->run.samples = *flags.samples;
    }
    if (flags.threads) cfg_->run.threads = *flags.threads;
    hash_ = config_hash(*cfg_);
    if (!flags.out.empty())
      dir_ = flags.out;
    else if (const char* env = std::getenv("LDWALK_OUT"); env && *env)
      dir_ = env;
    else
      dir_ = "ldwalk-out";
    fs::create_directories(dir_);
  }

  const ExperimentConfig& cfg() const { return *cfg_; }

  // Refuses measures not shown admissible unless --force.
  StepDistribution measure() {
    auto mu = cfg_->distribution();
    const auto verdict = check_admissible(mu, cfg_->run.admissibility_depth);
    meta_["admissibility"] = to_string(verdict);
    if (verdict != Admissibility::admissible) {
      if (!flags_.force)
        throw Refusal("measure is " + std::string(to_string(verdict)) + " at depth " +
                      std::to_string(cfg_->run.admissibility_depth) +
                      ": the support must generate the group as a semigroup (pass --force to run anyway)");
      meta_["forced"] = true;
      std::cout << "warning: measure is " << to_string(verdict) << ", continuing because of --force\n";
    }
    return mu;
  }

  void artifact(const std::string& name, const std::string& body) {
    write_file((dir_ / name).string(), body);
    artifacts_.push_back(Json{{"file", name}, {"fnv1a64", hex64(fnv1a64(body))}, {"bytes", body.size()}});
  }

  Json& meta() { return meta_; }

  // Sidecar: command, config hash, seed and artifact hashes.
  void finish() {
    Json side{{"command", command_},
              {"config_hash", hash_},
              {"seed", cfg_->run.seed},
              {"samples", cfg_->run.samples},
              {"artifacts", artifacts_},
              {"config", serialize(*cfg_)}};
    for (auto& [k, v] : meta_.items()) side[k] = v;
    std::string name = command_;
    std::replace(name.begin(), name.end(), ' ', '_');
    write_file((dir_ / (name + ".meta.json")).string(), side.dump(2) + "\n");
    std::cout << "config hash " << hash_ << ", seed " << cfg_->run.seed << "\n";
    for (const auto& a : artifacts_) std::cout << "wrote " << (dir_ / a["file"].get<std::string>()).string() << "\n";
  }

  struct Refusal : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

 private:
  std::string command_;
  Flags flags_;
  std::unique_ptr<ExperimentConfig> cfg_;
  std::string hash_;
  fs::path dir_;
  Json artifacts_ = Json::array();
  Json meta_ = Json::object();
};

std::string fmt(double x, int precision = 6) {
  if (!std::isfinite(x)) return format_double(x);
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

void group_info(Session& s, Length radius) {
  const auto& spec = s.cfg().group;
  std::cout << "factor  kind             size      peripheral\n";
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& f = spec.factor(i);
    std::string size = f.kind == FactorKind::finite_cyclic   ? "order " + std::to_string(f.order)
                       : f.kind == FactorKind::free          ? "rank " + std::to_string(f.rank)
                                                             : "infinite";
    std::cout << std::left << std::setw(8) << GroupSpec::letter(i) << std::setw(17) << to_string(f.kind)
              << std::setw(10) << size << (f.peripheral ? "yes" : "no") << "\n";
  }
  CsvTable t({"radius", "size"});
  std::cout << "|ball(r)|:";
  for (Length r = 0; r <= radius; ++r) {
    const auto n = ball(spec, r, s.cfg().probe.truncation).size();
    t.row(r, n);
    std::cout << " " << n;
  }
  std::cout << "\n";
  if (spec.has_infinite_peripheral())
    std::cout << "(peripheral infinite cyclic syllables truncated at |k| <= " << *s.cfg().probe.truncation << ")\n";
  s.artifact("ball_sizes.csv", t.body());
}

void walk_simulate(Session& s) {
  const auto mu = s.measure();
  const auto& run = s.cfg().run;
  const auto trace = simulate(mu, run.checkpoints, run.samples, run.seed, run.threads);
  CsvTable t({"sample_id", "checkpoint_n", "length"});
  for (std::size_t i = 0; i < trace.samples; ++i)
    for (std::size_t c = 0; c < trace.checkpoints.size(); ++c) t.row(i, trace.checkpoints[c], trace.at(i, c));
  s.artifact("trace.csv", t.body());
  const auto est = escape_rate_estimate(trace);
  std::cout << "escape rate at n = " << est.n << ": " << fmt(est.estimate) << "  95% CI [" << fmt(est.ci_low)
            << ", " << fmt(est.ci_high) << "]  (" << est.samples << " samples)\n";
  s.meta()["escape_rate"] = Json{{"n", est.n}, {"estimate", est.estimate}, {"ci_low", est.ci_low},
                                 {"ci_high", est.ci_high}};
}

void ldp_rate(Session& s) {
  const auto mu = s.measure();
  const auto& cfg = s.cfg();
  const auto n = cfg.estimator.n;
  const auto trace = simulate(mu, {n}, cfg.run.samples, cfg.run.seed, cfg.run.threads);
  const auto est = empirical_rate(trace, n, cfg.estimator.grid.points(), cfg.estimator.delta, cfg.estimator.confidence);
  CsvTable t({"x", "rate", "ci_low", "ci_high", "count"});
  for (std::size_t i = 0; i < est.grid.size(); ++i)
    t.row(est.grid[i], est.rate[i], est.ci_low[i], est.ci_high[i], est.counts[i]);
  s.artifact("rate.csv", t.body());
  std::size_t finite = 0;
  double best_x = 0, best = kInf;
  for (std::size_t i = 0; i < est.grid.size(); ++i)
    if (std::isfinite(est.rate[i])) {
      ++finite;
      if (est.rate[i] < best) best = est.rate[i], best_x = est.grid[i];
    }
  std::cout << "empirical rate at n = " << n << ", delta = " << cfg.estimator.delta << ": " << finite << " of "
            << est.grid.size() << " windows hit; minimum " << fmt(best) << " at x = " << fmt(best_x) << "\n";
}

MgfEstimate compute_mgf(Session& s, const StepDistribution& mu, const std::vector<std::uint64_t>& ns) {
  const auto& cfg = s.cfg();
  const auto thetas = cfg.estimator.theta_grid.points();
  s.meta()["mode"] = cfg.estimator.mode;
  if (cfg.estimator.mode == "exact") return log_mgf_exact(mu, thetas, ns);
  const auto trace = simulate(mu, ns, cfg.run.samples, cfg.run.seed, cfg.run.threads);
  return log_mgf_monte_carlo(mu, trace, thetas, ns);
}

void ldp_mgf(Session& s) {
  const auto mu = s.measure();
  const auto m = compute_mgf(s, mu, s.cfg().estimator.n_list);
  CsvTable t({"theta", "n", "lambda_n"});
  for (std::size_t j = 0; j < m.thetas.size(); ++j)
    for (std::size_t i = 0; i < m.ns.size(); ++i) t.row(m.thetas[j], m.ns[i], m.lambda[i][j]);
  s.artifact("mgf.csv", t.body());
  std::cout << "theta      fekete bound (min over n)\n";
  for (std::size_t j = 0; j < m.thetas.size(); ++j)
    if (m.thetas[j] >= 0.0)
      std::cout << std::left << std::setw(10) << fmt(m.thetas[j]) << " "
              << (m.infinite_moment[j] ? "inf (infinite moment)" : fmt(m.fekete_bound[j])) << "\n";
  Json bound = Json::array();
  for (double b : m.fekete_bound) bound.push_back(std::isnan(b) ? Json(nullptr) : Json(b));
  s.meta()["fekete_bound"] = bound;
}

void ldp_legendre(Session& s) {
  const auto mu = s.measure();
  const auto& cfg = s.cfg();
  const auto n = cfg.estimator.n_list.back();
  const auto m = compute_mgf(s, mu, {n});
  const auto rate = rate_from_mgf(m.curve(0), cfg.estimator.grid.points());
  CsvTable t({"x", "value"});
  for (std::size_t i = 0; i < rate.size(); ++i) t.row(rate.x(i), rate[i]);
  s.artifact("legendre.csv", t.body());
  const auto audit = convexity_audit(m.curve(0));
  std::cout << "conjugate of Lambda_" << n << " on " << rate.size() << " points; midpoint audit of Lambda_" << n
            << ": " << fmt(audit) << "\n";
  s.meta()["n"] = n;
  s.meta()["mgf_convexity_violation"] = audit;
}

void probe_distortion(Session& s, bool witnesses) {
  const auto& cfg = s.cfg();
  const auto reports = estimate_constants(cfg.group, cfg.probe.R, cfg.probe.C_max, cfg.probe.truncation,
                                          ProbeOptions{50'000'000, cfg.run.threads});
  CsvTable t({"C", "c_min", "pairs_scanned", "sigma_ball_size"});
  Json j = Json::array();
  std::cout << "R = " << cfg.probe.R << ", |ball(R)| = " << reports.front().pair_ball.size() << "\nC   c_min\n";
  for (const auto& r : reports) {
    t.row(r.C_used, r.c_min, r.pairs_scanned, r.sigma_ball.size());
    j.push_back(to_json(cfg.group, r, witnesses));
    std::cout << std::left << std::setw(4) << r.C_used << r.c_min << "\n";
  }
  s.artifact("distortion.csv", t.body());
  s.artifact("distortion.json", j.dump(1) + "\n");
}

void probe_selection(Session& s) {
  const auto& cfg = s.cfg();
  const auto& p = cfg.probe;
  if (p.F.empty()) throw ConfigError("probe.F", "probe selection needs a nonempty family F");
  const auto cert = build_selection(cfg.group, p.F, p.nu, p.k, p.c, p.C, p.truncation);
  const auto v = verify_certificate(cert);
  CsvTable t({"j", "sigma", "pair_mass", "tuple_mass", "mass_bound"});
  std::cout << "j   sigma        nu^j(E_j)        bound\n";
  for (std::size_t i = 0; i < cert.levels.size(); ++i) {
    const auto& l = cert.levels[i];
    t.row(i + 2, to_text(cfg.group, l.sigma), rational_text(l.pair_mass), rational_text(l.tuple_mass),
          rational_text(cert.mass_bound(i + 2)));
    std::cout << std::left << std::setw(4) << i + 2 << std::setw(13) << to_text(cfg.group, l.sigma) << std::setw(17)
              << rational_text(l.tuple_mass) << rational_text(cert.mass_bound(i + 2)) << "\n";
  }
  s.artifact("selection.csv", t.body());
  Json j{{"certificate", to_json(cert)}, {"verification", to_json(v)}};
  s.artifact("selection.json", j.dump(1) + "\n");
  std::cout << "verification: " << (v.pass ? "pass" : "FAIL: " + v.reason) << "\n";
  s.meta()["verified"] = v.pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walks on free products: escape rates, large deviations and geometric probes"};
  app.require_subcommand(1);
  Flags flags;

  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help) {
    auto* sub = parent->add_subcommand(name, help);
    sub->add_option("config", flags.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "override run.seed");
    sub->add_option("--samples", flags.samples, "override run.samples");
    sub->add_option("--threads", flags.threads, "override run.threads (0 = all cores)");
    sub->add_flag("--force", flags.force, "run even if the measure is not shown admissible");
    sub->add_option("--out", flags.out, "output directory (default: $LDWALK_OUT or ./ldwalk-out)");
    return sub;
  };

  auto* group = app.add_subcommand("group", "group structure")->require_subcommand(1);
  auto* info = leaf(group, "info", "factor table and ball sizes");
  info->add_option("--radius", flags.radius, "largest radius for |ball(r)|")->check(CLI::Range(0, 30));
  auto* walk = app.add_subcommand("walk", "random walk sampling")->require_subcommand(1);
  auto* sim = leaf(walk, "simulate", "sample length traces and estimate the escape rate");
  auto* ldp = app.add_subcommand("ldp", "large deviation estimators")->require_subcommand(1);
  auto* rate = leaf(ldp, "rate", "empirical rate function on windows");
  auto* mgf = leaf(ldp, "mgf", "logarithmic moment generating functions");
  auto* leg = leaf(ldp, "legendre", "rate function as the conjugate of Lambda_n");
  auto* probe = app.add_subcommand("probe", "geometric probes")->require_subcommand(1);
  auto* dist = leaf(probe, "distortion", "least distortion constant for each connector radius");
  dist->add_flag("--witnesses", flags.witnesses, "include the full witness table in distortion.json");
  auto* sel = leaf(probe, "selection", "build and verify a selection certificate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::string command;
  for (auto* sub : {info, sim, rate, mgf, leg, dist, sel})
    if (sub->parsed()) command = sub->get_parent()->get_name() + " " + sub->get_name();

  try {
    Session s(command, flags);
    if (info->parsed()) group_info(s, flags.radius);
    if (sim->parsed()) walk_simulate(s);
    if (rate->parsed()) ldp_rate(s);
    if (mgf->parsed()) ldp_mgf(s);
    if (leg->parsed()) ldp_legendre(s);
    if (dist->parsed()) probe_distortion(s, flags.witnesses);
    if (sel->parsed()) probe_selection(s);
    s.finish();
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return bad_config;
  } catch (const Session::Refusal& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return refused;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return failure;
  }
  return ok;
}
