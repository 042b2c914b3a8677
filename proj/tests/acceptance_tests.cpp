// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ldwalk/config.hpp"
#include "ldwalk/convex.hpp"
#include "ldwalk/exact.hpp"
#include "ldwalk/geometry.hpp"
#include "ldwalk/ldp.hpp"
#include "ldwalk/walk.hpp"
#include "test_groups.hpp"

using namespace ldwalk;
using ldwalk::testing::el;
using ldwalk::testing::free2;
using ldwalk::testing::free2_uniform;
using ldwalk::testing::modular;

namespace {

constexpr std::uint64_t kSeed = 20240611;

// Tolerances.
constexpr double kEscapeLow = 0.49;
constexpr double kEscapeHigh = 0.51;
constexpr double kExactDriftTol = 1e-3;
constexpr double kConfidence = 0.99;
constexpr double kCoinTol = 1e-2;
constexpr double kMomentEps = 1e-6;
constexpr double kUnbiasedTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. word_length against breadth-first search
Outcome oracle_equivalence() {
  std::size_t mismatches = 0;
  std::string sizes;
  auto scan = [&](const char* name, const GroupSpec& g, Length r) {
    const auto pts = ball(g, r);
    for (const auto& x : pts) {
      const auto d = bfs_length_oracle(g, x, r);
      if (!d || *d != word_length(g, x)) ++mismatches;
    }
    sizes += fmt("%s%s |ball(%lld)|=%zu", sizes.empty() ? "" : ", ", name, static_cast<long long>(r), pts.size());
  };
  scan("Z/2*Z/3", modular(), 6);
  scan("F_2", free2(), 6);
  scan("Z/2*Z/3", modular(), 15);
  return {mismatches == 0, sizes + fmt(", mismatches %zu", mismatches)};
}

// 2. l(ab) <= l(a) + l(b)
Outcome subadditivity() {
  std::size_t violations = 0, pairs = 0;
  for (const auto& g : {modular(), free2()}) {
    const auto pts = ball(g, 4);
    for (const auto& a : pts)
      for (const auto& b : pts) {
        ++pairs;
        if (word_length(g, multiply(g, a, b)) > word_length(g, a) + word_length(g, b)) ++violations;
      }
  }
  return {violations == 0, fmt("%zu pairs, %zu violations", pairs, violations)};
}

// 3. escape rate of the simple walk on F_2
Outcome escape_rate() {
  const auto mu = free2_uniform();
  const auto trace = simulate(mu, {2000}, 100'000, kSeed);
  const auto est = escape_rate_estimate(trace);
  const auto law = exact_length_distribution<double>(mu, 10'000, {ExactMethod::lumped});
  double mean = 0.0;
  for (std::size_t k = 0; k < law.size(); ++k) mean += static_cast<double>(k) * law[k];
  const double drift = mean / 10'000.0;
  const bool ok = est.estimate >= kEscapeLow && est.estimate <= kEscapeHigh &&
                  std::abs(drift - 0.5) <= kExactDriftTol;
  return {ok, fmt("lambda_hat %.5f (n 2000, N 1e5), exact E[l]/n at n 1e4 = %.6f", est.estimate, drift)};
}

// 4. empirical rate against the exact law at n = 50
Outcome rate_oracle() {
  const auto mu = free2_uniform();
  const std::uint64_t n = 50;
  const std::vector<double> xs{0.6, 0.8, 0.9};
  const auto trace = simulate(mu, {n}, 1'000'000, kSeed + 1);
  const auto est = empirical_rate(trace, n, xs, 0.05, kConfidence);
  const auto exact = exact_rate(exact_length_distribution<double>(mu, n), n, xs, 0.05);
  bool ok = true;
  std::string d;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const bool in = est.ci_low[i] <= exact[i] && exact[i] <= est.ci_high[i];
    ok = ok && in;
    d += fmt("%sx=%.1f: I_hat %.5f, exact %.5f, CI [%.5f, %.5f]", i ? "; " : "", xs[i], est.rate[i], exact[i],
             est.ci_low[i], est.ci_high[i]);
  }
  return {ok, d};
}

// 5. convex minorant gap within the CI width
Outcome midpoint_convexity() {
  const auto mu = free2_uniform();
  const std::uint64_t n = 400;
  const auto grid = uniform_grid(0.0, 1.0, 0.05);
  const auto trace = simulate(mu, {n}, 1'000'000, kSeed + 2);
  const auto est = empirical_rate(trace, n, grid, 0.05, kConfidence);
  const auto f = est.as_function();
  const auto hull = convex_minorant(f);
  std::size_t checked = 0, bad = 0;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    if (!std::isfinite(f[i])) continue;
    ++checked;
    const double gap = f[i] - hull[i];
    const double width = est.ci_high[i] - est.ci_low[i];
    if (gap > 0.0) worst = std::max(worst, gap / width);
    if (gap > width) ++bad;
  }
  return {checked > 0 && bad == 0,
          fmt("%zu interior points with finite I_hat, max gap/CI width %.3f, %zu above", checked, worst, bad)};
}

// 6. Fekete subadditivity of log E exp(theta l(Y_n)), exact rationals
Outcome fekete() {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t n = 1; n <= 8; ++n)
    for (std::size_t m = 1; m <= 8; ++m) pairs.emplace_back(n, m);
  std::size_t bad = 0, checked = 0;
  double worst = -kInf;
  for (const auto& mu : {free2_uniform(), ldwalk::testing::modular_uniform()})
    for (double theta : {0.1, 0.5, 1.0}) {
      const auto r = fekete_check(mu, theta, pairs);
      checked += r.pairs;
      worst = std::max(worst, r.max_violation);
      if (!r.certified || r.max_violation > 0.0) ++bad;
    }
  return {bad == 0, fmt("%zu (theta, n, m) cases on both families, max a_{n+m} - a_n - a_m = %.3g", checked, worst)};
}

// 7. duality at n = 50 and the coin conjugate
Outcome duality() {
  const auto mu = free2_uniform();
  const std::uint64_t n = 50;
  const double step = 0.02;
  const auto thetas = uniform_grid(-10.0, 10.0, 0.01);
  const auto law = exact_length_distribution<double>(mu, n);
  const auto lambda = Grid1DFunction::sample(thetas, [&](double t) { return log_mgf_from_law(law, n, t); });
  const auto xs = uniform_grid(0.0, 1.0, step);
  const auto conj = rate_from_mgf(lambda, xs);
  const auto exact = exact_rate(law, n, xs, 0.05);
  const double slack = std::log(static_cast<double>(n)) / static_cast<double>(n);
  std::size_t below = 0;
  double margin = kInf;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(exact[i])) continue;
    margin = std::min(margin, conj[i] - (exact[i] - slack));
    if (conj[i] < exact[i] - slack) ++below;
  }

  const double lambda_gap = biconjugate_check(lambda, xs).gap;
  const double theta_step = thetas[1] - thetas[0];
  const double rate_gap = biconjugate_check(conj, thetas).gap;
  const bool gaps_ok = lambda_gap <= 2.0 * step && rate_gap <= 2.0 * step;

  // coin: Lambda(t) = log((1 + e^t)/2), Lambda*(x) = x log x + (1-x) log(1-x) + log 2
  const auto coin = Grid1DFunction::sample(uniform_grid(-20.0, 20.0, 0.01),
                                           [](double t) { return std::log1p(std::exp(t)) - std::log(2.0); });
  const auto coin_star = rate_from_mgf(coin, xs);
  double coin_err = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    const double h = (x > 0 ? x * std::log(x) : 0.0) + (x < 1 ? (1 - x) * std::log(1 - x) : 0.0) + std::log(2.0);
    coin_err = std::max(coin_err, std::abs(coin_star[i] - h));
  }
  const bool ok = below == 0 && gaps_ok && coin_err <= kCoinTol;
  return {ok, fmt("min margin over I_exact - log(n)/n %.4f (%zu below); biconjugate gaps %.2e, %.2e "
                  "(limit %.2g, dual step %.2g); coin conjugate error %.2e",
                  margin, below, lambda_gap, rate_gap, 2.0 * step, theta_step, coin_err)};
}

// 8. distortion constants with a complete witness table
Outcome distortion() {
  bool ok = true;
  std::string d;
  for (const auto& [name, g] : {std::pair{"Z/2*Z/3", modular()}, std::pair{"F_2", free2()}}) {
    const auto reps = estimate_constants(g, 6, 1);
    const auto& r = reps[1];
    const std::size_t m = r.pair_ball.size();
    bool complete = r.witnesses.size() == m * m && r.pairs_scanned == m * m;
    for (std::size_t i = 0; complete && i < r.witnesses.size(); ++i) {
      const auto& w = r.witnesses[i];
      if (w.x != i / m || w.y != i % m || w.sigma >= r.sigma_ball.size()) {
        complete = false;
        break;
      }
      const auto& x = r.pair_ball[w.x];
      const auto& y = r.pair_ball[w.y];
      const auto& s = r.sigma_ball[w.sigma];
      const auto defect = static_cast<std::int64_t>(word_length(g, x) + word_length(g, y)) -
                          static_cast<std::int64_t>(word_length(g, multiply(g, multiply(g, x, s), y)));
      if (word_length(g, s) > 1 || defect != w.defect || defect > r.c_min) complete = false;
    }
    ok = ok && r.c_min == 0 && complete;
    d += fmt("%s%s |ball(6)|=%zu: c_min %lld, witnesses %zu%s", d.empty() ? "" : "; ", name, m,
             static_cast<long long>(r.c_min), r.witnesses.size(), complete ? " (complete)" : " (INCOMPLETE)");
  }
  return {ok, d};
}

// 9. selection certificates on F = {x, y} in F_2
Outcome selection() {
  const auto g = free2();
  const std::vector<GroupElement> F{el(g, "a_1"), el(g, "a_2")};
  const std::vector<Rational> nu{Rational(1, 2), Rational(1, 2)};
  bool ok = true;
  std::string d;
  for (std::size_t k : {2u, 3u, 4u}) {
    const auto cert = build_selection(g, F, nu, k, 0, 1);
    // count E_k and check the defect bound by brute force over F^k
    Rational mass = 0;
    bool defects_ok = true;
    std::vector<std::size_t> tuple(k, 0);
    GroupElement product;
    for (std::size_t code = 0; code < (std::size_t{1} << k); ++code) {
      Rational p = 1;
      std::int64_t total = 0;
      for (std::size_t i = 0; i < k; ++i) {
        tuple[i] = (code >> i) & 1u;
        p *= nu[tuple[i]];
        total += static_cast<std::int64_t>(word_length(g, F[tuple[i]]));
      }
      if (!selection_member(cert, tuple, product)) continue;
      mass += p;
      if (static_cast<std::int64_t>(word_length(g, product)) < total - cert.defect_bound()) defects_ok = false;
    }
    const Rational bound = Rational(1, static_cast<long>(std::pow(5, k - 1)));
    const bool verified = verify_certificate(cert).pass;
    const bool level_ok = mass >= bound && mass == cert.levels.back().tuple_mass && defects_ok && verified;
    ok = ok && level_ok;
    d += fmt("%sk=%zu: nu^k(E_k)=%s >= %s, verify %s", d.empty() ? "" : "; ", k, rational_text(mass).c_str(),
             rational_text(bound).c_str(), verified ? "pass" : "FAIL");
  }
  auto broken = build_selection(g, F, nu, 3, 0, 1);
  broken.levels[0].sigma = el(g, "a_1^-1");
  auto inflated = build_selection(g, F, nu, 3, 0, 1);
  inflated.levels[1].tuple_mass += Rational(1, 8);
  const auto v1 = verify_certificate(broken);
  const auto v2 = verify_certificate(inflated);
  ok = ok && !v1.pass && !v2.pass;
  d += fmt("; mutated connector rejected: %s, mutated mass rejected: %s", v1.pass ? "no" : "yes",
           v2.pass ? "no" : "yes");
  return {ok, d};
}

// 10. exponential moments: finite support, geometric and polynomial tails
Outcome moments() {
  const GroupSpec g({FactorSpec::finite_cyclic(2), FactorSpec::finite_cyclic(3), FactorSpec::infinite_cyclic(false)});
  const std::vector<std::pair<GroupElement, Rational>> atoms{
      {el(g, "a1"), Rational(1, 4)}, {el(g, "b1"), Rational(1, 4)}, {el(g, "b2"), Rational(1, 4)}};
  const double q = 0.5;
  const StepDistribution finite(g, {{el(g, "a1"), Rational(1, 2)}, {el(g, "c3"), Rational(1, 2)}});
  const StepDistribution geometric(g, atoms, Tail{2, TailLaw::geometric, q, 0.25});
  const StepDistribution polynomial(g, atoms, Tail{2, TailLaw::polynomial, 3.0, 0.25});
  const std::vector<double> taus{-50, -5, -1, -0.1, 0, 0.1, 0.5, 1, 5, 50};
  bool ok = true;
  for (double t : taus) ok = ok && std::isfinite(exp_moment(finite, t));
  const double threshold = -std::log(q);
  for (double t : taus) {
    const bool finite_here = std::isfinite(exp_moment(geometric, t));
    if (t < threshold) ok = ok && finite_here;
    if (t > threshold) ok = ok && !finite_here;
  }
  const double below = exp_moment(geometric, threshold - kMomentEps);
  const double above = exp_moment(geometric, threshold + kMomentEps);
  ok = ok && std::isfinite(below) && !std::isfinite(above);
  for (double t : taus) {
    const bool finite_here = std::isfinite(exp_moment(polynomial, t));
    ok = ok && (t > 0 ? !finite_here : finite_here);
  }
  ok = ok && !std::isfinite(exp_moment(polynomial, kMomentEps));
  return {ok, fmt("geometric q=%.2g: E at -log q - 1e-6 = %.4g, at -log q + 1e-6 = %g; polynomial infinite for tau>0",
                  q, below, above)};
}

// 11. tilted estimator: enumerate all paths of length 5
Outcome tilted_unbiased() {
  const auto g = free2();
  const StepDistribution mu(g, {{el(g, "a_1"), Rational(2, 5)},
                                {el(g, "a_2^-1"), Rational(3, 10)},
                                {el(g, "a_1*a_2"), Rational(1, 5)},
                                {el(g, "e"), Rational(1, 10)}});
  const std::uint64_t n = 5;
  const double theta = 0.7, x = 0.6, delta = 0.25;
  const double log_z = log_partition(mu, theta);
  const auto tilted = tilt(mu, theta);
  const auto& atoms = tilted.atoms();
  const std::size_t s = atoms.size();

  long double expectation = 0;
  std::vector<std::size_t> path(n, 0);
  std::size_t total = 1;
  for (std::uint64_t i = 0; i < n; ++i) total *= s;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    long double p = 1, sum = 0;
    GroupElement y;
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto& a = atoms[c % s];
      c /= s;
      p *= a.probability;
      sum += static_cast<long double>(a.length);
      right_multiply(g, y, a.element);
    }
    if (window_contains(n, x, delta, word_length(g, y))) expectation += p * tilted_weight(log_z, theta, n, sum);
  }
  const auto law = exact_length_distribution<Rational>(mu, n);
  Rational exact = 0;
  for (std::size_t k = 0; k < law.size(); ++k)
    if (window_contains(n, x, delta, k)) exact += law[k];
  const double err = std::abs(static_cast<double>(expectation) - to_double(exact));
  return {s == 4 && err <= kUnbiasedTol,
          fmt("%zu paths, enumerated %.15f, exact %s = %.15f, error %.2e", total, static_cast<double>(expectation),
              rational_text(exact).c_str(), to_double(exact), err)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence}, {"subadditivity", subadditivity},
      {"escape rate", escape_rate},                {"rate function oracle", rate_oracle},
      {"midpoint convexity", midpoint_convexity},  {"fekete", fekete},
      {"duality", duality},                        {"distortion constants", distortion},
      {"selection", selection},                    {"moment dichotomy", moments},
      {"tilted unbiasedness", tilted_unbiased}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
