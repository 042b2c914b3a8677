// Large-deviation estimators for l(Y_n)/n: empirical rates on windows,
// exponentially tilted rare-event estimates, log-MGFs, Fekete and convexity
// audits.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "ldwalk/convex.hpp"
#include "ldwalk/exact.hpp"
#include "ldwalk/numeric.hpp"
#include "ldwalk/step_distribution.hpp"
#include "ldwalk/walk.hpp"

namespace ldwalk {

inline constexpr double kDefaultDelta = 0.05;
inline constexpr double kDefaultGridStep = 0.02;

// l/n in the open window (x - delta, x + delta).
inline bool window_contains(std::uint64_t n, double x, double delta, Length length) {
  const long double lo = static_cast<long double>(n) * (static_cast<long double>(x) - delta);
  const long double hi = static_cast<long double>(n) * (static_cast<long double>(x) + delta);
  const auto l = static_cast<long double>(length);
  return lo < l && l < hi;
}

// Exact two-sided Clopper-Pearson interval for a binomial proportion.
inline std::pair<double, double> clopper_pearson(std::uint64_t hits, std::uint64_t trials,
                                                 double confidence) {
  if (trials == 0 || hits > trials) throw std::invalid_argument("clopper_pearson: bad counts");
  const double alpha = 1.0 - confidence;
  const auto k = static_cast<double>(hits), n = static_cast<double>(trials);
  const double lo = hits == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1.0, alpha / 2.0);
  const double hi = hits == trials ? 1.0 : boost::math::ibeta_inv(k + 1.0, n - k, 1.0 - alpha / 2.0);
  return {lo, hi};
}

struct RateEstimate {
  std::uint64_t n = 0;
  double delta = 0.0;
  std::size_t samples = 0;
  double confidence = 0.99;
  std::vector<double> grid;
  std::vector<double> rate;     // +inf where the window is empty
  std::vector<double> ci_low;
  std::vector<double> ci_high;  // +inf where the lower binomial bound is 0
  std::vector<std::uint64_t> counts;

  Grid1DFunction as_function() const { return Grid1DFunction(grid, rate); }
};

// I_hat(x) = -(1/n) log(#{l(Y_n)/n in (x - delta, x + delta)} / N), with
// Clopper-Pearson bounds pushed through -(1/n) log.
inline RateEstimate empirical_rate(const LengthTrace& trace, std::uint64_t n,
                                   const std::vector<double>& grid, double delta = kDefaultDelta,
                                   double confidence = 0.99) {
  if (!(delta > 0.0)) throw std::invalid_argument("empirical_rate: delta must be > 0");
  const auto idx = trace.checkpoint_index(n);
  if (!idx) throw std::invalid_argument("empirical_rate: n is not a checkpoint of the trace");
  if (trace.samples == 0) throw std::invalid_argument("empirical_rate: empty trace");
  RateEstimate est{n, delta, trace.samples, confidence, grid, {}, {}, {}, {}};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double x : grid) {
    std::uint64_t hits = 0;
    for (std::size_t i = 0; i < trace.samples; ++i)
      if (window_contains(n, x, delta, trace.at(i, *idx))) ++hits;
    const auto [p_lo, p_hi] = clopper_pearson(hits, trace.samples, confidence);
    est.counts.push_back(hits);
    est.ci_low.push_back(0.0 - inv_n * std::log(p_hi));
    if (hits == 0) {
      est.rate.push_back(kInf);
      est.ci_high.push_back(kInf);
    } else {
      est.rate.push_back(0.0 - inv_n * std::log(static_cast<double>(hits) / static_cast<double>(trace.samples)));
      est.ci_high.push_back(0.0 - inv_n * std::log(p_lo));
    }
  }
  return est;
}

// P(l(Y_n)/n in (x - delta, x + delta)) from an exact length law.
inline double window_probability(const std::vector<double>& law, std::uint64_t n, double x, double delta) {
  double p = 0.0;
  for (std::size_t k = 0; k < law.size(); ++k)
    if (window_contains(n, x, delta, k)) p += law[k];
  return p;
}

// -(1/n) log of window_probability on each grid point.
inline std::vector<double> exact_rate(const std::vector<double>& law, std::uint64_t n,
                                      const std::vector<double>& grid, double delta = kDefaultDelta) {
  std::vector<double> out;
  for (double x : grid) {
    const double p = window_probability(law, n, x, delta);
    out.push_back(p > 0.0 ? 0.0 - std::log(p) / static_cast<double>(n) : kInf);
  }
  return out;
}

// ---- exponential tilting -----------------------------------------------------

// Likelihood ratio of a path under mu versus mu_theta:
// Z(theta)^n exp(-theta sum l(X_i)).
inline double tilted_weight(double log_z, double theta, std::uint64_t n, long double sum_lengths) {
  return static_cast<double>(std::exp(static_cast<long double>(n) * log_z - theta * sum_lengths));
}

// log Z(theta); zero at theta = 0 by normalization.
inline double log_partition(const StepDistribution& mu, double theta) {
  if (theta == 0.0) return 0.0;
  if (mu.finite_support() && !mu.atoms().empty()) {
    const auto l0 = mu.atoms().front().length;
    const bool constant = std::all_of(mu.atoms().begin(), mu.atoms().end(),
                                      [&](const auto& a) { return a.length == l0; });
    if (constant) return theta * static_cast<double>(l0);
  }
  const double z = exp_moment(mu, theta);
  if (!std::isfinite(z)) throw std::domain_error("infinite exponential moment at theta");
  return std::log(z);
}

struct TiltedEstimate {
  double probability = 0.0;
  double variance = 0.0;  // variance of the estimator (sample variance / N)
  std::size_t samples = 0;
  std::uint64_t hits = 0;  // samples landing in the window
};

// Unbiased estimate of P(l(Y_n) in n B(x, delta)) from increments drawn from
// mu_theta; sample i uses stream_for(seed, i).
inline TiltedEstimate tilted_estimate(const StepDistribution& mu, double theta, std::uint64_t n, double x,
                                      double delta, std::size_t samples, std::uint64_t seed,
                                      std::size_t threads = 0) {
  if (samples == 0) throw std::invalid_argument("tilted_estimate: samples must be > 0");
  const double log_z = log_partition(mu, theta);
  const StepDistribution tilted = tilt(mu, theta);
  const StepSampler sampler(tilted);
  const auto& spec = mu.group();
  std::vector<double> values(samples, 0.0);
  detail::parallel_chunks(samples, threads, [&](std::size_t begin, std::size_t end) {
    GroupElement position, scratch;
    for (std::size_t i = begin; i < end; ++i) {
      auto rng = stream_for(seed, i);
      position = identity();
      std::int64_t length = 0;
      long double sum = 0;
      for (std::uint64_t t = 0; t < n; ++t) {
        const auto step = sampler.draw(rng, scratch);
        sum += static_cast<long double>(step.length);
        length += right_multiply(spec, position, *step.element);
      }
      if (window_contains(n, x, delta, static_cast<Length>(length)))
        values[i] = theta == 0.0 ? 1.0 : tilted_weight(log_z, theta, n, sum);
    }
  });
  TiltedEstimate est;
  est.samples = samples;
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    if (v != 0.0) ++est.hits;
  }
  est.probability = sum / static_cast<double>(samples);
  if (samples > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - est.probability) * (v - est.probability);
    est.variance = ss / static_cast<double>(samples - 1) / static_cast<double>(samples);
  }
  return est;
}

// Plain Monte Carlo frequency of the window on the same per-sample streams.
inline double plain_estimate(const StepDistribution& mu, std::uint64_t n, double x, double delta,
                             std::size_t samples, std::uint64_t seed, std::size_t threads = 0) {
  const auto trace = simulate(mu, {n}, samples, seed, threads);
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i)
    if (window_contains(n, x, delta, trace.at(i, 0))) ++hits;
  return static_cast<double>(hits) / static_cast<double>(samples);
}

// ---- log moment generating functions --------------------------------------------

struct MgfEstimate {
  std::vector<double> thetas;
  std::vector<std::uint64_t> ns;
  std::vector<std::vector<double>> lambda;  // lambda[i][j] = (1/n_i) log E exp(theta_j l(Y_{n_i}))
  std::vector<double> fekete_bound;         // min over n for theta >= 0, NaN for theta < 0
  std::vector<bool> infinite_moment;        // per theta

  Grid1DFunction curve(std::size_t i) const { return Grid1DFunction(thetas, lambda[i]); }
};

namespace detail {

inline void finish_mgf(MgfEstimate& m) {
  m.fekete_bound.assign(m.thetas.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < m.thetas.size(); ++j) {
    if (m.thetas[j] < 0.0) continue;
    double best = kInf;
    for (const auto& row : m.lambda) best = std::min(best, row[j]);
    m.fekete_bound[j] = best;
  }
}

inline std::vector<bool> moment_flags(const StepDistribution& mu, const std::vector<double>& thetas) {
  std::vector<bool> flags;
  for (double t : thetas) flags.push_back(!std::isfinite(exp_moment(mu, t)));
  return flags;
}

}  // namespace detail

// (1/n) log sum_k p_k e^{theta k} from an exact law, via log-sum-exp.
inline double log_mgf_from_law(const std::vector<double>& law, std::uint64_t n, double theta) {
  if (theta == 0.0) return 0.0;
  std::vector<double> terms;
  for (std::size_t k = 0; k < law.size(); ++k)
    if (law[k] > 0.0) terms.push_back(std::log(law[k]) + theta * static_cast<double>(k));
  return log_sum_exp(terms) / static_cast<double>(n);
}

// Exact mode: the law of l(Y_n) comes from exact_length_distribution.
inline MgfEstimate log_mgf_exact(const StepDistribution& mu, const std::vector<double>& thetas,
                                 const std::vector<std::uint64_t>& ns, const ExactOptions& opts = {}) {
  MgfEstimate m{thetas, ns, {}, {}, detail::moment_flags(mu, thetas)};
  for (auto n : ns) {
    if (n == 0) throw std::invalid_argument("log_mgf: n must be >= 1");
    const auto law = exact_length_distribution<double>(mu, n, opts);
    std::vector<double> row;
    for (double t : thetas) row.push_back(log_mgf_from_law(law, n, t));
    m.lambda.push_back(std::move(row));
  }
  detail::finish_mgf(m);
  return m;
}

// Monte Carlo mode: sample means over a trace at each n in `ns` (which must
// be checkpoints). Thetas with an infinite exponential moment give +inf.
inline MgfEstimate log_mgf_monte_carlo(const StepDistribution& mu, const LengthTrace& trace,
                                       const std::vector<double>& thetas,
                                       const std::vector<std::uint64_t>& ns) {
  MgfEstimate m{thetas, ns, {}, {}, detail::moment_flags(mu, thetas)};
  for (auto n : ns) {
    const auto idx = trace.checkpoint_index(n);
    if (!idx) throw std::invalid_argument("log_mgf: n is not a checkpoint of the trace");
    std::vector<double> row;
    for (std::size_t j = 0; j < thetas.size(); ++j) {
      if (m.infinite_moment[j]) {
        row.push_back(kInf);
        continue;
      }
      if (thetas[j] == 0.0) {
        row.push_back(0.0);
        continue;
      }
      std::vector<double> terms;
      terms.reserve(trace.samples);
      for (std::size_t i = 0; i < trace.samples; ++i)
        terms.push_back(thetas[j] * static_cast<double>(trace.at(i, *idx)));
      row.push_back((log_sum_exp(terms) - std::log(static_cast<double>(trace.samples))) /
                    static_cast<double>(n));
    }
    m.lambda.push_back(std::move(row));
  }
  detail::finish_mgf(m);
  return m;
}

// ---- Fekete subadditivity ------------------------------------------------------

struct FeketeResult {
  double max_violation = -kInf;  // max over pairs of a_{n+m} - a_n - a_m
  bool certified = true;         // every sign decided exactly
  std::pair<std::size_t, std::size_t> worst{0, 0};
  std::size_t pairs = 0;
};

// Checks a_{n+m} <= a_n + a_m for a_n = log E exp(theta l(Y_n)), theta >= 0.
// With M_n(z) = sum_k P(l(Y_n) = k) z^k (exact rationals), the sign of
// M_n M_m - M_{n+m} at z = e^theta is decided on a rational bracket of e^theta.
inline FeketeResult fekete_check(const StepDistribution& mu, double theta,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                 const ExactOptions& opts = {}) {
  if (theta < 0.0) throw std::invalid_argument("fekete_check: theta must be >= 0");
  std::size_t top = 0;
  for (const auto& [n, m] : pairs) {
    if (n == 0 || m == 0) throw std::invalid_argument("fekete_check: n, m must be >= 1");
    top = std::max(top, n + m);
  }
  std::vector<std::vector<Rational>> law(top + 1);
  for (const auto& [n, m] : pairs)
    for (auto k : {n, m, n + m})
      if (law[k].empty()) law[k] = exact_length_distribution<Rational>(mu, k, opts);

  const auto [z_lo, z_hi] = exp_bracket(exact_rational(theta));
  const Rational z_mid = (z_lo + z_hi) / 2;
  auto eval = [](const std::vector<Rational>& poly, const Rational& z) {
    Rational acc = 0;
    for (auto it = poly.rbegin(); it != poly.rend(); ++it) acc = acc * z + *it;
    return acc;
  };

  FeketeResult res;
  for (const auto& [n, m] : pairs) {
    ++res.pairs;
    const auto& pn = law[n];
    const auto& pm = law[m];
    const auto& pnm = law[n + m];
    std::vector<Rational> diff(std::max(pn.size() + pm.size() - 1, pnm.size()), Rational(0));
    for (std::size_t i = 0; i < pn.size(); ++i)
      if (pn[i] != 0)
        for (std::size_t j = 0; j < pm.size(); ++j) diff[i + j] += pn[i] * pm[j];
    for (std::size_t k = 0; k < pnm.size(); ++k) diff[k] -= pnm[k];

    double violation = 0.0;
    const bool identically_zero =
        std::all_of(diff.begin(), diff.end(), [](const Rational& c) { return c == 0; });
    if (!identically_zero) {
      // z >= 1 here, so positive coefficients are smallest at z_lo and
      // negative ones at z_hi.
      Rational lower = 0, upper = 0, zl = 1, zh = 1;
      for (const auto& c : diff) {
        if (c > 0) {
          lower += c * zl;
          upper += c * zh;
        } else if (c < 0) {
          lower += c * zh;
          upper += c * zl;
        }
        zl *= z_lo;
        zh *= z_hi;
      }
      if (lower < 0) res.certified = res.certified && upper < 0;
      const Rational ratio = eval(pnm, z_mid) / (eval(pn, z_mid) * eval(pm, z_mid));
      violation = std::log(to_double(ratio));
      if (lower >= 0) violation = std::min(violation, 0.0);
    }
    if (violation > res.max_violation || res.pairs == 1) {
      res.max_violation = violation;
      res.worst = {n, m};
    }
  }
  return res;
}

// ---- convexity -------------------------------------------------------------------

// max over interior points and symmetric offsets of
// f(x_i) - (f(x_{i-h}) + f(x_{i+h}))/2, finite triples only. -inf if none.
inline double convexity_audit(const Grid1DFunction& f) {
  const auto n = f.size();
  if (n >= 3) {
    const double step = f.x(1) - f.x(0);
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs((f.x(i) - f.x(i - 1)) - step) > 1e-9 * std::max(1.0, std::abs(step)))
        throw std::invalid_argument("convexity_audit: grid must be uniform");
  }
  double worst = -kInf;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!std::isfinite(f[i])) continue;
    for (std::size_t h = 1; h <= i && i + h < n; ++h) {
      if (!std::isfinite(f[i - h]) || !std::isfinite(f[i + h])) continue;
      worst = std::max(worst, f[i] - 0.5 * (f[i - h] + f[i + h]));
    }
  }
  return worst;
}

}  // namespace ldwalk
