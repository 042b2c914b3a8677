// Step distributions: finitely many weighted atoms plus an optional two-sided
// tail z^k (k != 0) on one infinite-cyclic factor.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>

#include "ldwalk/group.hpp"
#include "ldwalk/numeric.hpp"

namespace ldwalk {

enum class TailLaw { geometric, polynomial };

inline const char* to_string(TailLaw law) {
  return law == TailLaw::geometric ? "geometric" : "polynomial";
}

// Mass on z^k, k != 0, proportional to ratio^|k| (geometric) or |k|^-exponent
// (polynomial). `parameter` holds the ratio or the exponent.
struct Tail {
  std::uint32_t factor = 0;
  TailLaw law = TailLaw::geometric;
  double parameter = 0.5;
  double mass = 0.0;
};

inline constexpr double kNormalizationTolerance = 1e-12;

class StepDistribution {
 public:
  struct Atom {
    GroupElement element;
    Rational weight;     // exact weight as given
    double probability;  // weight rounded to double
    Length length;       // l(element)
  };

  StepDistribution(GroupSpec spec, const std::vector<std::pair<GroupElement, Rational>>& atoms,
                   std::optional<Tail> tail = std::nullopt)
      : spec_(std::move(spec)), tail_(tail) {
    for (const auto& [g, w] : atoms) {
      validate(spec_, g);
      if (w <= 0) throw std::invalid_argument("StepDistribution: weights must be > 0");
      auto it = std::find_if(atoms_.begin(), atoms_.end(),
                             [&](const Atom& a) { return a.element == g; });
      if (it != atoms_.end()) {
        it->weight += w;
        it->probability = to_double(it->weight);
      } else {
        atoms_.push_back(Atom{g, w, to_double(w), word_length(spec_, g)});
      }
    }
    if (tail_) check_tail(*tail_);
    double total = tail_ ? tail_->mass : 0.0;
    for (const auto& a : atoms_) total += a.probability;
    if (std::abs(total - 1.0) > kNormalizationTolerance)
      throw std::invalid_argument("StepDistribution: total mass must be 1 within 1e-12 (got " +
                                  std::to_string(total) + ")");
    if (atoms_.empty() && !tail_) throw std::invalid_argument("StepDistribution: empty support");
  }

  // Convenience: each weight is read as its shortest decimal spelling, so 0.2 is 1/5.
  static StepDistribution from_doubles(GroupSpec spec,
                                       const std::vector<std::pair<GroupElement, double>>& atoms,
                                       std::optional<Tail> tail = std::nullopt) {
    std::vector<std::pair<GroupElement, Rational>> exact;
    for (const auto& [g, w] : atoms) exact.emplace_back(g, rational_from_double(w));
    return StepDistribution(std::move(spec), exact, tail);
  }

  // Uniform measure on the listed elements (exact weights 1/n).
  static StepDistribution uniform(GroupSpec spec, const std::vector<GroupElement>& support) {
    std::vector<std::pair<GroupElement, Rational>> atoms;
    for (const auto& g : support) atoms.emplace_back(g, Rational(1, static_cast<long>(support.size())));
    return StepDistribution(std::move(spec), atoms);
  }

  static StepDistribution dirac(GroupSpec spec, const GroupElement& g) {
    return StepDistribution(std::move(spec), {{g, Rational(1)}});
  }

  const GroupSpec& group() const noexcept { return spec_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::optional<Tail>& tail() const noexcept { return tail_; }
  bool finite_support() const noexcept { return !tail_.has_value(); }

  // True when the exact atom weights sum to exactly one and there is no tail.
  bool exactly_normalized() const {
    if (tail_) return false;
    Rational sum = 0;
    for (const auto& a : atoms_) sum += a.weight;
    return sum == 1;
  }

  // max l over the support; nullopt for tailed measures.
  std::optional<Length> max_step() const {
    if (tail_) {
      const auto& f = spec_.factor(tail_->factor);
      if (!f.peripheral) return std::nullopt;
    }
    Length m = tail_ ? 1 : 0;
    for (const auto& a : atoms_) m = std::max(m, a.length);
    return m;
  }

 private:
  void check_tail(const Tail& t) const {
    if (t.factor >= spec_.size() || spec_.factor(t.factor).kind != FactorKind::infinite_cyclic)
      throw std::invalid_argument("tail must sit on an infinite-cyclic factor");
    if (!(t.mass > 0.0 && t.mass <= 1.0)) throw std::invalid_argument("tail mass must be in (0, 1]");
    if (t.law == TailLaw::geometric && !(t.parameter > 0.0 && t.parameter < 1.0))
      throw std::invalid_argument("geometric tail ratio must be in (0, 1)");
    if (t.law == TailLaw::polynomial && !(t.parameter > 1.0))
      throw std::invalid_argument("polynomial tail exponent must be > 1");
  }

  GroupSpec spec_;
  std::vector<Atom> atoms_;
  std::optional<Tail> tail_;
};

namespace detail {

// E[e^{tau |k|}] for |k| drawn from the tail's law on {1, 2, ...}.
inline double tail_abs_moment(const Tail& t, double tau) {
  if (tau == 0.0) return 1.0;
  if (t.law == TailLaw::geometric) {
    const double q = t.parameter;
    const double r = q * std::exp(tau);
    if (r >= 1.0) return kInf;
    return (1.0 - q) * std::exp(tau) / (1.0 - r);
  }
  if (tau > 0.0) return kInf;
  const double p = t.parameter;
  double sum = 0.0;
  for (std::int64_t j = 1;; ++j) {
    const double term = std::pow(static_cast<double>(j), -p) * std::exp(tau * static_cast<double>(j));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum / boost::math::zeta(p);
}

}  // namespace detail

// sum_g mu(g) exp(tau l(g)); +inf when the series diverges.
inline double exp_moment(const StepDistribution& mu, double tau) {
  double total = 0.0;
  for (const auto& a : mu.atoms()) total += a.probability * std::exp(tau * static_cast<double>(a.length));
  if (const auto& t = mu.tail()) {
    if (mu.group().factor(t->factor).peripheral)
      total += t->mass * std::exp(tau);
    else
      total += t->mass * detail::tail_abs_moment(*t, tau);
  }
  return total;
}

// The exponentially tilted law mu_theta(g) = e^{theta l(g)} mu(g) / Z(theta).
// theta == 0 returns mu unchanged.
inline StepDistribution tilt(const StepDistribution& mu, double theta) {
  if (theta == 0.0) return mu;
  const double z = exp_moment(mu, theta);
  if (!std::isfinite(z)) throw std::domain_error("tilt: exponential moment is infinite at theta");
  std::vector<std::pair<GroupElement, double>> atoms;
  for (const auto& a : mu.atoms())
    atoms.emplace_back(a.element, a.probability * std::exp(theta * static_cast<double>(a.length)) / z);
  std::optional<Tail> tail = mu.tail();
  if (tail) {
    if (mu.group().factor(tail->factor).peripheral) {
      tail->mass = tail->mass * std::exp(theta) / z;
    } else if (tail->law == TailLaw::geometric) {
      tail->mass = tail->mass * detail::tail_abs_moment(*tail, theta) / z;
      tail->parameter *= std::exp(theta);
    } else {
      throw std::domain_error("tilt: polynomial tails only admit theta = 0");
    }
  }
  // Renormalize away rounding so the tilted law passes the 1e-12 check.
  double total = tail ? tail->mass : 0.0;
  for (const auto& a : atoms) total += a.second;
  for (auto& a : atoms) a.second /= total;
  if (tail) tail->mass /= total;
  return StepDistribution::from_doubles(mu.group(), atoms, tail);
}

// Draws increments from a StepDistribution.
class StepSampler {
 public:
  explicit StepSampler(const StepDistribution& mu) : mu_(&mu) {
    double acc = 0.0;
    for (const auto& a : mu.atoms()) cumulative_.push_back(acc += a.probability);
    if (const auto& t = mu.tail()) {
      tail_ = *t;
      if (t->law == TailLaw::polynomial) zipf_b_ = std::pow(2.0, t->parameter - 1.0);
    }
  }

  struct Draw {
    const GroupElement* element;
    Length length;
  };

  // `scratch` holds tail draws; the returned pointer aliases it or an atom.
  Draw draw(Rng& rng, GroupElement& scratch) const {
    const double u = uniform01(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it != cumulative_.end() || !tail_) {
      const auto i = it == cumulative_.end() ? cumulative_.size() - 1
                                             : static_cast<std::size_t>(it - cumulative_.begin());
      const auto& a = mu_->atoms()[i];
      return {&a.element, a.length};
    }
    BigInt k = draw_tail_abs(rng);
    if (rng() & 1u) k = -k;
    scratch = GroupElement({Syllable{tail_->factor, Power(k)}});
    return {&scratch, word_length(mu_->group(), scratch)};
  }

 private:
  BigInt draw_tail_abs(Rng& rng) const {
    const double param = tail_->parameter;
    if (tail_->law == TailLaw::geometric) {
      const double u = 1.0 - uniform01(rng);  // (0, 1]
      const double j = 1.0 + std::floor(std::log(u) / std::log(param));
      return BigInt(j);
    }
    // Rejection sampler for P(j) proportional to j^-p (Devroye, ch. X.6).
    for (;;) {
      const double u = 1.0 - uniform01(rng);
      const double v = uniform01(rng);
      const double x = std::floor(std::pow(u, -1.0 / (param - 1.0)));
      if (!std::isfinite(x)) continue;
      const double t = std::pow(1.0 + 1.0 / x, param - 1.0);
      if (v * x * (t - 1.0) / (zipf_b_ - 1.0) <= t / zipf_b_) return BigInt(x);
    }
  }

  const StepDistribution* mu_;
  std::vector<double> cumulative_;
  std::optional<Tail> tail_;
  double zipf_b_ = 0.0;
};

}  // namespace ldwalk
