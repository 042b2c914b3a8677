// Exact law of l(Y_n) for finitely supported step distributions.
//
// Two routes are available. The element route convolves the law of Y_n over
// normal forms, which is general but grows with the ball. The lumped route
// runs a Markov chain on (length, factor of the last letter); it only applies
// to nearest-neighbour measures whose transition profile is the same for all
// letters of a factor and where the factor below the last letter is forced,
// and it is checked exactly against those conditions before use.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "ldwalk/group.hpp"
#include "ldwalk/numeric.hpp"
#include "ldwalk/step_distribution.hpp"

namespace ldwalk {

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, std::size_t reached)
      : std::runtime_error(what + " (reachable set reached " + std::to_string(reached) + ")"),
        reached_(reached) {}
  std::size_t reached() const noexcept { return reached_; }

 private:
  std::size_t reached_;
};

enum class ExactMethod { automatic, element, lumped };

struct ExactOptions {
  ExactMethod method = ExactMethod::automatic;
  std::size_t max_states = 4'000'000;
};

namespace detail {

template <class W>
W atom_weight(const StepDistribution::Atom& a) {
  if constexpr (std::is_same_v<W, Rational>)
    return a.weight;
  else
    return static_cast<W>(a.probability);
}

template <class W>
void require_exact_support(const StepDistribution& mu) {
  if (!mu.finite_support())
    throw std::invalid_argument("exact length distribution needs a finitely supported measure");
  if constexpr (std::is_same_v<W, Rational>) {
    if (!mu.exactly_normalized())
      throw std::invalid_argument("rational mode needs exact weights summing to exactly 1");
  }
}

}  // namespace detail

// Law of Y_n over group elements, by n-fold convolution.
template <class W>
ElementMap<W> element_law(const StepDistribution& mu, std::size_t n, std::size_t max_states = 4'000'000) {
  detail::require_exact_support<W>(mu);
  const auto& spec = mu.group();
  ElementMap<W> law;
  law.emplace(identity(), W(1));
  for (std::size_t step = 0; step < n; ++step) {
    ElementMap<W> next;
    next.reserve(law.size() * mu.atoms().size());
    for (const auto& [g, p] : law)
      for (const auto& a : mu.atoms()) {
        auto h = multiply(spec, g, a.element);
        next[std::move(h)] += p * detail::atom_weight<W>(a);
        if (next.size() > max_states)
          throw BudgetExceeded("element_law: state budget exceeded at step " + std::to_string(step + 1),
                               next.size());
      }
    law = std::move(next);
  }
  return law;
}

// Markov chain on (length, class of last letter) where class = factor index.
template <class W>
class LumpedChain {
 public:
  // nullopt when the lumping conditions fail for this measure.
  static std::optional<LumpedChain> build(const StepDistribution& mu) {
    if (!mu.finite_support()) return std::nullopt;
    const auto& spec = mu.group();
    const std::size_t classes = spec.size();
    for (const auto& a : mu.atoms())
      if (a.length > 1) return std::nullopt;
    // Letters per factor; infinite peripheral factors have infinitely many.
    std::vector<std::vector<GroupElement>> letters(classes);
    for (std::uint32_t f = 0; f < classes; ++f) {
      const auto& fs = spec.factor(f);
      if (fs.kind == FactorKind::infinite_cyclic && fs.peripheral) return std::nullopt;
      for (auto& [len, syl] : factor_syllables(spec, f, 1, std::int64_t{1}))
        letters[f].emplace_back(std::vector<Syllable>{syl});
    }
    LumpedChain chain;
    chain.classes_ = classes;
    chain.profile_.assign(classes, Profile{});
    for (std::uint32_t c = 0; c < classes; ++c) {
      std::optional<std::map<int, Rational>> reference;
      for (const auto& t : letters[c]) {
        std::map<int, Rational> profile;  // key: -2 down, -1 stay/side, k>=0 up into class k
        for (const auto& a : mu.atoms()) {
          const auto r = multiply(spec, t, a.element);
          const auto len = word_length(spec, r);
          int key;
          if (len == 0) {
            key = -2;
          } else if (len == 1) {
            key = -1;
          } else {
            key = static_cast<int>(r.syllables().back().factor);
          }
          profile[key] += a.weight;
        }
        if (!reference)
          reference = profile;
        else if (*reference != profile)
          return std::nullopt;
      }
      auto& p = chain.profile_[c];
      for (const auto& [key, w] : *reference) {
        if (key == -2)
          p.down = convert(w);
        else if (key == -1)
          p.stay = convert(w);
        else
          p.up.emplace_back(static_cast<std::size_t>(key), convert(w));
      }
    }
    // The class below a class-c letter must be forced.
    chain.below_.assign(classes, 0);
    for (std::uint32_t c = 0; c < classes; ++c) {
      const auto& fs = spec.factor(c);
      const bool letter_like = fs.kind == FactorKind::free || fs.kind == FactorKind::infinite_cyclic;
      if (letter_like) {
        if (classes != 1) return std::nullopt;
        chain.below_[c] = c;
      } else {
        if (classes != 2) return std::nullopt;
        chain.below_[c] = 1 - c;
      }
    }
    for (const auto& a : mu.atoms()) {
      if (a.length == 0)
        chain.origin_stay_ += convert(a.weight);
      else
        chain.origin_up_.emplace_back(a.element.syllables().back().factor, convert(a.weight));
    }
    return chain;
  }

  // P(l(Y_n) = k), k = 0..n.
  std::vector<W> distribution(std::size_t n) const {
    // state[len][c]; len = 0 uses column 0 only.
    std::vector<std::vector<W>> state(n + 2, std::vector<W>(classes_, W(0)));
    state[0][0] = W(1);
    std::size_t top = 0;
    for (std::size_t step = 0; step < n; ++step) {
      std::vector<std::vector<W>> next(n + 2, std::vector<W>(classes_, W(0)));
      const W origin = state[0][0];
      if (origin != W(0)) {
        next[0][0] += origin * origin_stay_;
        for (const auto& [c, w] : origin_up_) next[1][c] += origin * w;
      }
      for (std::size_t len = 1; len <= top; ++len)
        for (std::size_t c = 0; c < classes_; ++c) {
          const W p = state[len][c];
          if (p == W(0)) continue;
          const auto& prof = profile_[c];
          if (len == 1)
            next[0][0] += p * prof.down;
          else
            next[len - 1][below_[c]] += p * prof.down;
          next[len][c] += p * prof.stay;
          for (const auto& [d, w] : prof.up) next[len + 1][d] += p * w;
        }
      state = std::move(next);
      ++top;
    }
    std::vector<W> out(n + 1, W(0));
    for (std::size_t len = 0; len <= n; ++len)
      for (std::size_t c = 0; c < classes_; ++c) out[len] += state[len][c];
    return out;
  }

 private:
  struct Profile {
    W down = W(0);
    W stay = W(0);
    std::vector<std::pair<std::size_t, W>> up;
  };

  static W convert(const Rational& r) {
    if constexpr (std::is_same_v<W, Rational>)
      return r;
    else
      return static_cast<W>(to_double(r));
  }

  std::size_t classes_ = 0;
  std::vector<Profile> profile_;
  std::vector<std::size_t> below_;
  W origin_stay_ = W(0);
  std::vector<std::pair<std::size_t, W>> origin_up_;
};

// Exact P(l(Y_n) = k) for k = 0..n*maxstep. W is double or Rational.
template <class W = double>
std::vector<W> exact_length_distribution(const StepDistribution& mu, std::size_t n,
                                         const ExactOptions& opts = {}) {
  detail::require_exact_support<W>(mu);
  const Length maxstep = *mu.max_step();
  std::vector<W> out(n * maxstep + 1, W(0));
  if (opts.method != ExactMethod::element) {
    if (auto chain = LumpedChain<W>::build(mu)) {
      const auto d = chain->distribution(n);
      for (std::size_t k = 0; k < d.size() && k < out.size(); ++k) out[k] = d[k];
      return out;
    }
    if (opts.method == ExactMethod::lumped)
      throw std::invalid_argument("lumped route does not apply to this measure");
  }
  const auto law = element_law<W>(mu, n, opts.max_states);
  const auto& spec = mu.group();
  for (const auto& [g, p] : law) out[word_length(spec, g)] += p;
  return out;
}

}  // namespace ldwalk
