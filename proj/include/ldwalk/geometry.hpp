// Bounded distortion and the selection construction.
//
// find_sigma looks for a short connector sigma with
//   l(x sigma y) >= l(x) + l(y) - c,
// estimate_constants measures the smallest such c over a ball of pairs, and
// build_selection chains connectors sigma_1..sigma_{k-1} together with events
// E_k of nu^k-mass at least |B(e,C)|^-(k-1) on which the spliced product loses
// at most (k-1)c of length.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldwalk/exact.hpp"
#include "ldwalk/group.hpp"
#include "ldwalk/numeric.hpp"
#include "ldwalk/walk.hpp"

namespace ldwalk {

using Truncation = std::optional<std::int64_t>;

namespace detail {

// l(x sigma y) computed in place on a scratch copy of x.
inline std::int64_t spliced_length(const GroupSpec& spec, const GroupElement& x, std::int64_t lx,
                                   const GroupElement& sigma, const GroupElement& y,
                                   GroupElement& scratch) {
  scratch = x;
  std::int64_t len = lx;
  len += right_multiply(spec, scratch, sigma);
  len += right_multiply(spec, scratch, y);
  return len;
}

// Index of the first connector in `sigmas` with defect <= c.
inline std::optional<std::size_t> first_sigma(const GroupSpec& spec, const GroupElement& x, std::int64_t lx,
                                              const GroupElement& y, std::int64_t ly,
                                              const std::vector<GroupElement>& sigmas, std::int64_t c,
                                              GroupElement& scratch) {
  for (std::size_t s = 0; s < sigmas.size(); ++s)
    if (spliced_length(spec, x, lx, sigmas[s], y, scratch) >= lx + ly - c) return s;
  return std::nullopt;
}

inline void check_truncation(const GroupSpec& spec, const Truncation& truncation) {
  if (spec.has_infinite_peripheral() && !truncation)
    throw std::invalid_argument("infinite peripheral factor requires a truncation");
}

}  // namespace detail

// First sigma of ball(C), in enumeration order, with l(x sigma y) >= l(x) + l(y) - c.
inline std::optional<GroupElement> find_sigma(const GroupSpec& spec, const GroupElement& x,
                                              const GroupElement& y, Length C, std::int64_t c,
                                              const Truncation& truncation = std::nullopt) {
  if (c < 0) throw std::invalid_argument("find_sigma: c must be >= 0");
  detail::check_truncation(spec, truncation);
  const auto sigmas = ball(spec, C, truncation);
  GroupElement scratch;
  const auto lx = static_cast<std::int64_t>(word_length(spec, x));
  const auto ly = static_cast<std::int64_t>(word_length(spec, y));
  if (auto s = detail::first_sigma(spec, x, lx, y, ly, sigmas, c, scratch)) return sigmas[*s];
  return std::nullopt;
}

struct Witness {
  std::uint32_t x = 0;      // index into DistortionReport::pair_ball
  std::uint32_t y = 0;
  std::uint32_t sigma = 0;  // index into DistortionReport::sigma_ball
  std::int64_t defect = 0;  // l(x) + l(y) - l(x sigma y)
};

struct DistortionReport {
  Length C_used = 0;
  Length R = 0;
  Truncation truncation;
  std::int64_t c_min = 0;
  std::vector<GroupElement> pair_ball;   // ball(R)
  std::vector<GroupElement> sigma_ball;  // ball(C_used)
  std::vector<Witness> witnesses;        // one per scanned pair, row-major over pair_ball^2
  std::size_t pairs_scanned = 0;
};

struct ProbeOptions {
  std::size_t max_pairs = 50'000'000;
  std::size_t threads = 0;
};

// For each C in 0..C_max, the least c making find_sigma succeed on every pair
// of ball(R)^2, with the witness connector for each pair.
inline std::vector<DistortionReport> estimate_constants(const GroupSpec& spec, Length R, Length C_max,
                                                        const Truncation& truncation = std::nullopt,
                                                        const ProbeOptions& opts = {}) {
  detail::check_truncation(spec, truncation);
  const auto points = ball(spec, R, truncation);
  const std::size_t pairs = points.size() * points.size();
  if (pairs > opts.max_pairs) throw BudgetExceeded("estimate_constants: pair budget exceeded", pairs);
  std::vector<std::int64_t> lengths;
  for (const auto& g : points) lengths.push_back(static_cast<std::int64_t>(word_length(spec, g)));

  std::vector<DistortionReport> reports;
  for (Length C = 0; C <= C_max; ++C) {
    DistortionReport rep;
    rep.C_used = C;
    rep.R = R;
    rep.truncation = truncation;
    rep.pair_ball = points;
    rep.sigma_ball = ball(spec, C, truncation);
    const auto& sigmas = rep.sigma_ball;

    // Pass 1: the least defect achievable per pair, floored at 0.
    std::vector<std::int64_t> worst_per_x(points.size(), 0);
    detail::parallel_chunks(points.size(), opts.threads, [&](std::size_t begin, std::size_t end) {
      GroupElement scratch;
      for (std::size_t i = begin; i < end; ++i) {
        std::int64_t worst = 0;
        for (std::size_t j = 0; j < points.size(); ++j) {
          std::int64_t best = std::numeric_limits<std::int64_t>::max();
          for (const auto& s : sigmas) {
            const auto len = detail::spliced_length(spec, points[i], lengths[i], s, points[j], scratch);
            best = std::min(best, lengths[i] + lengths[j] - len);
            if (best <= 0) break;
          }
          worst = std::max(worst, best);
        }
        worst_per_x[i] = worst;
      }
    });
    rep.c_min = points.empty() ? 0 : *std::max_element(worst_per_x.begin(), worst_per_x.end());

    // Pass 2: witnesses at c_min.
    rep.witnesses.resize(pairs);
    detail::parallel_chunks(points.size(), opts.threads, [&](std::size_t begin, std::size_t end) {
      GroupElement scratch;
      for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = 0; j < points.size(); ++j) {
          const auto s = detail::first_sigma(spec, points[i], lengths[i], points[j], lengths[j], sigmas,
                                             rep.c_min, scratch);
          const auto len = detail::spliced_length(spec, points[i], lengths[i], sigmas[*s], points[j], scratch);
          rep.witnesses[i * points.size() + j] =
              Witness{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                      static_cast<std::uint32_t>(*s), lengths[i] + lengths[j] - len};
        }
    });
    rep.pairs_scanned = pairs;
    reports.push_back(std::move(rep));
  }
  return reports;
}

// ---- selection ---------------------------------------------------------------

class SelectionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One step of the construction: from the level-(j-1) law on products to the
// level-j event.
struct SelectionLevel {
  GroupElement sigma;                              // sigma_{j-1}
  std::size_t sigma_index = 0;                     // position in ball(C)
  ElementMap<std::vector<std::size_t>> accepted;   // product w -> indices of g in F with (w, g) kept
  Rational pair_mass;                              // (nu_{j-1} x nu)(kept pairs)
  Rational tuple_mass;                             // nu^j(E_j)
  ElementMap<Rational> pushforward;                // nu_j on the spliced products
};

struct SelectionCertificate {
  GroupSpec spec;
  std::vector<GroupElement> support;  // F
  std::vector<Rational> nu;
  std::size_t k = 2;
  std::int64_t c = 0;
  Length C = 0;
  Truncation truncation;
  std::size_t ball_size = 0;  // |B(e, C)|
  bool exact = true;          // masses are exact rationals
  std::vector<SelectionLevel> levels;  // levels[j - 2] builds E_j

  std::int64_t defect_bound() const { return static_cast<std::int64_t>(k - 1) * c; }
  std::vector<GroupElement> sigmas() const {
    std::vector<GroupElement> out;
    for (const auto& l : levels) out.push_back(l.sigma);
    return out;
  }
  // |B(e,C)|^-(j-1)
  Rational mass_bound(std::size_t j) const {
    Rational b = 1;
    for (std::size_t i = 1; i < j; ++i) b /= static_cast<long>(ball_size);
    return b;
  }
};

// Iterative construction: at each level pick the connector class of largest
// (nu_{j-1} x nu)-mass (ties: enumeration order), keep its pairs, and push the
// normalized restricted measure forward through (w, g) -> w sigma g.
inline SelectionCertificate build_selection(const GroupSpec& spec, const std::vector<GroupElement>& F,
                                            const std::vector<Rational>& nu, std::size_t k,
                                            std::int64_t c, Length C,
                                            const Truncation& truncation = std::nullopt) {
  if (k < 2) throw std::invalid_argument("build_selection: k must be >= 2");
  if (c < 0) throw std::invalid_argument("build_selection: c must be >= 0");
  if (F.empty() || F.size() != nu.size())
    throw std::invalid_argument("build_selection: F and nu must be nonempty and of equal size");
  detail::check_truncation(spec, truncation);
  Rational total = 0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    validate(spec, F[i]);
    if (nu[i] <= 0) throw std::invalid_argument("build_selection: nu must be positive on F");
    for (std::size_t j = 0; j < i; ++j)
      if (F[j] == F[i]) throw std::invalid_argument("build_selection: F has repeated elements");
    total += nu[i];
  }
  if (total != 1) throw std::invalid_argument("build_selection: nu must sum to exactly 1");

  SelectionCertificate cert{spec, F, nu, k, c, C, truncation, 0, true, {}};
  const auto sigmas = ball(spec, C, truncation);
  cert.ball_size = sigmas.size();

  std::vector<std::int64_t> f_len;
  for (const auto& g : F) f_len.push_back(static_cast<std::int64_t>(word_length(spec, g)));

  // Level-1 law: nu on F, in enumeration order for determinism.
  std::vector<std::pair<GroupElement, Rational>> law;
  for (std::size_t i = 0; i < F.size(); ++i) law.emplace_back(F[i], nu[i]);
  Rational tuple_mass = 1;
  GroupElement scratch;

  for (std::size_t j = 2; j <= k; ++j) {
    std::sort(law.begin(), law.end(),
              [&](const auto& a, const auto& b) { return enumeration_less(spec, a.first, b.first); });
    std::vector<std::vector<std::size_t>> choice(law.size(), std::vector<std::size_t>(F.size()));
    std::map<std::size_t, Rational> class_mass;
    for (std::size_t w = 0; w < law.size(); ++w) {
      const auto lw = static_cast<std::int64_t>(word_length(spec, law[w].first));
      for (std::size_t g = 0; g < F.size(); ++g) {
        const auto s = detail::first_sigma(spec, law[w].first, lw, F[g], f_len[g], sigmas, c, scratch);
        if (!s)
          throw SelectionFailure("build_selection: no connector in B(e," + std::to_string(C) +
                                 ") achieves defect <= " + std::to_string(c) + " for " +
                                 to_text(spec, law[w].first) + " and " + to_text(spec, F[g]));
        choice[w][g] = *s;
        class_mass[*s] += law[w].second * nu[g];
      }
    }
    auto best = class_mass.begin();
    for (auto it = class_mass.begin(); it != class_mass.end(); ++it)
      if (it->second > best->second) best = it;

    SelectionLevel level;
    level.sigma_index = best->first;
    level.sigma = sigmas[best->first];
    level.pair_mass = best->second;
    tuple_mass *= level.pair_mass;
    level.tuple_mass = tuple_mass;
    for (std::size_t w = 0; w < law.size(); ++w)
      for (std::size_t g = 0; g < F.size(); ++g) {
        if (choice[w][g] != level.sigma_index) continue;
        level.accepted[law[w].first].push_back(g);
        auto product = multiply(spec, multiply(spec, law[w].first, level.sigma), F[g]);
        level.pushforward[product] += law[w].second * nu[g] / level.pair_mass;
      }
    law.assign(level.pushforward.begin(), level.pushforward.end());
    cert.levels.push_back(std::move(level));
  }
  return cert;
}

// Membership of a tuple (indices into F) in E_j, j = tuple size, through the
// certificate's level maps. On success `product` holds g_1 sigma_1 ... g_j.
inline bool selection_member(const SelectionCertificate& cert, const std::vector<std::size_t>& tuple,
                             GroupElement& product) {
  product = cert.support[tuple[0]];
  for (std::size_t i = 1; i < tuple.size(); ++i) {
    const auto& level = cert.levels[i - 1];
    const auto it = level.accepted.find(product);
    if (it == level.accepted.end()) return false;
    if (std::find(it->second.begin(), it->second.end(), tuple[i]) == it->second.end()) return false;
    right_multiply(cert.spec, product, level.sigma);
    right_multiply(cert.spec, product, cert.support[tuple[i]]);
  }
  return true;
}

struct VerificationResult {
  bool pass = true;
  std::string reason;
  std::vector<std::size_t> counterexample;  // tuple of indices into F
  std::size_t level = 0;                    // j at which the failure occurred
  bool sampled = false;
  double coverage = 1.0;  // fraction of tuples examined at the top level
  std::vector<Rational> recomputed_mass;  // nu^j(E_j), j = 2..k (explicit mode)
};

struct VerifyOptions {
  std::size_t explicit_budget = 2'000'000;  // max tuples over all levels
  std::size_t samples = 100'000;
  std::uint64_t seed = 1;
};

// Re-checks the connectors, every tuple's defect inequality and all masses,
// independently of how the certificate was built.
inline VerificationResult verify_certificate(const SelectionCertificate& cert, const VerifyOptions& opts = {}) {
  VerificationResult res;
  const auto& spec = cert.spec;
  if (cert.levels.size() + 1 != cert.k) {
    res.pass = false;
    res.reason = "certificate has " + std::to_string(cert.levels.size()) + " levels for k = " +
                 std::to_string(cert.k);
    return res;
  }
  for (std::size_t i = 0; i < cert.levels.size(); ++i)
    if (word_length(spec, cert.levels[i].sigma) > cert.C) {
      res.pass = false;
      res.level = i + 2;
      res.reason = "sigma_" + std::to_string(i + 1) + " lies outside B(e, C)";
      return res;
    }
  const std::size_t m = cert.support.size();
  std::vector<std::int64_t> f_len;
  for (const auto& g : cert.support) f_len.push_back(static_cast<std::int64_t>(word_length(spec, g)));

  double total_tuples = 0;
  for (std::size_t j = 2; j <= cert.k; ++j) total_tuples += std::pow(static_cast<double>(m), static_cast<double>(j));
  GroupElement product;

  auto check_tuple = [&](const std::vector<std::size_t>& tuple, std::size_t j) -> bool {
    std::int64_t sum = 0;
    for (auto g : tuple) sum += f_len[g];
    const auto len = static_cast<std::int64_t>(word_length(spec, product));
    if (len < sum - static_cast<std::int64_t>(j - 1) * cert.c) {
      res.pass = false;
      res.level = j;
      res.counterexample = tuple;
      res.reason = "defect bound violated: l = " + std::to_string(len) + " < " + std::to_string(sum) +
                   " - " + std::to_string(static_cast<std::int64_t>(j - 1) * cert.c);
      return false;
    }
    return true;
  };

  if (total_tuples <= static_cast<double>(opts.explicit_budget)) {
    for (std::size_t j = 2; j <= cert.k; ++j) {
      Rational mass = 0;
      std::vector<std::size_t> tuple(j, 0);
      for (;;) {
        if (selection_member(cert, tuple, product)) {
          if (!check_tuple(tuple, j)) return res;
          Rational w = 1;
          for (auto g : tuple) w *= cert.nu[g];
          mass += w;
        }
        std::size_t pos = j;
        while (pos > 0 && ++tuple[pos - 1] == m) tuple[--pos] = 0;
        if (pos == 0) break;
      }
      res.recomputed_mass.push_back(mass);
      if (mass < cert.mass_bound(j)) {
        res.pass = false;
        res.level = j;
        res.reason = "measure bound violated: nu^" + std::to_string(j) + "(E_" + std::to_string(j) +
                     ") = " + to_string(mass) + " < " + to_string(cert.mass_bound(j));
        return res;
      }
      if (mass != cert.levels[j - 2].tuple_mass) {
        res.pass = false;
        res.level = j;
        res.reason = "recorded mass of E_" + std::to_string(j) + " does not match recomputation";
        return res;
      }
    }
    return res;
  }

  // Sampled mode: draw tuples from nu^k, check members at every prefix level.
  res.sampled = true;
  std::vector<double> cumulative;
  double acc = 0;
  for (const auto& w : cert.nu) cumulative.push_back(acc += to_double(w));
  std::size_t hits = 0;
  for (std::size_t s = 0; s < opts.samples; ++s) {
    auto rng = stream_for(opts.seed, s);
    std::vector<std::size_t> tuple;
    for (std::size_t i = 0; i < cert.k; ++i) {
      const double u = uniform01(rng) * acc;
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      tuple.push_back(std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), m - 1));
    }
    for (std::size_t j = 2; j <= cert.k; ++j) {
      std::vector<std::size_t> prefix(tuple.begin(), tuple.begin() + static_cast<std::ptrdiff_t>(j));
      if (!selection_member(cert, prefix, product)) break;
      if (!check_tuple(prefix, j)) return res;
      if (j == cert.k) ++hits;
    }
  }
  res.coverage = static_cast<double>(opts.samples) /
                 std::pow(static_cast<double>(m), static_cast<double>(cert.k));
  const double p_hat = static_cast<double>(hits) / static_cast<double>(opts.samples);
  const double bound = to_double(cert.mass_bound(cert.k));
  const double se = std::sqrt(std::max(p_hat * (1 - p_hat), 1.0 / opts.samples) / opts.samples);
  if (p_hat + 4.0 * se < bound) {
    res.pass = false;
    res.level = cert.k;
    res.reason = "sampled mass of E_k falls below the bound";
  }
  return res;
}

}  // namespace ldwalk
