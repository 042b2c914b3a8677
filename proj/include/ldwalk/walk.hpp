// Random walk sampling: admissibility, Monte Carlo traces of l(Y_n), escape rate.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "ldwalk/group.hpp"
#include "ldwalk/numeric.hpp"
#include "ldwalk/step_distribution.hpp"

namespace ldwalk {

enum class Admissibility { admissible, not_admissible, inconclusive };

inline const char* to_string(Admissibility a) {
  switch (a) {
    case Admissibility::admissible: return "admissible";
    case Admissibility::not_admissible: return "not_admissible";
    case Admissibility::inconclusive: return "inconclusive";
  }
  return "?";
}

struct AdmissibilityOptions {
  std::int64_t tail_truncation = 2;    // tail atoms z^k with |k| <= this join the support
  std::size_t max_elements = 2'000'000;  // closure size before giving up
};

// Bounded semigroup closure of supp(mu) up to products of `depth` factors.
// Admissible once the closure holds every generator (and, for infinite cyclic
// factors, z and z^-1); not admissible when the closure stops growing first.
inline Admissibility check_admissible(const StepDistribution& mu, std::size_t depth,
                                      const AdmissibilityOptions& opts = {}) {
  if (depth < 1) throw std::invalid_argument("check_admissible: depth must be >= 1");
  const auto& spec = mu.group();
  std::vector<GroupElement> support;
  ElementSet seen;
  for (const auto& a : mu.atoms())
    if (seen.insert(a.element).second) support.push_back(a.element);
  if (const auto& t = mu.tail())
    for (std::int64_t k = 1; k <= opts.tail_truncation; ++k)
      for (std::int64_t s : {k, -k}) {
        GroupElement z({Syllable{t->factor, Power(s)}});
        if (seen.insert(z).second) support.push_back(z);
      }
  const auto targets = generators(spec, std::int64_t{1});
  auto covered = [&] {
    return std::all_of(targets.begin(), targets.end(),
                       [&](const GroupElement& g) { return seen.count(g) > 0; });
  };
  std::vector<GroupElement> frontier = support;
  for (std::size_t d = 1;; ++d) {
    if (covered()) return Admissibility::admissible;
    if (frontier.empty()) return Admissibility::not_admissible;
    if (d == depth) return Admissibility::inconclusive;
    std::vector<GroupElement> next;
    for (const auto& g : frontier)
      for (const auto& s : support) {
        auto h = multiply(spec, g, s);
        if (seen.insert(h).second) next.push_back(std::move(h));
      }
    if (seen.size() > opts.max_elements) return Admissibility::inconclusive;
    frontier = std::move(next);
  }
}

// Per-sample records of l(Y_n) at increasing checkpoints.
struct LengthTrace {
  std::vector<std::uint64_t> checkpoints;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<Length> lengths;  // samples x checkpoints, row-major

  Length at(std::size_t sample, std::size_t checkpoint) const {
    return lengths[sample * checkpoints.size() + checkpoint];
  }
  std::optional<std::size_t> checkpoint_index(std::uint64_t n) const {
    const auto it = std::find(checkpoints.begin(), checkpoints.end(), n);
    if (it == checkpoints.end()) return std::nullopt;
    return static_cast<std::size_t>(it - checkpoints.begin());
  }
};

inline void check_checkpoints(const std::vector<std::uint64_t>& checkpoints) {
  if (checkpoints.empty()) throw std::invalid_argument("checkpoints must be nonempty");
  for (std::size_t i = 0; i < checkpoints.size(); ++i)
    if (checkpoints[i] == 0 || (i > 0 && checkpoints[i] <= checkpoints[i - 1]))
      throw std::invalid_argument("checkpoints must be positive and strictly increasing");
}

namespace detail {

inline void walk_row(const GroupSpec& spec, const StepSampler& sampler,
                     const std::vector<std::uint64_t>& checkpoints, Rng& rng, Length* out) {
  GroupElement position;
  GroupElement scratch;
  std::int64_t length = 0;
  std::uint64_t t = 0;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    for (; t < checkpoints[c]; ++t) {
      const auto step = sampler.draw(rng, scratch);
      length += right_multiply(spec, position, *step.element);
    }
    out[c] = static_cast<Length>(length);
  }
}

inline std::size_t worker_count(std::size_t requested, std::size_t work) {
  std::size_t n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, work));
}

// Runs body(begin, end) over [0, total) split into contiguous chunks.
template <class Body>
void parallel_chunks(std::size_t total, std::size_t threads, Body&& body) {
  const auto workers = worker_count(threads, total);
  if (workers == 1) {
    body(std::size_t{0}, total);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (total + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk, end = std::min(total, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

// One walk issued from e; l(Y_n) at each checkpoint.
inline std::vector<Length> sample_walk(const StepDistribution& mu,
                                       const std::vector<std::uint64_t>& checkpoints, Rng& rng) {
  check_checkpoints(checkpoints);
  StepSampler sampler(mu);
  std::vector<Length> row(checkpoints.size());
  detail::walk_row(mu.group(), sampler, checkpoints, rng, row.data());
  return row;
}

// `samples` independent walks; sample i uses stream_for(seed, i), so the result
// does not depend on `threads`.
inline LengthTrace simulate(const StepDistribution& mu, const std::vector<std::uint64_t>& checkpoints,
                            std::size_t samples, std::uint64_t seed, std::size_t threads = 0) {
  check_checkpoints(checkpoints);
  LengthTrace trace{checkpoints, samples, seed, std::vector<Length>(samples * checkpoints.size())};
  StepSampler sampler(mu);
  detail::parallel_chunks(samples, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto rng = stream_for(seed, i);
      detail::walk_row(mu.group(), sampler, checkpoints, rng, &trace.lengths[i * checkpoints.size()]);
    }
  });
  return trace;
}

struct EscapeRate {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::size_t samples = 0;
};

// Sample mean of l(Y_N)/N at the largest checkpoint N, with a normal interval.
inline EscapeRate escape_rate_estimate(const LengthTrace& trace, double confidence = 0.95) {
  if (trace.samples < 2 || trace.checkpoints.empty())
    throw std::invalid_argument("escape_rate_estimate: need at least 2 samples");
  const std::size_t last = trace.checkpoints.size() - 1;
  const auto n = trace.checkpoints[last];
  long double sum = 0;
  for (std::size_t i = 0; i < trace.samples; ++i) sum += trace.at(i, last);
  const long double denom = static_cast<long double>(n) * static_cast<long double>(trace.samples);
  const double mean = static_cast<double>(sum / denom);
  long double ss = 0;
  for (std::size_t i = 0; i < trace.samples; ++i) {
    const long double d = static_cast<long double>(trace.at(i, last)) / n - mean;
    ss += d * d;
  }
  const double var = static_cast<double>(ss / (trace.samples - 1));
  const double se = std::sqrt(var / static_cast<double>(trace.samples));
  const double z =
      boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + confidence / 2.0);
  return {mean, mean - z * se, mean + z * se, se, n, trace.samples};
}

}  // namespace ldwalk
