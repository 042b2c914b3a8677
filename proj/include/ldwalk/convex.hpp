// One-dimensional extended-real convex analysis on grids.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ldwalk/numeric.hpp"

namespace ldwalk {

// Sampled function on a strictly increasing grid; values may be +inf.
class Grid1DFunction {
 public:
  Grid1DFunction(std::vector<double> xs, std::vector<double> values)
      : xs_(std::move(xs)), values_(std::move(values)) {
    if (xs_.size() != values_.size()) throw std::invalid_argument("Grid1DFunction: size mismatch");
    if (xs_.empty()) throw std::invalid_argument("Grid1DFunction: empty grid");
    bool any_finite = false;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      if (!std::isfinite(xs_[i])) throw std::invalid_argument("Grid1DFunction: non-finite grid point");
      if (i > 0 && !(xs_[i] > xs_[i - 1]))
        throw std::invalid_argument("Grid1DFunction: grid must be strictly increasing");
      if (std::isnan(values_[i]) || values_[i] == -kInf)
        throw std::invalid_argument("Grid1DFunction: values must be real or +inf");
      any_finite = any_finite || std::isfinite(values_[i]);
    }
    if (!any_finite) throw std::invalid_argument("Grid1DFunction: needs at least one finite value");
  }

  template <class F>
  static Grid1DFunction sample(std::vector<double> xs, F&& f) {
    std::vector<double> v;
    v.reserve(xs.size());
    for (double x : xs) v.push_back(f(x));
    return Grid1DFunction(std::move(xs), std::move(v));
  }

  const std::vector<double>& xs() const noexcept { return xs_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return xs_.size(); }
  double x(std::size_t i) const { return xs_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> xs_;
  std::vector<double> values_;
};

// start, start+step, ..., up to stop (inclusive within half a step), each point
// rounded to 12 decimals.
inline std::vector<double> uniform_grid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("uniform_grid: bad range");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 0.5));
  for (std::size_t i = 0; i <= count; ++i) {
    const double x = start + static_cast<double>(i) * step;
    const double snapped = std::round(x * 1e12) / 1e12;  // 0.30000000000000004 -> 0.3
    out.push_back(std::abs(x) < 1e6 ? snapped : x);
  }
  return out;
}

// f*(theta) = max_i (theta x_i - f(x_i)) over finite entries. Direct O(|xs| |thetas|).
inline Grid1DFunction legendre(const Grid1DFunction& f, const std::vector<double>& thetas) {
  std::vector<double> out;
  out.reserve(thetas.size());
  for (double theta : thetas) {
    double best = -kInf;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!std::isfinite(f[i])) continue;
      best = std::max(best, theta * f.x(i) - f[i]);
    }
    out.push_back(best);
  }
  return Grid1DFunction(thetas, std::move(out));
}

// I(x) = sup_theta (theta x - Lambda(theta)) on the grid `xs`. Lambda must be
// finite at every grid point.
inline Grid1DFunction rate_from_mgf(const Grid1DFunction& lambda, const std::vector<double>& xs) {
  for (double v : lambda.values())
    if (!std::isfinite(v))
      throw std::domain_error(
          "rate_from_mgf: the limiting log-MGF must be finite everywhere on its grid");
  return legendre(lambda, xs);
}

// Default rate grid: x in [0, max slope of Lambda] with the given step.
inline Grid1DFunction rate_from_mgf(const Grid1DFunction& lambda, double step = 0.02) {
  double slope = 0.0;
  for (std::size_t i = 1; i < lambda.size(); ++i)
    if (std::isfinite(lambda[i]) && std::isfinite(lambda[i - 1]))
      slope = std::max(slope, (lambda[i] - lambda[i - 1]) / (lambda.x(i) - lambda.x(i - 1)));
  return rate_from_mgf(lambda, uniform_grid(0.0, std::max(slope, step), step));
}

// Greatest convex function below f, evaluated on f's grid. Points outside the
// span of finite values stay +inf.
inline Grid1DFunction convex_minorant(const Grid1DFunction& f) {
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i])) continue;
    while (hull.size() >= 2) {
      const auto a = hull[hull.size() - 2], b = hull.back();
      // drop b when it lies on or above segment a-i
      const double cross = (f.x(b) - f.x(a)) * (f[i] - f[a]) - (f[b] - f[a]) * (f.x(i) - f.x(a));
      if (cross <= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(i);
  }
  std::vector<double> out(f.size(), kInf);
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const auto a = hull[h], b = hull[h + 1];
    for (std::size_t i = a; i <= b; ++i) {
      if (i == a || i == b) {
        out[i] = f[i];
        continue;
      }
      const double t = (f.x(i) - f.x(a)) / (f.x(b) - f.x(a));
      out[i] = f[a] + t * (f[b] - f[a]);
    }
  }
  if (hull.size() == 1) out[hull[0]] = f[hull[0]];
  return Grid1DFunction(f.xs(), std::move(out));
}

struct BiconjugateResult {
  double gap = 0.0;  // max |f** - f| over finite grid points
  Grid1DFunction conjugate;
  Grid1DFunction biconjugate;
};

// f** through the dual grid `thetas`, compared with f on its own grid.
inline BiconjugateResult biconjugate_check(const Grid1DFunction& f, const std::vector<double>& thetas) {
  auto star = legendre(f, thetas);
  auto bistar = legendre(star, f.xs());
  double gap = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (std::isfinite(f[i])) gap = std::max(gap, std::abs(bistar[i] - f[i]));
  return {gap, std::move(star), std::move(bistar)};
}

// Dual grid spanning the finite-difference slopes of f, as many points as f.
inline BiconjugateResult biconjugate_check(const Grid1DFunction& f) {
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 1; i < f.size(); ++i)
    if (std::isfinite(f[i]) && std::isfinite(f[i - 1])) {
      const double s = (f[i] - f[i - 1]) / (f.x(i) - f.x(i - 1));
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  if (!std::isfinite(lo)) return biconjugate_check(f, std::vector<double>{0.0});
  const std::size_t n = std::max<std::size_t>(f.size(), 2);
  std::vector<double> thetas;
  for (std::size_t j = 0; j < n; ++j)
    thetas.push_back(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1));
  return biconjugate_check(f, thetas);
}

}  // namespace ldwalk
