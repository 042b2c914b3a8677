// Exact rationals, deterministic random streams and small numeric helpers.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace ldwalk {

using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                             boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<
    boost::multiprecision::rational_adaptor<boost::multiprecision::cpp_int_backend<>>,
    boost::multiprecision::et_off>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Parses "3", "-1/4", "0.125", "2.5e-3" exactly.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&] { throw std::invalid_argument("not a rational number: '" + std::string(text) + "'"); };
  std::string s(text);
  if (s.empty()) fail();
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const Rational num = parse_rational(s.substr(0, slash));
    const Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) fail();
    return num / den;
  }
  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') negative = s[pos++] == '-';
  BigInt digits = 0;
  long long scale = 0;
  bool any = false, dot = false;
  for (; pos < s.size(); ++pos) {
    const char c = s[pos];
    if (c >= '0' && c <= '9') {
      digits = digits * 10 + (c - '0');
      if (dot) --scale;
      any = true;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!any) fail();
  if (pos < s.size()) {
    if (s[pos] != 'e' && s[pos] != 'E') fail();
    long long e = 0;
    const auto* first = s.data() + pos + 1;
    const auto* last = s.data() + s.size();
    if (first < last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, e);
    if (ec != std::errc{} || ptr != last) fail();
    scale += e;
  }
  if (scale > 4000 || scale < -4000) fail();
  Rational r(digits);
  const BigInt ten_pow = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::llabs(scale)));
  r = scale >= 0 ? r * ten_pow : r / ten_pow;
  return negative ? Rational(-r) : r;
}

// Shortest decimal spelling of a double, read back exactly. 0.1 -> 1/10.
inline Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite weight");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return parse_rational(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

inline std::string to_string(const Rational& r) {
  return boost::multiprecision::numerator(r).str() + "/" + boost::multiprecision::denominator(r).str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Exact value of a double as a rational (doubles are dyadic).
inline Rational exact_rational(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
  int exponent = 0;
  const double mantissa = std::frexp(x, &exponent);
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mantissa, 53));
  Rational r(scaled);
  const int shift = exponent - 53;
  const BigInt two_pow = boost::multiprecision::pow(BigInt(2), static_cast<unsigned>(std::abs(shift)));
  return shift >= 0 ? r * two_pow : r / two_pow;
}

// Rational lower/upper bounds on exp(q) for q >= 0, width below 2^-precision_bits.
inline std::pair<Rational, Rational> exp_bracket(const Rational& q, unsigned precision_bits = 160) {
  if (q < 0) throw std::invalid_argument("exp_bracket expects q >= 0");
  const BigInt scale = boost::multiprecision::pow(BigInt(2), precision_bits);
  const Rational eps(BigInt(1), scale);
  Rational sum = 1, term = 1;
  for (unsigned i = 1;; ++i) {
    term = term * q / i;
    sum += term;
    // Remaining tail is bounded by term * q/(i+1) / (1 - q/(i+2)) once i+2 > q.
    if (Rational(i + 2) > q) {
      const Rational ratio = q / (i + 2);
      const Rational tail = term * q / (i + 1) / (1 - ratio);
      if (tail < eps) {
        auto floor_to = [&](const Rational& v) {
          const Rational scaled = v * scale;
          return Rational(BigInt(boost::multiprecision::numerator(scaled) /
                                 boost::multiprecision::denominator(scaled)),
                          scale);
        };
        const Rational lo = floor_to(sum);
        const Rational hi = floor_to(sum + tail) + eps;
        return {lo, hi};
      }
    }
  }
}

inline double log_sum_exp(const std::vector<double>& terms) {
  double m = -kInf;
  for (double t : terms) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  double acc = 0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

// ---- random streams ----------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

// Independent, deterministically derived stream for one sample index.
inline Rng stream_for(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

// Uniform on [0, 1) with 53 random bits; portable across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace ldwalk
