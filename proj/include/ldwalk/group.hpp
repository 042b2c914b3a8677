// Free products of cyclic and free factors: normal forms, the relative word
// length, ball enumeration and a breadth-first oracle for the length.
//
// An element is stored in its free-product normal form: an alternating list of
// nontrivial syllables, each living in one factor. The relative length counts
// one for every syllable of a peripheral factor, one per letter of a free
// factor, and |k| for a syllable z^k of a non-peripheral infinite cyclic factor.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "ldwalk/numeric.hpp"

namespace ldwalk {

using Length = std::uint64_t;

enum class FactorKind { finite_cyclic, infinite_cyclic, free };

inline const char* to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::finite_cyclic: return "finite-cyclic";
    case FactorKind::infinite_cyclic: return "infinite-cyclic";
    case FactorKind::free: return "free";
  }
  return "?";
}

struct FactorSpec {
  FactorKind kind = FactorKind::finite_cyclic;
  std::int64_t order = 0;  // finite-cyclic only
  int rank = 0;            // free only
  bool peripheral = true;

  static FactorSpec finite_cyclic(std::int64_t m, bool peripheral = true) {
    return {FactorKind::finite_cyclic, m, 0, peripheral};
  }
  static FactorSpec infinite_cyclic(bool peripheral = true) {
    return {FactorKind::infinite_cyclic, 0, 0, peripheral};
  }
  static FactorSpec free(int k) { return {FactorKind::free, 0, k, false}; }

  friend bool operator==(const FactorSpec&, const FactorSpec&) = default;
};

class GroupSpec {
 public:
  explicit GroupSpec(std::vector<FactorSpec> factors) : factors_(std::move(factors)) {
    validate();
  }

  const std::vector<FactorSpec>& factors() const noexcept { return factors_; }
  const FactorSpec& factor(std::size_t i) const { return factors_.at(i); }
  std::size_t size() const noexcept { return factors_.size(); }

  bool has_infinite_peripheral() const noexcept {
    return std::any_of(factors_.begin(), factors_.end(), [](const FactorSpec& f) {
      return f.kind == FactorKind::infinite_cyclic && f.peripheral;
    });
  }

  static char letter(std::size_t i) { return static_cast<char>('a' + i); }

  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;

 private:
  void validate() const {
    if (factors_.empty()) throw std::invalid_argument("GroupSpec: at least one factor required");
    if (factors_.size() > 26) throw std::invalid_argument("GroupSpec: at most 26 factors");
    bool big_free = false;
    for (const auto& f : factors_) {
      switch (f.kind) {
        case FactorKind::finite_cyclic:
          if (f.order < 2) throw std::invalid_argument("FactorSpec: finite-cyclic order must be >= 2");
          break;
        case FactorKind::free:
          if (f.rank < 1) throw std::invalid_argument("FactorSpec: free rank must be >= 1");
          if (f.peripheral)
            throw std::invalid_argument("FactorSpec: free factors cannot be peripheral");
          if (f.rank >= 2) big_free = true;
          break;
        case FactorKind::infinite_cyclic:
          break;
      }
    }
    if (big_free) return;
    const bool dihedral = factors_.size() == 2 &&
                          std::all_of(factors_.begin(), factors_.end(), [](const FactorSpec& f) {
                            return f.kind == FactorKind::finite_cyclic && f.order == 2;
                          });
    if (factors_.size() < 2 || dihedral)
      throw std::invalid_argument("GroupSpec: group must be non-elementary");
  }

  std::vector<FactorSpec> factors_;
};

// Payloads: residue in [1, m) for finite-cyclic, nonzero power for
// infinite-cyclic, nonempty freely reduced word over +-[1..k] for free.
using Residue = std::int64_t;
using Power = BigInt;
using FreeWord = std::vector<std::int32_t>;

struct Syllable {
  std::uint32_t factor = 0;
  std::variant<Residue, Power, FreeWord> payload;

  friend bool operator==(const Syllable&, const Syllable&) = default;
};

class GroupElement {
 public:
  GroupElement() = default;
  explicit GroupElement(std::vector<Syllable> syllables) : syllables_(std::move(syllables)) {}

  const std::vector<Syllable>& syllables() const noexcept { return syllables_; }
  bool is_identity() const noexcept { return syllables_.empty(); }

  friend bool operator==(const GroupElement&, const GroupElement&) = default;

 private:
  friend std::int64_t push_syllable(const GroupSpec&, GroupElement&, const Syllable&);
  std::vector<Syllable> syllables_;
};

namespace detail {

inline std::size_t expected_index(FactorKind kind) {
  switch (kind) {
    case FactorKind::finite_cyclic: return 0;
    case FactorKind::infinite_cyclic: return 1;
    case FactorKind::free: return 2;
  }
  return 0;
}

inline void check_kind(const GroupSpec& spec, const Syllable& s) {
  if (s.factor >= spec.size())
    throw std::invalid_argument("syllable factor index out of range for this GroupSpec");
  if (s.payload.index() != expected_index(spec.factor(s.factor).kind))
    throw std::invalid_argument("syllable payload does not match factor kind");
}

inline Length abs_to_length(const BigInt& v) {
  BigInt a = abs(v);
  if (a > BigInt(std::numeric_limits<std::int64_t>::max()))
    throw std::overflow_error("syllable length exceeds 64-bit range");
  return static_cast<Length>(a.convert_to<std::int64_t>());
}

inline std::int32_t letter_rank(std::int32_t l) { return 2 * std::abs(l) + (l < 0 ? 1 : 0); }

}  // namespace detail

inline GroupElement identity() { return GroupElement{}; }

inline Length syllable_length(const GroupSpec& spec, const Syllable& s) {
  const auto& f = spec.factor(s.factor);
  switch (f.kind) {
    case FactorKind::finite_cyclic: return 1;
    case FactorKind::infinite_cyclic:
      return f.peripheral ? 1 : detail::abs_to_length(std::get<Power>(s.payload));
    case FactorKind::free: return std::get<FreeWord>(s.payload).size();
  }
  return 0;
}

inline Length word_length(const GroupSpec& spec, const GroupElement& g) {
  Length total = 0;
  for (const auto& s : g.syllables()) total += syllable_length(spec, s);
  return total;
}

// Appends `s` on the right of `acc`, reducing at the junction. Returns the
// change in relative length.
inline std::int64_t push_syllable(const GroupSpec& spec, GroupElement& acc, const Syllable& s) {
  detail::check_kind(spec, s);
  auto& word = acc.syllables_;
  if (word.empty() || word.back().factor != s.factor) {
    word.push_back(s);
    return static_cast<std::int64_t>(syllable_length(spec, s));
  }
  auto& last = word.back();
  const auto& f = spec.factor(s.factor);
  switch (f.kind) {
    case FactorKind::finite_cyclic: {
      const Residue r = (std::get<Residue>(last.payload) + std::get<Residue>(s.payload)) % f.order;
      if (r == 0) {
        word.pop_back();
        return -1;
      }
      last.payload = r;
      return 0;
    }
    case FactorKind::infinite_cyclic: {
      const auto before = static_cast<std::int64_t>(syllable_length(spec, last));
      auto& p = std::get<Power>(last.payload);
      p += std::get<Power>(s.payload);
      if (p.is_zero()) {
        word.pop_back();
        return -before;
      }
      return static_cast<std::int64_t>(syllable_length(spec, last)) - before;
    }
    case FactorKind::free: {
      auto& w = std::get<FreeWord>(last.payload);
      std::int64_t delta = 0;
      for (const auto l : std::get<FreeWord>(s.payload)) {
        if (!w.empty() && w.back() == -l) {
          w.pop_back();
          --delta;
        } else {
          w.push_back(l);
          ++delta;
        }
      }
      if (w.empty()) word.pop_back();
      return delta;
    }
  }
  return 0;
}

// acc <- acc * b, in place. Returns the change in relative length.
inline std::int64_t right_multiply(const GroupSpec& spec, GroupElement& acc, const GroupElement& b) {
  std::int64_t delta = 0;
  for (const auto& s : b.syllables()) delta += push_syllable(spec, acc, s);
  return delta;
}

inline GroupElement multiply(const GroupSpec& spec, const GroupElement& a, const GroupElement& b) {
  GroupElement out = a;
  right_multiply(spec, out, b);
  return out;
}

inline Syllable invert(const GroupSpec& spec, const Syllable& s) {
  detail::check_kind(spec, s);
  Syllable out{s.factor, {}};
  const auto& f = spec.factor(s.factor);
  switch (f.kind) {
    case FactorKind::finite_cyclic: out.payload = f.order - std::get<Residue>(s.payload); break;
    case FactorKind::infinite_cyclic: out.payload = Power(-std::get<Power>(s.payload)); break;
    case FactorKind::free: {
      FreeWord w(std::get<FreeWord>(s.payload).rbegin(), std::get<FreeWord>(s.payload).rend());
      for (auto& l : w) l = -l;
      out.payload = std::move(w);
      break;
    }
  }
  return out;
}

inline GroupElement invert(const GroupSpec& spec, const GroupElement& a) {
  std::vector<Syllable> out;
  out.reserve(a.syllables().size());
  for (auto it = a.syllables().rbegin(); it != a.syllables().rend(); ++it)
    out.push_back(invert(spec, *it));
  return GroupElement(std::move(out));
}

// Throws std::invalid_argument when `g` is not a valid normal form under `spec`.
inline void validate(const GroupSpec& spec, const GroupElement& g) {
  const auto& syl = g.syllables();
  for (std::size_t i = 0; i < syl.size(); ++i) {
    const auto& s = syl[i];
    detail::check_kind(spec, s);
    if (i > 0 && syl[i - 1].factor == s.factor)
      throw std::invalid_argument("adjacent syllables share a factor");
    const auto& f = spec.factor(s.factor);
    switch (f.kind) {
      case FactorKind::finite_cyclic: {
        const auto r = std::get<Residue>(s.payload);
        if (r <= 0 || r >= f.order) throw std::invalid_argument("residue outside [1, order)");
        break;
      }
      case FactorKind::infinite_cyclic:
        if (std::get<Power>(s.payload).is_zero())
          throw std::invalid_argument("zero power in infinite-cyclic syllable");
        break;
      case FactorKind::free: {
        const auto& w = std::get<FreeWord>(s.payload);
        if (w.empty()) throw std::invalid_argument("empty free syllable");
        for (std::size_t j = 0; j < w.size(); ++j) {
          if (w[j] == 0 || std::abs(w[j]) > f.rank)
            throw std::invalid_argument("free letter outside generator range");
          if (j > 0 && w[j] == -w[j - 1]) throw std::invalid_argument("free syllable not reduced");
        }
        break;
      }
    }
  }
}

struct GroupElementHash {
  std::size_t operator()(const GroupElement& g) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
    for (const auto& s : g.syllables()) {
      mix(s.factor);
      switch (s.payload.index()) {
        case 0: mix(static_cast<std::size_t>(std::get<Residue>(s.payload))); break;
        case 1: mix(boost::multiprecision::hash_value(std::get<Power>(s.payload))); break;
        case 2:
          for (auto l : std::get<FreeWord>(s.payload)) mix(static_cast<std::size_t>(l) * 31u);
          break;
      }
    }
    return h;
  }
};

template <class T>
using ElementMap = std::unordered_map<GroupElement, T, GroupElementHash>;
using ElementSet = std::unordered_set<GroupElement, GroupElementHash>;

namespace detail {

// Order on payloads used for deterministic enumeration: residues ascending,
// powers by |k| then positive first, free words lexicographic with
// x1 < x1^-1 < x2 < x2^-1 < ...
inline int compare_payload(const Syllable& a, const Syllable& b) {
  switch (a.payload.index()) {
    case 0: {
      const auto x = std::get<Residue>(a.payload), y = std::get<Residue>(b.payload);
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    case 1: {
      const auto& x = std::get<Power>(a.payload);
      const auto& y = std::get<Power>(b.payload);
      const BigInt ax = abs(x), ay = abs(y);
      if (ax != ay) return ax < ay ? -1 : 1;
      if (x == y) return 0;
      return x > 0 ? -1 : 1;
    }
    default: {
      const auto& x = std::get<FreeWord>(a.payload);
      const auto& y = std::get<FreeWord>(b.payload);
      const auto n = std::min(x.size(), y.size());
      for (std::size_t i = 0; i < n; ++i) {
        const auto rx = letter_rank(x[i]), ry = letter_rank(y[i]);
        if (rx != ry) return rx < ry ? -1 : 1;
      }
      return x.size() == y.size() ? 0 : (x.size() < y.size() ? -1 : 1);
    }
  }
}

}  // namespace detail

// Enumeration order: identity first, then by length, then lexicographic on
// (factor index, payload) syllable by syllable.
inline bool enumeration_less(const GroupSpec& spec, const GroupElement& a, const GroupElement& b) {
  const auto la = word_length(spec, a), lb = word_length(spec, b);
  if (la != lb) return la < lb;
  const auto& x = a.syllables();
  const auto& y = b.syllables();
  const auto n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].factor != y[i].factor) return x[i].factor < y[i].factor;
    const int c = detail::compare_payload(x[i], y[i]);
    if (c != 0) return c < 0;
  }
  return x.size() < y.size();
}

// Every syllable of factor `f` together with its length, up to `max_length`.
// Infinite peripheral factors need `truncation` (cap on |k|).
inline std::vector<std::pair<Length, Syllable>> factor_syllables(
    const GroupSpec& spec, std::uint32_t f, Length max_length, std::optional<std::int64_t> truncation) {
  std::vector<std::pair<Length, Syllable>> out;
  const auto& fs = spec.factor(f);
  switch (fs.kind) {
    case FactorKind::finite_cyclic:
      if (max_length >= 1)
        for (Residue r = 1; r < fs.order; ++r) out.push_back({1, Syllable{f, r}});
      break;
    case FactorKind::infinite_cyclic: {
      if (fs.peripheral) {
        if (!truncation)
          throw std::invalid_argument(
              "infinite peripheral factor requires a truncation on |payload|");
        if (max_length >= 1)
          for (std::int64_t k = 1; k <= *truncation; ++k) {
            out.push_back({1, Syllable{f, Power(k)}});
            out.push_back({1, Syllable{f, Power(-k)}});
          }
      } else {
        for (std::int64_t k = 1; static_cast<Length>(k) <= max_length; ++k) {
          out.push_back({static_cast<Length>(k), Syllable{f, Power(k)}});
          out.push_back({static_cast<Length>(k), Syllable{f, Power(-k)}});
        }
      }
      break;
    }
    case FactorKind::free: {
      std::vector<FreeWord> layer{FreeWord{}};
      for (Length len = 1; len <= max_length; ++len) {
        std::vector<FreeWord> next;
        for (const auto& w : layer)
          for (std::int32_t g = 1; g <= fs.rank; ++g)
            for (std::int32_t l : {g, -g}) {
              if (!w.empty() && w.back() == -l) continue;
              FreeWord v = w;
              v.push_back(l);
              out.push_back({len, Syllable{f, v}});
              next.push_back(std::move(v));
            }
        layer = std::move(next);
      }
      break;
    }
  }
  return out;
}

// {g : l(g) <= radius}, enumerated directly from normal forms and sorted in
// enumeration order.
inline std::vector<GroupElement> ball(const GroupSpec& spec, Length radius,
                                      std::optional<std::int64_t> truncation = std::nullopt) {
  if (spec.has_infinite_peripheral() && !truncation)
    throw std::invalid_argument("ball: infinite peripheral factor requires a truncation");
  std::vector<std::vector<std::pair<Length, Syllable>>> per_factor;
  for (std::uint32_t f = 0; f < spec.size(); ++f)
    per_factor.push_back(factor_syllables(spec, f, radius, truncation));

  std::vector<GroupElement> out;
  std::vector<Syllable> prefix;
  std::function<void(std::int64_t, Length)> grow = [&](std::int64_t last, Length budget) {
    out.emplace_back(prefix);
    for (std::uint32_t f = 0; f < spec.size(); ++f) {
      if (static_cast<std::int64_t>(f) == last) continue;
      for (const auto& [len, syl] : per_factor[f]) {
        if (len > budget) continue;
        prefix.push_back(syl);
        grow(f, budget - len);
        prefix.pop_back();
      }
    }
  };
  grow(-1, radius);
  std::sort(out.begin(), out.end(), [&](const GroupElement& a, const GroupElement& b) {
    return enumeration_less(spec, a, b);
  });
  return out;
}

// The symmetric generating set S u S^-1 u (union of H_i \ {e}) as elements.
inline std::vector<GroupElement> generators(const GroupSpec& spec,
                                            std::optional<std::int64_t> truncation = std::nullopt) {
  std::vector<GroupElement> out;
  for (std::uint32_t f = 0; f < spec.size(); ++f)
    for (auto& [len, syl] : factor_syllables(spec, f, 1, truncation))
      out.emplace_back(std::vector<Syllable>{std::move(syl)});
  return out;
}

// Graph distances from e in the Cayley graph over `generators`, out to `radius`.
inline ElementMap<Length> bfs_distances(const GroupSpec& spec, Length radius,
                                        std::optional<std::int64_t> truncation = std::nullopt) {
  const auto gens = generators(spec, truncation);
  ElementMap<Length> dist;
  dist.emplace(identity(), 0);
  std::vector<GroupElement> frontier{identity()};
  for (Length d = 1; d <= radius && !frontier.empty(); ++d) {
    std::vector<GroupElement> next;
    for (const auto& g : frontier)
      for (const auto& s : gens) {
        auto h = multiply(spec, g, s);
        if (dist.emplace(h, d).second) next.push_back(std::move(h));
      }
    frontier = std::move(next);
  }
  return dist;
}

// Graph distance from e to g by breadth-first search; nullopt when it exceeds
// `max_radius`.
inline std::optional<Length> bfs_length_oracle(const GroupSpec& spec, const GroupElement& g,
                                               Length max_radius,
                                               std::optional<std::int64_t> truncation = std::nullopt) {
  if (g.is_identity()) return 0;
  const auto gens = generators(spec, truncation);
  ElementSet seen{identity()};
  std::vector<GroupElement> frontier{identity()};
  for (Length d = 1; d <= max_radius && !frontier.empty(); ++d) {
    std::vector<GroupElement> next;
    for (const auto& x : frontier)
      for (const auto& s : gens) {
        auto h = multiply(spec, x, s);
        if (h == g) return d;
        if (seen.insert(h).second) next.push_back(std::move(h));
      }
    frontier = std::move(next);
  }
  return std::nullopt;
}

// ---- text form -------------------------------------------------------------
//
// "e" is the identity. Cyclic syllables are a factor letter plus an optional
// signed exponent ("a1", "b2", "c-3", "b" == "b1"). Free letters are written
// letter_generator with an optional exponent ("a_1", "a_2^-1", "a_1^3").
// Tokens are joined by '*' and multiplied out, so any product is accepted.

inline std::string to_text(const GroupSpec& spec, const GroupElement& g) {
  if (g.is_identity()) return "e";
  std::string out;
  auto sep = [&out] {
    if (!out.empty()) out += '*';
  };
  for (const auto& s : g.syllables()) {
    const char c = GroupSpec::letter(s.factor);
    switch (spec.factor(s.factor).kind) {
      case FactorKind::finite_cyclic:
        sep();
        out += c + std::to_string(std::get<Residue>(s.payload));
        break;
      case FactorKind::infinite_cyclic:
        sep();
        out += c + std::get<Power>(s.payload).str();
        break;
      case FactorKind::free: {
        const auto& w = std::get<FreeWord>(s.payload);
        for (std::size_t i = 0; i < w.size();) {
          std::size_t j = i;
          while (j < w.size() && w[j] == w[i]) ++j;
          const auto run = static_cast<long long>(j - i) * (w[i] < 0 ? -1 : 1);
          sep();
          out += c;
          out += '_' + std::to_string(std::abs(w[i]));
          if (run != 1) out += '^' + std::to_string(run);
          i = j;
        }
        break;
      }
    }
  }
  return out;
}

inline GroupElement parse_element(const GroupSpec& spec, std::string_view text) {
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("cannot parse element '" + std::string(text) + "': " + why);
  };
  std::string compact;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) compact += ch;
  if (compact.empty()) fail("empty");
  GroupElement acc;
  std::size_t pos = 0;
  auto read_int = [&](bool required) -> std::optional<BigInt> {
    std::size_t start = pos;
    if (pos < compact.size() && (compact[pos] == '-' || compact[pos] == '+')) ++pos;
    const std::size_t digits = pos;
    while (pos < compact.size() && std::isdigit(static_cast<unsigned char>(compact[pos]))) ++pos;
    if (pos == digits) {
      if (required) fail("expected integer");
      pos = start;
      return std::nullopt;
    }
    std::string s = compact.substr(start, pos - start);
    if (s[0] == '+') s.erase(0, 1);
    return BigInt(s);
  };
  while (pos < compact.size()) {
    const char c = compact[pos++];
    if (c == 'e' && (pos == compact.size() || compact[pos] == '*')) {
      // identity token
    } else {
      if (c < 'a' || c > 'z') fail("expected factor letter");
      const auto f = static_cast<std::uint32_t>(c - 'a');
      if (f >= spec.size()) fail("factor letter out of range");
      const auto& fs = spec.factor(f);
      if (fs.kind == FactorKind::free) {
        if (pos >= compact.size() || compact[pos] != '_') fail("free letters are written like a_1");
        ++pos;
        const auto gen = *read_int(true);
        if (gen < 1 || gen > fs.rank) fail("free generator out of range");
        BigInt exponent = 1;
        if (pos < compact.size() && compact[pos] == '^') {
          ++pos;
          exponent = *read_int(true);
        }
        const auto l = gen.convert_to<std::int32_t>() * (exponent < 0 ? -1 : 1);
        const auto reps = abs(exponent);
        if (reps > 1'000'000) fail("free exponent too large");
        for (BigInt i = 0; i < reps; ++i) push_syllable(spec, acc, Syllable{f, FreeWord{l}});
      } else {
        auto exponent = read_int(false).value_or(BigInt(1));
        if (fs.kind == FactorKind::finite_cyclic) {
          BigInt r = exponent % fs.order;
          if (r < 0) r += fs.order;
          if (!r.is_zero()) push_syllable(spec, acc, Syllable{f, r.convert_to<Residue>()});
        } else if (!exponent.is_zero()) {
          push_syllable(spec, acc, Syllable{f, Power(exponent)});
        }
      }
    }
    if (pos < compact.size()) {
      if (compact[pos] != '*') fail("expected '*'");
      ++pos;
      if (pos == compact.size()) fail("trailing '*'");
    }
  }
  return acc;
}

}  // namespace ldwalk
