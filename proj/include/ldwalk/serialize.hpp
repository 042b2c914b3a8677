// CSV tables and JSON renderings of probe results.

#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "ldwalk/config.hpp"
#include "ldwalk/geometry.hpp"

namespace ldwalk {

// Shortest round-trip spelling; "inf", "-inf", "nan" for the rest.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    if (r.size() != header_.size()) throw std::logic_error("CsvTable: row width does not match header");
    rows_.push_back(std::move(r));
  }

  std::size_t size() const noexcept { return rows_.size(); }

  std::string body() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double x) { return format_double(x); }
  template <class T>
    requires std::is_integral_v<T>
  static std::string cell(T x) {
    return std::to_string(x);
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Json truncation_json(const Truncation& t) { return t ? Json(*t) : Json(nullptr); }

inline Json to_json(const GroupSpec& spec, const DistortionReport& r, bool witnesses) {
  Json j{{"C_used", r.C_used},
         {"R", r.R},
         {"truncation", truncation_json(r.truncation)},
         {"c_min", r.c_min},
         {"pairs_scanned", r.pairs_scanned},
         {"pair_ball_size", r.pair_ball.size()},
         {"sigma_ball", Json::array()}};
  for (const auto& s : r.sigma_ball) j["sigma_ball"].push_back(to_text(spec, s));
  if (witnesses) {
    Json pts = Json::array(), table = Json::array();
    for (const auto& g : r.pair_ball) pts.push_back(to_text(spec, g));
    for (const auto& w : r.witnesses) table.push_back(Json::array({w.x, w.y, w.sigma, w.defect}));
    j["pair_ball"] = pts;
    j["witnesses"] = table;  // [x index, y index, sigma index, defect]
  }
  return j;
}

inline Json to_json(const SelectionCertificate& cert) {
  const auto& spec = cert.spec;
  Json j{{"k", cert.k},
         {"c", cert.c},
         {"C", cert.C},
         {"truncation", truncation_json(cert.truncation)},
         {"ball_size", cert.ball_size},
         {"defect_bound", cert.defect_bound()},
         {"exact", cert.exact},
         {"support", Json::array()},
         {"nu", Json::array()},
         {"levels", Json::array()}};
  for (const auto& g : cert.support) j["support"].push_back(to_text(spec, g));
  for (const auto& w : cert.nu) j["nu"].push_back(rational_text(w));
  for (std::size_t i = 0; i < cert.levels.size(); ++i) {
    const auto& l = cert.levels[i];
    std::vector<GroupElement> keys;
    for (const auto& [w, _] : l.accepted) keys.push_back(w);
    std::sort(keys.begin(), keys.end(), [&](const auto& a, const auto& b) { return enumeration_less(spec, a, b); });
    Json accepted = Json::array();
    for (const auto& w : keys) {
      auto idx = l.accepted.at(w);
      std::sort(idx.begin(), idx.end());
      accepted.push_back(Json{{"prefix", to_text(spec, w)}, {"next", idx}});
    }
    std::vector<GroupElement> support;
    for (const auto& [w, _] : l.pushforward) support.push_back(w);
    std::sort(support.begin(), support.end(),
              [&](const auto& a, const auto& b) { return enumeration_less(spec, a, b); });
    Json push = Json::array();
    for (const auto& w : support)
      push.push_back(Json{{"element", to_text(spec, w)}, {"mass", rational_text(l.pushforward.at(w))}});
    j["levels"].push_back(Json{{"j", i + 2},
                               {"sigma", to_text(spec, l.sigma)},
                               {"sigma_index", l.sigma_index},
                               {"pair_mass", rational_text(l.pair_mass)},
                               {"tuple_mass", rational_text(l.tuple_mass)},
                               {"mass_bound", rational_text(cert.mass_bound(i + 2))},
                               {"accepted", accepted},
                               {"pushforward", push}});
  }
  return j;
}

inline Json to_json(const VerificationResult& v) {
  Json j{{"pass", v.pass}, {"sampled", v.sampled}, {"coverage", v.coverage}, {"recomputed_mass", Json::array()}};
  for (const auto& m : v.recomputed_mass) j["recomputed_mass"].push_back(rational_text(m));
  if (!v.pass) {
    j["reason"] = v.reason;
    j["level"] = v.level;
    j["counterexample"] = v.counterexample;
  }
  return j;
}

}  // namespace ldwalk
