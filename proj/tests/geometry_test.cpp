#include <gtest/gtest.h>

#include "ldwalk/geometry.hpp"
#include "test_groups.hpp"

namespace ldwalk {
namespace {

using testing::el;
using testing::free2;
using testing::modular;

std::vector<Rational> uniform_nu(std::size_t m) { return std::vector<Rational>(m, Rational(1, static_cast<long>(m))); }

TEST(FindSigma, IdentityEndpoints) {
  for (const auto& spec : {modular(), free2()})
    for (const auto& x : ball(spec, 3)) {
      EXPECT_EQ(find_sigma(spec, x, identity(), 2, 0), std::optional<GroupElement>(identity()));
      EXPECT_EQ(find_sigma(spec, identity(), x, 2, 0), std::optional<GroupElement>(identity()));
    }
}

TEST(FindSigma, Examples) {
  const auto f = free2();
  const auto s = find_sigma(f, el(f, "a_1"), el(f, "a_1^-1"), 1, 0);
  ASSERT_TRUE(s);
  EXPECT_EQ(*s, el(f, "a_2"));
  EXPECT_EQ(word_length(f, multiply(f, multiply(f, el(f, "a_1"), *s), el(f, "a_1^-1"))), 3u);
  EXPECT_EQ(find_sigma(f, el(f, "a_1"), el(f, "a_1^-1"), 0, 0), std::nullopt);

  const auto g = modular();
  const auto x = el(g, "a1*b1"), y = el(g, "b1*a1");
  const auto t = find_sigma(g, x, y, 1, 0);
  ASSERT_TRUE(t);
  EXPECT_EQ(*t, el(g, "a1"));
  EXPECT_EQ(word_length(g, multiply(g, multiply(g, x, *t), y)), 5u);
  const auto u = find_sigma(g, el(g, "b1*a1"), el(g, "a1*b2"), 1, 0);
  ASSERT_TRUE(u);
  EXPECT_EQ(u->syllables().front().factor, 1u);
  EXPECT_THROW(find_sigma(g, x, y, 1, -1), std::invalid_argument);
}

TEST(FindSigma, InfinitePeripheralNeedsTruncation) {
  const GroupSpec g({FactorSpec::finite_cyclic(2), FactorSpec::infinite_cyclic()});
  EXPECT_THROW(find_sigma(g, el(g, "a1"), el(g, "a1"), 1, 0), std::invalid_argument);
  const auto s = find_sigma(g, el(g, "a1"), el(g, "a1"), 1, 0, 2);
  ASSERT_TRUE(s);
  EXPECT_EQ(*s, el(g, "b1"));
  EXPECT_THROW(estimate_constants(g, 2, 1), std::invalid_argument);
}

TEST(EstimateConstants, BothFamiliesAtRadiusSix) {
  for (const auto& spec : {modular(), free2()}) {
    const auto reps = estimate_constants(spec, 6, 1);
    ASSERT_EQ(reps.size(), 2u);
    const auto& r = reps[1];
    EXPECT_EQ(r.c_min, 0);
    EXPECT_EQ(r.pairs_scanned, r.pair_ball.size() * r.pair_ball.size());
    EXPECT_EQ(r.witnesses.size(), r.pairs_scanned);
    for (const auto& w : r.witnesses) {
      const auto& x = r.pair_ball[w.x];
      const auto& y = r.pair_ball[w.y];
      const auto& s = r.sigma_ball[w.sigma];
      EXPECT_LE(word_length(spec, s), 1u);
      const auto len = static_cast<std::int64_t>(word_length(spec, multiply(spec, multiply(spec, x, s), y)));
      EXPECT_EQ(w.defect, static_cast<std::int64_t>(word_length(spec, x) + word_length(spec, y)) - len);
      EXPECT_LE(w.defect, r.c_min);
    }
  }
}

TEST(EstimateConstants, RadiusZeroAndMonotonicity) {
  for (const auto& spec : {modular(), free2()}) {
    const auto zero = estimate_constants(spec, 0, 2);
    for (const auto& r : zero) {
      EXPECT_EQ(r.c_min, 0);
      EXPECT_EQ(r.sigma_ball[r.witnesses.at(0).sigma], identity());
    }
    std::int64_t prev_r = 0;
    for (Length R = 1; R <= 4; ++R) {
      const auto reps = estimate_constants(spec, R, 2);
      for (std::size_t C = 1; C < reps.size(); ++C) EXPECT_LE(reps[C].c_min, reps[C - 1].c_min);
      EXPECT_GE(reps[0].c_min, prev_r);
      prev_r = reps[0].c_min;
    }
    EXPECT_GT(prev_r, 0);  // without a connector, x x^-1 cancels completely
  }
}

TEST(EstimateConstants, PairBudget) {
  ProbeOptions opts;
  opts.max_pairs = 100;
  try {
    estimate_constants(free2(), 3, 1, std::nullopt, opts);
    FAIL();
  } catch (const BudgetExceeded& e) {
    EXPECT_EQ(e.reached(), 53u * 53u);
  }
}

TEST(Selection, TwoLettersOfTheFreeGroup) {
  const auto f = free2();
  const std::vector<GroupElement> F{el(f, "a_1"), el(f, "a_2")};
  const auto cert = build_selection(f, F, uniform_nu(2), 2, 0, 1);
  ASSERT_EQ(cert.levels.size(), 1u);
  EXPECT_EQ(cert.levels[0].sigma, identity());
  EXPECT_EQ(cert.levels[0].tuple_mass, Rational(1));
  EXPECT_EQ(cert.ball_size, 5u);
  EXPECT_EQ(cert.mass_bound(2), Rational(1, 5));
  const auto v = verify_certificate(cert);
  EXPECT_TRUE(v.pass) << v.reason;
  EXPECT_EQ(v.recomputed_mass, std::vector<Rational>{Rational(1)});
}

TEST(Selection, SingleAtom) {
  const auto f = free2();
  const auto g = el(f, "a_1*a_2");
  const auto cert = build_selection(f, {g}, {Rational(1)}, 2, 0, 1);
  EXPECT_EQ(cert.levels[0].sigma, *find_sigma(f, g, g, 1, 0));
  EXPECT_EQ(cert.levels[0].tuple_mass, Rational(1));
}

TEST(Selection, ModularTriples) {
  const auto g = modular();
  const std::vector<GroupElement> F{el(g, "a1*b1"), el(g, "b1*a1")};
  const auto cert = build_selection(g, F, uniform_nu(2), 3, 0, 1);
  // Oracle: enumerate all 8 triples through the recorded connectors.
  Rational mass = 0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k) {
        GroupElement product;
        if (!selection_member(cert, {i, j, k}, product)) continue;
        EXPECT_EQ(product, multiply(g, multiply(g, multiply(g, multiply(g, F[i], cert.levels[0].sigma), F[j]),
                                                cert.levels[1].sigma),
                                    F[k]));
        EXPECT_GE(word_length(g, product), 6u);
        mass += Rational(1, 8);
      }
  EXPECT_EQ(mass, cert.levels[1].tuple_mass);
  EXPECT_GE(mass, Rational(1, 16));
  EXPECT_TRUE(verify_certificate(cert).pass);
}

TEST(Selection, ChainBoundsAndTelescoping) {
  const auto f = free2();
  const std::vector<GroupElement> F{el(f, "a_1"), el(f, "a_1^-1"), el(f, "a_2*a_1"), el(f, "a_2^-1")};
  const std::vector<Rational> nu{Rational(1, 2), Rational(1, 4), Rational(1, 8), Rational(1, 8)};
  for (std::int64_t c : {0, 1}) {
    const auto cert = build_selection(f, F, nu, 4, c, 1);
    for (std::size_t j = 2; j <= 4; ++j) EXPECT_GE(cert.levels[j - 2].tuple_mass, cert.mass_bound(j));
    const auto v = verify_certificate(cert);
    EXPECT_TRUE(v.pass) << v.reason;
    for (std::size_t j = 2; j <= 4; ++j) EXPECT_EQ(v.recomputed_mass[j - 2], cert.levels[j - 2].tuple_mass);
    const std::int64_t cbar = std::max<std::int64_t>(c, static_cast<std::int64_t>(cert.C));
    std::vector<std::size_t> tuple(4, 0);
    for (;;) {
      GroupElement product;
      if (selection_member(cert, tuple, product)) {
        std::int64_t sum = 0;
        for (auto i : tuple) sum += static_cast<std::int64_t>(word_length(f, F[i]));
        const auto len = static_cast<std::int64_t>(word_length(f, product));
        EXPECT_GE(len, sum - 3 * c);
        EXPECT_LE(len, sum + 3 * cbar);
      }
      std::size_t pos = 4;
      while (pos > 0 && ++tuple[pos - 1] == F.size()) tuple[--pos] = 0;
      if (pos == 0) break;
    }
  }
}

TEST(Selection, FailsWhenConnectorsAreTooShort) {
  const auto f = free2();
  EXPECT_THROW(build_selection(f, {el(f, "a_1"), el(f, "a_1^-1")}, uniform_nu(2), 2, 0, 0), SelectionFailure);
  EXPECT_THROW(build_selection(f, {el(f, "a_1")}, {Rational(1, 2)}, 2, 0, 1), std::invalid_argument);
  EXPECT_THROW(build_selection(f, {el(f, "a_1")}, {Rational(1)}, 1, 0, 1), std::invalid_argument);
}

TEST(Verify, CancellingConnectorIsCaught) {
  const auto f = free2();
  const std::vector<GroupElement> F{el(f, "a_1"), el(f, "a_2")};
  auto cert = build_selection(f, F, uniform_nu(2), 2, 0, 1);
  cert.levels[0].sigma = el(f, "a_1^-1");
  const auto v = verify_certificate(cert);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.level, 2u);
  EXPECT_EQ(v.counterexample, (std::vector<std::size_t>{0, 0}));
  EXPECT_NE(v.reason.find("defect"), std::string::npos);

  cert.levels[0].sigma = el(f, "a_1^2");
  EXPECT_NE(verify_certificate(cert).reason.find("outside"), std::string::npos);
}

TEST(Verify, ShrunkEventFailsTheMeasureBound) {
  const auto f = free2();
  const std::vector<GroupElement> F{el(f, "a_1"), el(f, "a_2"), el(f, "a_2^-1")};
  auto cert = build_selection(f, F, uniform_nu(3), 2, 0, 1);
  ASSERT_TRUE(verify_certificate(cert).pass);
  auto& level = cert.levels[0];
  level.accepted.clear();
  level.accepted[F[0]] = {0};
  level.tuple_mass = Rational(1, 9);
  const auto v = verify_certificate(cert);
  EXPECT_FALSE(v.pass);
  EXPECT_NE(v.reason.find("measure bound"), std::string::npos);
}

TEST(Verify, SampledModeForLargeTupleSpaces) {
  const auto f = free2();
  const std::vector<GroupElement> F{el(f, "a_1"), el(f, "a_2"), el(f, "a_1*a_2")};
  const auto cert = build_selection(f, F, uniform_nu(3), 5, 0, 1);
  VerifyOptions opts;
  opts.explicit_budget = 10;
  opts.samples = 2000;
  const auto v = verify_certificate(cert, opts);
  EXPECT_TRUE(v.sampled);
  EXPECT_TRUE(v.pass) << v.reason;
  EXPECT_GT(v.coverage, 0.0);
}

}  // namespace
}  // namespace ldwalk
