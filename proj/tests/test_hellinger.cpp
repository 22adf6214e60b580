#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace hlab;
using Catch::Matchers::WithinAbs;
using oracle::times;

namespace {

std::vector<Instance> instances(int count, std::uint64_t salt = 0) {
  std::vector<Instance> out;
  for (std::uint64_t s = salt; s < salt + static_cast<std::uint64_t>(count); ++s)
    out.push_back(gen_instance(small_spec_for_seed(s)));
  return out;
}

std::vector<Rational> cell_masses(const FilteredSpace& sp, const Measure& m, int t) {
  std::vector<Rational> out;
  for (const auto& cell : sp.at(t).cells()) out.push_back(oracle::mass(m, cell));
  return out;
}

}  // namespace

TEST_CASE("Hellinger integral on SPACE-A", "[integral]") {
  auto mu = oracle::mu_a(), nu = oracle::nu_a();
  CHECK_THAT(hellinger_integral(0.5, mu, nu), WithinAbs(std::sqrt(0.125) + 0.25, 1e-15));
  CHECK_THAT(hellinger_integral(0.5, mu, nu), WithinAbs(0.603553390593, 1e-12));
  CHECK(hellinger_integral(0.5, mu, mu) == 1.0);
  // Reference measure does not matter once it dominates.
  Measure uniform({Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)});
  for (double a : {0.1, 0.5, 0.9}) {
    CHECK_THAT(hellinger_integral(a, mu, nu, uniform), WithinAbs(hellinger_integral(a, mu, nu), 1e-14));
    CHECK_THAT(hellinger_integral(a, mu, nu, midpoint(mu, nu)), WithinAbs(hellinger_integral(a, mu, nu), 1e-14));
  }
  Measure bad({Rational(1, 2), Rational(1, 2), Rational(0), Rational(0)});
  CHECK_THROWS_AS(hellinger_integral(0.5, mu, nu, bad), NotDominating);
}

TEST_CASE("Hellinger integral against the atomwise oracle", "[integral][oracle][property]") {
  for (const auto& inst : instances(60)) {
    for (double a : alpha_grid_up(12)) {
      double lib = hellinger_integral(a, inst.mu, inst.nu);
      CHECK_THAT(lib, WithinAbs(oracle::hellinger(a, inst.mu.weights(), inst.nu.weights()), 1e-14));
      CHECK(lib <= 1.0 + 1e-14);
      CHECK(lib >= 0.0);
    }
  }
}

TEST_CASE("Hellinger curve decreases along the filtration", "[curve][property]") {
  for (const auto& inst : instances(60, 1000)) {
    const auto& sp = inst.space;
    auto alphas = alpha_grid_up(10);
    auto c = hellinger_curve(sp, inst.mu, inst.nu, alphas, {});
    REQUIRE(c.values.size() == static_cast<std::size_t>(sp.horizon()) + 1);
    for (std::size_t j = 0; j < alphas.size(); ++j) {
      for (std::size_t n = 1; n < c.values.size(); ++n) CHECK(c.values[n][j] <= c.values[n - 1][j] + 1e-14);
      CHECK(c.b[j] == c.values.back()[j]);
      for (int n = 0; n <= sp.horizon(); ++n)
        CHECK_THAT(c.values[static_cast<std::size_t>(n)][j],
                   WithinAbs(oracle::hellinger(alphas[j], cell_masses(sp, inst.mu, n), cell_masses(sp, inst.nu, n)),
                             1e-14));
    }
  }
}

TEST_CASE("curve verdicts", "[curve]") {
  auto sp = oracle::space_a();
  auto mu = oracle::mu_a(), nu = oracle::nu_a();
  CHECK(hellinger_curve(sp, mu, mu, alpha_grid_up(20), {}).verdict == PairVerdict::equivalent);
  CHECK(hellinger_curve(sp, mu, nu, alpha_grid_up(20), {}).verdict == PairVerdict::mixed);
  Measure left({Rational(1, 2), Rational(1, 2), Rational(0), Rational(0)});
  Measure right({Rational(0), Rational(0), Rational(1, 2), Rational(1, 2)});
  auto s = hellinger_curve(sp, left, right, {0.5}, {});
  CHECK(s.singular);
  CHECK(s.verdict == PairVerdict::singular);
  Measure partial({Rational(1, 2), Rational(1, 2), Rational(0), Rational(0)});
  Measure full({Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)});
  CHECK(hellinger_curve(sp, partial, full, alpha_grid_up(20), {}).verdict == PairVerdict::absolutely_continuous);
}

TEST_CASE("Hellinger process on SPACE-A", "[process]") {
  auto sp = oracle::space_a();
  auto hp = hellinger_process(sp, oracle::mu_a(), oracle::nu_a());
  const double dh1 = 0.0340741737109, dh2 = 0.0144014403465;
  for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(hp.h.at(1, i), WithinAbs(dh1, 1e-12));
  CHECK_THAT(hp.h.at(2, 0) - hp.h.at(1, 0), WithinAbs(dh2, 1e-12));
  CHECK_THAT(hp.h.at(2, 1) - hp.h.at(1, 1), WithinAbs(dh2, 1e-12));
  CHECK_THAT(hp.h.at(2, 2) - hp.h.at(1, 2), WithinAbs(1.0, 1e-12));
  CHECK_THAT(hp.h.at(2, 3) - hp.h.at(1, 3), WithinAbs(1.0, 1e-12));
  CHECK(hp.Y.at(2, 2) == 0.0);
  CHECK(hp.S.times() == times({-1, -1, 2, 2}));
  // A is predictable: it has jumped on {c,d} although Y_2 = 0 there for either atom.
  CHECK(hp.A.at(2, 2) == hp.A.at(2, 3));
}

TEST_CASE("Hellinger process identities", "[process][property]") {
  for (const auto& inst : instances(80, 2000)) {
    const auto& sp = inst.space;
    const int N = sp.horizon();
    auto hp = hellinger_process(sp, inst.mu, inst.nu);
    double eY = 0, eA = 0, eY0 = 0;
    for (std::size_t i = 0; i < sp.atom_count(); ++i) {
      for (int t = 1; t <= N; ++t) {
        CHECK(hp.A.at(t, i) >= hp.A.at(t - 1, i));
        CHECK(hp.h.at(t, i) >= hp.h.at(t - 1, i));
        CHECK_THAT(hp.M.at(t, i) - hp.A.at(t, i), WithinAbs(hp.Y.at(t, i), 1e-9));
        // A_t is F_{t-1}-measurable.
        for (auto j : sp.at(t - 1).cell(sp.cell_of(t - 1, i))) CHECK(hp.A.at(t, j) == hp.A.at(t, i));
      }
      eY += to_double(hp.Q[i]) * hp.Y.at(N, i);
      eY0 += to_double(hp.Q[i]) * hp.Y.at(0, i);
      eA += to_double(hp.Q[i]) * hp.A.at(N, i);
    }
    const double H = hellinger_integral(0.5, inst.mu, inst.nu);
    CHECK_THAT(eY, WithinAbs(H, 1e-12));
    CHECK_THAT(eA, WithinAbs(eY0 - H, 1e-9));
  }
}

TEST_CASE("order-zero process on SPACE-A", "[h0]") {
  auto sp = oracle::space_a();
  auto hp = hellinger_process(sp, oracle::mu_a(), oracle::nu_a());
  auto h0 = hellinger0_process(sp, hp);
  CHECK(h0.N0.indices() == std::vector<std::size_t>{2});
  CHECK(h0.A0.at(2, 2) == 3);
  CHECK(h0.A0.at(2, 3) == 0);
  CHECK(h0.h0.at(1, 0) == 0);
  CHECK(h0.h0.at(2, 2) == 1);
  CHECK(h0.h0.at(2, 3) == 1);
  CHECK(h0.h0.at(2, 0) == 0);
  CHECK(stopping_time_h0(h0).times() == times({1, 1, 2, 2}));
}

TEST_CASE("order-zero compensator", "[h0][property]") {
  for (const auto& inst : instances(80, 3000)) {
    const auto& sp = inst.space;
    auto hp = hellinger_process(sp, inst.mu, inst.nu);
    auto h0 = hellinger0_process(sp, hp);
    // A0 - h0 is a Q-martingale.
    for (int t = 1; t <= sp.horizon(); ++t) {
      std::vector<Rational> diff(sp.at(t).cell_count());
      for (std::size_t d = 0; d < diff.size(); ++d) {
        auto a = sp.at(t).cell(d).front();
        diff[d] = h0.A0.at(t, a) - h0.h0.at(t, a);
      }
      auto e = cond_expect(sp, diff, t, hp.Q, t - 1);
      for (std::size_t c = 0; c < e.size(); ++c) {
        auto a = sp.at(t - 1).cell(c).front();
        if (hp.Q.of(sp.at(t - 1).cell(c)) > 0) CHECK(e[c] == h0.A0.at(t - 1, a) - h0.h0.at(t - 1, a));
      }
    }
    for (auto i : h0.N0.indices()) {
      CHECK(hp.zp.z.at(hp.S(i).value(), i) == 0);
      CHECK(hp.Q.of(sp.at(hp.S(i).value()).cell(sp.cell_of(hp.S(i).value(), i))) > 0);
    }
  }
}

TEST_CASE("S0 coincides with S", "[hprime][property]") {
  for (const auto& inst : instances(80, 4000)) {
    auto hp = hellinger_process(inst.space, inst.mu, inst.nu);
    auto hpr = s_zero_and_h_prime(inst.space, hp);
    CHECK(hpr.S0 == hp.S);
  }
  auto sp = oracle::space_a();
  auto hpa = hellinger_process(sp, oracle::mu_a(), oracle::nu_a());
  auto hpr = s_zero_and_h_prime(sp, hpa);
  CHECK(hpr.S0.times() == times({-1, -1, 2, 2}));
  REQUIRE(hpr.h_prime.terminal);
  CHECK(std::isinf((*hpr.h_prime.terminal)[2]));
  CHECK_FALSE(std::isinf((*hpr.h_prime.terminal)[0]));
}
