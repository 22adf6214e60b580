#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace hlab;
using Catch::Matchers::WithinAbs;
using oracle::times;

namespace {

std::vector<Instance> small_instances(int count, std::size_t max_atoms, std::uint64_t salt = 0) {
  std::vector<Instance> out;
  for (std::uint64_t s = salt; out.size() < static_cast<std::size_t>(count); ++s) {
    auto inst = gen_instance(small_spec_for_seed(s));
    if (inst.space.atom_count() <= max_atoms) out.push_back(inst);
  }
  return out;
}

std::vector<std::vector<Rational>> rows(const RationalProcess& x) {
  std::vector<std::vector<Rational>> out;
  for (int t = 0; t <= x.space.horizon(); ++t) out.push_back(x.atoms_at(t));
  return out;
}

}  // namespace

TEST_CASE("conditional expectation on SPACE-A", "[condexp]") {
  auto sp = oracle::space_a();
  auto Q = midpoint(oracle::mu_a(), oracle::nu_a());
  std::vector<Rational> z2{Rational(4, 3), Rational(1), Rational(2), Rational(0)};
  auto e = cond_expect(sp, z2, 2, Q, 1);
  CHECK(e == std::vector<Rational>{Rational(6, 5), Rational(2, 3)});
  CHECK(cond_expect(sp, z2, 2, Q, 0) == std::vector<Rational>{Rational(1)});
}

TEST_CASE("tower property", "[condexp][property]") {
  for (const auto& inst : small_instances(30, 8)) {
    const auto& sp = inst.space;
    auto Q = midpoint(inst.mu, inst.nu);
    const int N = sp.horizon();
    std::vector<Rational> x(sp.at(N).cell_count());
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = Rational(static_cast<long>(c * c % 7), 3);
    for (int s = 0; s < N; ++s) {
      auto direct = cond_expect(sp, x, N, Q, s);
      auto via = cond_expect(sp, cond_expect(sp, x, N, Q, s + 1), s + 1, Q, s);
      for (std::size_t c = 0; c < direct.size(); ++c)
        if (Q.of(sp.at(s).cell(c)) > 0) CHECK(direct[c] == via[c]);
    }
  }
}

TEST_CASE("density process on SPACE-A", "[density]") {
  auto sp = oracle::space_a();
  auto mu = oracle::mu_a(), nu = oracle::nu_a();
  auto Q = midpoint(mu, nu);
  auto z = density_process(sp, mu, Q);
  CHECK(z.z.at(0, 0) == 1);
  CHECK(z.z.at(1, 0) == Rational(6, 5));
  CHECK(z.z.at(1, 2) == Rational(2, 3));
  CHECK(z.z.atoms_at(2) == std::vector<Rational>{Rational(4, 3), Rational(1), Rational(2), Rational(0)});
  CHECK(z.locally_ac());
  auto zp = density_process(sp, nu, Q);
  CHECK(zp.z.atoms_at(2) == std::vector<Rational>{Rational(2, 3), Rational(1), Rational(0), Rational(2)});
}

TEST_CASE("density process against the cellwise oracle", "[density][oracle][property]") {
  for (const auto& inst : small_instances(40, 8)) {
    const auto& sp = inst.space;
    auto Q = midpoint(inst.mu, inst.nu);
    auto z = density_process(sp, inst.mu, Q), zp = density_process(sp, inst.nu, Q);
    CHECK(rows(z.z) == oracle::density(sp, inst.mu, Q));
    CHECK(rows(zp.z) == oracle::density(sp, inst.nu, Q));
    for (int t = 0; t <= sp.horizon(); ++t)
      for (std::size_t i = 0; i < sp.atom_count(); ++i) {
        if (Q.of(sp.at(t).cell(sp.cell_of(t, i))) == 0) continue;
        CHECK(z.z.at(t, i) + zp.z.at(t, i) == 2);
        CHECK(z.z.at(t, i) >= 0);
      }
    // Martingale under Q.
    for (int t = 1; t <= sp.horizon(); ++t) {
      auto e = cond_expect(sp, z.z.values[static_cast<std::size_t>(t)], t, Q, t - 1);
      for (std::size_t c = 0; c < e.size(); ++c)
        if (Q.of(sp.at(t - 1).cell(c)) > 0) CHECK(e[c] == z.z.values[static_cast<std::size_t>(t) - 1][c]);
    }
  }
}

TEST_CASE("density flags cells where the reference is null", "[density]") {
  auto sp = oracle::space_a();
  auto nu = oracle::nu_a();
  auto z = density_process(sp, oracle::mu_a(), nu);
  CHECK_FALSE(z.locally_ac());
  CHECK(z.flagged(2, 2));
  CHECK(std::isinf(z.real_at(2, 2)));
  CHECK_THROWS_AS(z.require_locally_ac(), NotLocallyAC);
}

TEST_CASE("Doob-Meyer decomposition", "[doob]") {
  auto sp = oracle::space_a();
  auto mu = oracle::mu_a(), nu = oracle::nu_a();
  auto Q = midpoint(mu, nu);
  auto hp = hellinger_process(sp, mu, nu);
  auto dm = doob_meyer(hp.Y, Q);
  const double dA1 = 1 - (5.0 / 8 * std::sqrt(24.0 / 25) + 3.0 / 8 * std::sqrt(8.0 / 9));
  CHECK_THAT(dm.A.at(1, 0), WithinAbs(dA1, 1e-12));
  CHECK_THAT(hp.A.at(1, 0), WithinAbs(dA1, 1e-12));
  // M is a Q-martingale.
  for (int t = 1; t <= sp.horizon(); ++t) {
    auto e = cond_expect(sp, dm.M.values[static_cast<std::size_t>(t)], t, Q, t - 1);
    for (std::size_t c = 0; c < e.size(); ++c)
      CHECK_THAT(e[c], WithinAbs(dm.M.values[static_cast<std::size_t>(t) - 1][c], 1e-12));
  }
  SECTION("a submartingale is rejected") {
    RationalProcess up{sp,
                       {{Rational(0)},
                        {Rational(1), Rational(1)},
                        {Rational(2), Rational(2), Rational(2), Rational(2)}},
                       std::nullopt};
    CHECK_THROWS_AS(doob_meyer(up, Q), NotSupermartingale);
  }
}

TEST_CASE("compensator of Y against the one-step oracle", "[doob][oracle][property]") {
  for (const auto& inst : small_instances(40, 8, 100)) {
    const auto& sp = inst.space;
    auto hp = hellinger_process(sp, inst.mu, inst.nu);
    auto A = oracle::compensator(sp, inst.mu, inst.nu);
    for (int t = 0; t <= sp.horizon(); ++t)
      for (std::size_t i = 0; i < sp.atom_count(); ++i) {
        CHECK_THAT(hp.A.at(t, i), WithinAbs(A[static_cast<std::size_t>(t)][i], 1e-12));
        CHECK_THAT(hp.M.at(t, i) - hp.Y.at(t, i), WithinAbs(hp.A.at(t, i), 1e-9));
      }
  }
}

TEST_CASE("stopped and interrupted processes", "[stop]") {
  auto sp = oracle::space_a();
  auto Q = midpoint(oracle::mu_a(), oracle::nu_a());
  auto z = density_process(sp, oracle::mu_a(), Q).z;
  StoppingTime T(sp, times({-1, -1, 1, 1}));
  auto s = stopped(z, T);
  CHECK(s.atoms_at(2) == std::vector<Rational>{Rational(4, 3), Rational(1), Rational(2, 3), Rational(2, 3)});
  auto i = interrupted(z, T);
  CHECK(i.atoms_at(1) == std::vector<Rational>{Rational(6, 5), Rational(6, 5), Rational(0), Rational(0)});
  CHECK(i.atoms_at(0) == std::vector<Rational>(4, Rational(1)));
}

TEST_CASE("first vanishing time", "[stop]") {
  auto sp = oracle::space_a();
  auto hp = hellinger_process(sp, oracle::mu_a(), oracle::nu_a());
  CHECK(hp.S.times() == times({-1, -1, 2, 2}));
  CHECK(first_zero_time(hp.z.z, hp.zp.z) == hp.S);
  CHECK(threshold_time(hp.z.z, hp.zp.z, 1).times() == times({1, 1, 1, 1}));
  CHECK(threshold_time(hp.z.z, hp.zp.z, 64).times() == times({-1, -1, 2, 2}));
}

TEST_CASE("process stopping time is the minimal freezing time", "[stop][oracle][property]") {
  for (const auto& inst : small_instances(30, 6, 7)) {
    const auto& sp = inst.space;
    auto hp = hellinger_process(sp, inst.mu, inst.nu);
    for (const auto* x : {&hp.z.z, &hp.zp.z, &hp.y2}) {
      auto lib = process_stopping_time(*x);
      CHECK(lib.times() == oracle::minimal_freezing_time(sp, rows(*x)));
      // The process does not move after its stopping time.
      CHECK(stopped(*x, lib) == *x);
    }
  }
}

TEST_CASE("conditional expectation at T and the K factor on SPACE-A", "[condexp][stop]") {
  auto sp = oracle::space_a();
  auto mu = oracle::mu_a(), nu = oracle::nu_a();
  auto Q = midpoint(mu, nu);
  auto z = density_process(sp, mu, Q).z;
  StoppingTime T(sp, times({2, 2, 1, 1}));
  auto ce = cond_expect_at_T(z, T, Q);
  CHECK(ce == std::vector<Rational>{Rational(6, 5), Rational(6, 5), Rational(2, 3), Rational(2, 3)});
  CHECK(cond_expect_at_T_direct(z, T, Q) == ce);
  CHECK(left_limit_at_T(z, T) == std::vector<Rational>{Rational(6, 5), Rational(6, 5), Rational(1), Rational(1)});
  CHECK(k_factor(z, T, Q) == std::vector<Rational>{Rational(1), Rational(1), Rational(2, 3), Rational(2, 3)});
}

TEST_CASE("formula for E[z_T | F_T-] equals the direct oracle", "[condexp][oracle][property]") {
  for (const auto& inst : small_instances(25, 6, 300)) {
    const auto& sp = inst.space;
    auto Q = midpoint(inst.mu, inst.nu);
    auto z = density_process(sp, inst.mu, Q).z;
    for (const auto& T : all_stopping_times(sp, 400)) {
      auto ce = cond_expect_at_T(z, T, Q);
      CHECK(ce == cond_expect_at_T_direct(z, T, Q));
      auto left = left_limit_at_T(z, T);
      auto K = k_factor(z, T, Q);
      for (std::size_t i = 0; i < ce.size(); ++i) CHECK(ce[i] == left[i] * K[i]);
    }
  }
}

TEST_CASE("announcing sequences", "[predictable]") {
  auto sp = oracle::space_a();
  StoppingTime P(sp, times({2, 2, 2, 2}));
  CHECK(is_predictable(sp, P));
  auto V = announcing_sequence(sp, P);
  REQUIRE(V.size() == 3);
  CHECK(V[2].times() == times({1, 1, 1, 1}));
  CHECK(is_predictable(sp, StoppingTime::constant(sp, kInf)));
  StoppingTime T(sp, times({2, 2, 1, 1}));
  CHECK_FALSE(is_predictable(sp, T));
  StoppingTime U(sp, times({2, 2, -1, -1}));
  CHECK(is_predictable(sp, U));
  CHECK(announcing_sequence(sp, U)[2].times() == times({1, 1, 2, 2}));
  CHECK_FALSE(is_predictable(sp, StoppingTime(sp, times({1, 1, 2, 2}))));
  CHECK_THROWS_AS(announcing_sequence(sp, T), NotAnnouncing);
}

TEST_CASE("predictable times have K = 1", "[predictable][property]") {
  for (const auto& inst : small_instances(25, 6, 500)) {
    const auto& sp = inst.space;
    auto Q = midpoint(inst.mu, inst.nu);
    auto z = density_process(sp, inst.mu, Q).z;
    for (const auto& T : all_stopping_times(sp, 400)) {
      if (!is_predictable(sp, T)) continue;
      auto K = k_factor(z, T, Q);
      auto left = left_limit_at_T(z, T);
      auto ce = cond_expect_at_T(z, T, Q);
      for (std::size_t i = 0; i < K.size(); ++i) {
        if (Q[i] == 0 || T(i) == ExtendedTime::at(0) || T(i).is_infinity()) continue;
        CHECK(K[i] == 1);
        CHECK(ce[i] == left[i]);
      }
    }
  }
}
