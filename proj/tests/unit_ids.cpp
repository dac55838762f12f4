#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "idslab/coeff.hpp"
#include "idslab/discretize.hpp"
#include "idslab/errors.hpp"
#include "idslab/ids.hpp"
#include "idslab/spectral.hpp"
#include "oracle_helpers.hpp"

using namespace idslab;

namespace {

CoefficientSpec free_spec(int d, int m) {
  CoefficientSpec s;
  s.d = d;
  s.m = m;
  long total = d == 1 ? m : static_cast<long>(m) * m;
  s.rho_plus.assign(static_cast<std::size_t>(total), 1.0);
  s.rho_bump.assign(static_cast<std::size_t>(total), 0.0);
  s.law = DisorderLaw::parse("bernoulli:0.5,0,0");
  s.finalize();
  return s;
}

CoefficientSpec bernoulli_spec(int d, int m, double p = 0.5) {
  CoefficientSpec s;
  s.d = d;
  s.m = m;
  long total = d == 1 ? m : static_cast<long>(m) * m;
  s.rho_plus.assign(static_cast<std::size_t>(total), 1.0);
  s.rho_bump.assign(static_cast<std::size_t>(total), 1.0);
  s.law = DisorderLaw::parse("bernoulli:" + std::to_string(p) + ",0,1");
  s.finalize();
  return s;
}

FieldOnGrid manual_field_1d(std::vector<double> values) {
  FieldOnGrid f;
  f.d = 1;
  f.m = 1;
  f.extent = static_cast<int>(values.size());
  f.kind = FieldKind::periodized;
  f.lower = *std::min_element(values.begin(), values.end());
  f.upper = *std::max_element(values.begin(), values.end());
  f.values = std::move(values);
  return f;
}

// Midpoint twist quadrature of the free 1d counting function, from the
// closed-form twisted spectrum.
double oracle_free_floquet_N(double E, int m, int extent, int T) {
  int C = m * extent;
  long total = 0;
  for (int f = 0; f < T; ++f) {
    double tx = 2.0 * M_PI * (f + 0.5) / T;
    for (double lam : oracle::free_floquet_eigs(m, extent, tx))
      if (lam <= E) ++total;
  }
  return static_cast<double>(total) / (static_cast<double>(extent) * T);
}

}  // namespace

TEST_CASE("geometric grid covers its endpoints with constant ratio") {
  std::vector<double> g = geometric_grid(0.1, 10.0, 7);
  REQUIRE(g.size() == 7);
  CHECK(g.front() == 0.1);
  CHECK(g.back() == 10.0);
  for (std::size_t i = 2; i < g.size(); ++i)
    CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]).epsilon(1e-9));
  CHECK(geometric_grid(2.0, 2.0, 1) == std::vector<double>{2.0});
  CHECK_THROWS_AS(geometric_grid(0.0, 1.0, 3), ConfigError);
  CHECK_THROWS_AS(geometric_grid(2.0, 1.0, 3), ConfigError);
  CHECK_THROWS_AS(geometric_grid(1.0, 2.0, 0), ConfigError);
}

TEST_CASE("curve interpolation is anchored at zero and guards its top") {
  IdsCurve c;
  c.energies = {1.0, 2.0, 4.0};
  c.values = {0.1, 0.3, 0.4};
  c.stderrs = {0.01, 0.02, 0.03};
  CHECK(c.value_at(-3.0) == 0.0);
  CHECK(c.value_at(0.0) == 0.0);
  CHECK(c.value_at(0.5) == doctest::Approx(0.05));  // on the anchor segment
  CHECK(c.value_at(1.0) == doctest::Approx(0.1));
  CHECK(c.value_at(1.5) == doctest::Approx(0.2));
  CHECK(c.value_at(3.0) == doctest::Approx(0.35));
  CHECK(c.value_at(4.0) == doctest::Approx(0.4));
  CHECK(c.value_at(4.0 * (1.0 + 1e-13)) == doctest::Approx(0.4));
  CHECK_THROWS_AS(c.value_at(4.1), RangeError);
  CHECK(c.stderr_at(1.5) == doctest::Approx(0.015));
  CHECK(c.stderr_at(0.0) == 0.0);
  IdsCurve bare = c;
  bare.stderrs.clear();
  CHECK(bare.stderr_at(2.0) == 0.0);
}

TEST_CASE("finite-volume curve of the free walled box matches the closed form") {
  CoefficientSpec s = free_spec(1, 4);
  const int extent = 5;
  std::vector<double> lam = oracle::free_dirichlet_eigs(4, extent);
  std::vector<double> grid = {0.5, 2.0, 8.0, 20.0, 45.0, 70.0};
  IdsCurve c = finite_volume_ids(s, extent, BoundaryCondition::Dirichlet(),
                                 grid, 3, 17);
  REQUIRE(c.values.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    long expect = static_cast<long>(
        std::count_if(lam.begin(), lam.end(),
                      [&](double l) { return l <= grid[i]; }));
    CHECK(c.values[i] ==
          doctest::Approx(static_cast<double>(expect) / extent).epsilon(1e-14));
    CHECK(c.stderrs[i] < 1e-14);  // deterministic medium, up to fp roundoff
  }
  CHECK(c.values.back() ==
        doctest::Approx(static_cast<double>(lam.size()) / extent));
  CHECK(c.meta.method == "fv");
  CHECK(c.meta.bc == std::string("dirichlet"));
  CHECK(c.meta.samples == 3);
}

TEST_CASE("finite-volume estimates are reproducible and worker independent") {
  CoefficientSpec s = bernoulli_spec(1, 2);
  std::vector<double> grid = {1.0, 4.0, 12.0};
  IdsCurve a = finite_volume_ids(s, 8, BoundaryCondition::Dirichlet(), grid,
                                 12, 5, /*workers=*/1);
  IdsCurve b = finite_volume_ids(s, 8, BoundaryCondition::Dirichlet(), grid,
                                 12, 5, /*workers=*/4);
  CHECK(a.values == b.values);    // bitwise: reduction order is fixed
  CHECK(a.stderrs == b.stderrs);
  IdsCurve c2 = finite_volume_ids(s, 8, BoundaryCondition::Dirichlet(), grid,
                                  12, 6);
  CHECK(a.values != c2.values);  // the seed matters
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a.stderrs[i] > 0.0);
  CHECK(std::is_sorted(a.values.begin(), a.values.end()));
}

TEST_CASE("finite-volume input validation") {
  CoefficientSpec s = bernoulli_spec(1, 2);
  CHECK_THROWS_AS(finite_volume_ids(s, 4, BoundaryCondition::Dirichlet(), {},
                                    2, 1),
                  ConfigError);
  CHECK_THROWS_AS(finite_volume_ids(s, 4, BoundaryCondition::Dirichlet(),
                                    {2.0, 1.0}, 2, 1),
                  ConfigError);
  CHECK_THROWS_AS(finite_volume_ids(s, 4, BoundaryCondition::Dirichlet(),
                                    {-1.0, 1.0}, 2, 1),
                  ConfigError);
  CHECK_THROWS_AS(finite_volume_ids(s, 4, BoundaryCondition::Dirichlet(),
                                    {1.0}, 0, 1),
                  ConfigError);
}

TEST_CASE("twisted quadrature equals a hand average over its fibers") {
  CoefficientSpec s = bernoulli_spec(1, 2);
  Realization r = draw_realization(s, 3, 9, 0);
  FieldOnGrid f = periodize(s, r);
  const int T = 4;
  std::vector<double> grid = {1.0, 5.0, 15.0, 40.0};
  IdsCurve c = floquet_ids(f, grid, T);

  double vol = 3.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    long total = 0;
    for (int fib = 0; fib < T; ++fib) {
      double tx = 2.0 * M_PI * (fib + 0.5) / T;
      total += eigen_count(assemble(f, BoundaryCondition::Floquet(tx)), grid[i]);
    }
    CHECK(c.values[i] ==
          doctest::Approx(static_cast<double>(total) / (vol * T)).epsilon(1e-15));
    CHECK(c.stderrs[i] == 0.0);
  }
  CHECK(c.meta.theta_nodes == T);
  CHECK(c.meta.method == "floquet");
}

TEST_CASE("twisted quadrature of the free medium matches the closed form") {
  CoefficientSpec s = free_spec(1, 8);
  for (int extent : {1, 4}) {
    FieldOnGrid f = mean_field_on_box(s, extent);
    const int T = 32;
    std::vector<double> grid = {0.5, 1.0, 2.0, 10.0};
    IdsCurve c = floquet_ids(f, grid, T);
    for (std::size_t i = 0; i < grid.size(); ++i)
      CHECK(c.values[i] ==
            doctest::Approx(oracle_free_floquet_N(grid[i], 8, extent, T))
                .epsilon(1e-14));
  }
  // the quadrature refines toward the analytic sqrt(E)/pi law
  FieldOnGrid f = mean_field_on_box(s, 8);
  IdsCurve fine = floquet_ids(f, {0.5}, 64);
  CHECK(fine.values[0] ==
        doctest::Approx(std::sqrt(0.5) / M_PI).epsilon(0.02));
}

TEST_CASE("adaptive node selection reports what it used and is consistent") {
  CoefficientSpec s = free_spec(1, 4);
  FieldOnGrid f = mean_field_on_box(s, 4);
  std::vector<double> grid = {0.4, 1.1, 3.0};
  IdsCurve ad = floquet_ids(f, grid, 0);
  int T = ad.meta.theta_nodes;
  CHECK(T >= 16);  // at least one doubling from the initial 8
  CHECK(T <= 128);
  IdsCurve fixed = floquet_ids(f, grid, T);
  CHECK(ad.values == fixed.values);
}

TEST_CASE("twisted quadrature input validation") {
  CoefficientSpec s = bernoulli_spec(1, 2);
  Realization r = draw_realization(s, 2, 1, 0);
  FieldOnGrid raw = sample_field(s, r);
  CHECK_THROWS_AS(floquet_ids(raw, {1.0}, 8), AssemblyError);
  FieldOnGrid per = periodize(s, r);
  CHECK_THROWS_AS(floquet_ids(per, {1.0}, 200), ConfigError);
  CHECK_THROWS_AS(floquet_ids(per, {}, 8), ConfigError);
}

TEST_CASE("homogenized curve is the twisted curve of the averaged medium") {
  CoefficientSpec s = bernoulli_spec(1, 3, 0.25);
  std::vector<double> grid = {0.5, 2.0, 6.0};
  IdsCurve h = homogenized_ids(s, grid, 16);
  IdsCurve direct = floquet_ids(mean_field(s), grid, 16);
  CHECK(h.values == direct.values);
  CHECK(h.meta.method == "homog");

  IdsCurve hh = homogenized_ids(s, grid, 16, /*harmonic=*/true);
  IdsCurve dh = floquet_ids(mean_field(s, true), grid, 16);
  CHECK(hh.values == dh.values);
  // harmonic averaging lowers the medium, so counts can only grow
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(hh.values[i] >= h.values[i] - 1e-15);
}

TEST_CASE("expected periodized curve averages the pattern curves exactly") {
  CoefficientSpec s = bernoulli_spec(1, 1);  // one cell per period, p = 1/2
  std::vector<double> grid = {0.5, 2.0, 5.0};
  const int T = 8;

  // extent 2: four equally likely periodized patterns
  std::vector<std::vector<double>> patterns = {
      {1.0, 1.0}, {2.0, 1.0}, {1.0, 2.0}, {2.0, 2.0}};
  std::vector<double> exact(grid.size(), 0.0);
  for (const auto& pat : patterns) {
    IdsCurve c = floquet_ids(manual_field_1d(pat), grid, T);
    for (std::size_t i = 0; i < grid.size(); ++i)
      exact[i] += c.values[i] / static_cast<double>(patterns.size());
  }

  IdsCurve est = expected_periodized_ids(s, 2, grid, T, 400, 5);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(est.values[i] - exact[i]) <=
          4.0 * est.stderrs[i] + 1e-12);
  }
  CHECK(est.meta.method == "floquet-mc");
  CHECK(est.meta.theta_nodes == T);

  IdsCurve w1 = expected_periodized_ids(s, 2, grid, T, 50, 5, 1);
  IdsCurve w4 = expected_periodized_ids(s, 2, grid, T, 50, 5, 4);
  CHECK(w1.values == w4.values);
}

TEST_CASE("expected periodized curve of a deterministic medium has no spread") {
  CoefficientSpec s = free_spec(1, 4);
  std::vector<double> grid = {0.7, 2.3};
  IdsCurve est = expected_periodized_ids(s, 3, grid, 16, 5, 1);
  IdsCurve direct = floquet_ids(mean_field_on_box(s, 3), grid, 16);
  CHECK(est.values == direct.values);
  for (double se : est.stderrs) CHECK(se < 1e-14);
}

TEST_CASE("test functions have unit mass and consistent derivatives") {
  TestFunction phi{2.0, 0.25};
  // Simpson over the support window
  const int n = 4000;
  double a = phi.support_lo(), b = phi.support_hi();
  double h = (b - a) / n;
  double mass = 0.0;
  for (int i = 0; i <= n; ++i) {
    double c = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    mass += c * phi(a + i * h);
  }
  mass *= h / 3.0;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));

  for (double x : {1.6, 1.95, 2.0, 2.3}) {
    double fd = (phi(x + 1e-6) - phi(x - 1e-6)) / 2e-6;
    CHECK(phi.deriv(x) == doctest::Approx(fd).epsilon(1e-5));
  }
  CHECK(phi(b + 0.01) == 0.0);
  CHECK(phi(a - 0.01) == 0.0);
  CHECK(phi.deriv(b + 0.01) == 0.0);
}

TEST_CASE("pairing a linear curve against a bump returns its slope") {
  // integration by parts: -int phi' (cE) dE = c * int phi = c
  IdsCurve line;
  for (int i = 1; i <= 60; ++i) {
    line.energies.push_back(0.05 * i);
    line.values.push_back(0.3 * 0.05 * i);
  }
  TestFunction phi{1.5, 0.15};
  double got = pair_against_curve(phi, line);
  CHECK(got == doctest::Approx(0.3).epsilon(1e-4));
}

TEST_CASE("smoothed counting matches a direct spectral sum and the pairing") {
  CoefficientSpec s = free_spec(1, 4);
  const int extent = 4;
  TestFunction phi{5.0, 1.0};

  SmoothedValue sv = smoothed_dos(s, phi, extent,
                                  BoundaryCondition::Dirichlet(), 2, 3);
  CHECK(sv.stderr_ == 0.0);
  CHECK(sv.dof == 15);

  // direct: sum phi over the dense spectrum of the same box
  FieldOnGrid f = mean_field_on_box(s, extent);
  StiffnessMatrix A = assemble(f, BoundaryCondition::Dirichlet());
  double direct = 0.0;
  for (double lam : all_eigenvalues(A)) direct += phi(lam);
  direct /= extent;
  CHECK(sv.value == doctest::Approx(direct).epsilon(1e-13));

  // pairing against a counting curve with knots pinched around each jump
  std::vector<double> lam = oracle::free_dirichlet_eigs(4, extent);
  std::vector<double> knots;
  for (double l : lam)
    if (l < 12.0) {
      knots.push_back(l * (1.0 - 1e-5));
      knots.push_back(l * (1.0 + 1e-5));
    }
  knots.push_back(12.0);
  std::sort(knots.begin(), knots.end());
  IdsCurve sharp = finite_volume_ids(s, extent, BoundaryCondition::Dirichlet(),
                                     knots, 1, 0);
  double paired = pair_against_curve(phi, sharp, 0.002);
  CHECK(paired == doctest::Approx(direct).epsilon(2e-3));
}

TEST_CASE("smoothed counting is reproducible across worker counts") {
  CoefficientSpec s = bernoulli_spec(1, 2);
  TestFunction phi{3.0, 0.8};
  SmoothedValue a = smoothed_dos(s, phi, 6, BoundaryCondition::Neumann(), 10,
                                 11, 1);
  SmoothedValue b = smoothed_dos(s, phi, 6, BoundaryCondition::Neumann(), 10,
                                 11, 3);
  CHECK(a.value == b.value);
  CHECK(a.stderr_ == b.stderr_);
  CHECK(a.stderr_ > 0.0);
}
