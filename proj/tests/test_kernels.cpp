#include <doctest.h>

#include <random>

#include "blockdpp/errors.hpp"
#include "blockdpp/kernels.hpp"
#include "blockdpp/models.hpp"

using namespace bdpp;

TEST_CASE("site splitting") {
  CHECK(split_site(-3, 2) == std::pair{-2, 1});
  CHECK(split_site(5, 3) == std::pair{1, 2});
  CHECK(split_site(0, 1) == std::pair{0, 0});
}

TEST_CASE("level products") {
  const auto m = preset("aztec_2p", {{"a", 0.9}, {"N", 1}});
  const cplx z(0.5, 0.8);
  CHECK(max_abs(CMat(level_product(m.symbols, 2, 2, z) - identity(2))) == 0.0);
  const CMat full = level_product(m.symbols, 0, 4, z);
  CHECK(rel_diff(full, eval_symbol(m.product(), z)) < 1e-14);
}

TEST_CASE("finite kernel reproduces z^k") {
  const auto m = preset("aztec_2p", {{"a", 0.9}, {"N", 2}});
  FiniteKernel fk(FiniteEnsemble{2, 4, m.M, m.symbols});
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> ang(0, 6.283), rad(0.5, 1.5);
  for (int i = 0; i < 8; ++i) {
    const cplx z = std::polar(rad(rng), ang(rng));
    for (int k = 0; k < 4; ++k) CHECK(reproducing_residual(fk, k, z) < 1e-8);
  }
}

TEST_CASE("bottom kernel is the large-n limit of the finite kernel") {
  const auto m = preset("aztec_2p", {{"a", 0.9}, {"N", 2}});
  const auto kb = kernel_bottom(m.symbols, factorize(m.product(), m.M));
  const FiniteKernel f4(FiniteEnsemble{2, 4, m.M, m.symbols});
  const FiniteKernel f8(FiniteEnsemble{2, 8, m.M, m.symbols});
  double e4 = 0, e8 = 0;
  for (const Query q : {Query{2, 0, 2, 0}, Query{3, 1, 1, 0}, Query{4, -1, 5, 2}, Query{1, 0, 6, 1}}) {
    e4 = std::max(e4, max_abs(CMat(f4.block(q) - kb.block(q))));
    e8 = std::max(e8, max_abs(CMat(f8.block(q) - kb.block(q))));
  }
  CHECK(e8 < 1e-6);
  CHECK(e8 < e4);
}

TEST_CASE("two-periodic symbol: rho are the eigenvalues and the projector is idempotent") {
  const TwoPeriodic t{2.0, 0.5};
  for (cplx z : {cplx(0.3, 0.9), cplx(-1.4, 0.2)}) {
    const auto [r1, r2] = t.rho(z);
    const CMat phi = t.Phi(z);
    CHECK(std::abs(r1 + r2 - phi.trace()) < 1e-12 * std::abs(phi.trace()) + 1e-12);
    CHECK(std::abs(r1 * r2 - det(phi)) < 1e-12 * std::abs(det(phi)) + 1e-12);
    const CMat P = t.projector(z);
    CHECK(max_abs(CMat(P * P - P)) < 1e-12);
  }
}

TEST_CASE("3x2 factors from switching") {
  const auto t = three_by_two_factors({0.2, 0.7, 1 / 0.14}, {1, 1, 1});
  CHECK(three_by_two_identity_residual(t, 1, 32, 7) < 1e-10);
  CHECK(three_by_two_identity_residual(t, 2, 32, 8) < 1e-10);
  // the printed factor lists carry one misplaced parameter, in four factors
  CHECK(t.discrepancies.size() == 4);
  CHECK(to_json(t).contains("discrepancies"));
}

TEST_CASE("3x2 closed form agrees with the finite kernel on the diamond") {
  const RVec al{0.2, 0.7, 1 / 0.14}, be{1, 1, 1};
  const auto kc = aztec_3x2_kernel(three_by_two_factors(al, be), 1);
  const auto K = aztec_top_fn(kc, 6, 12);
  const auto m = preset("aztec_3x2", {{"N", 1}, {"alpha", al}, {"beta", be}});
  const auto fk = aztec_finite_kernel(m, 0);
  const auto F = fk.fn();
  double e = 0;
  for (int a : {0, 12})
    for (int b : {0, 12})
      for (int u = 0; u < 6; ++u)
        for (int v = 0; v < 6; ++v) e = std::max(e, std::abs(K({a, u}, {b, v}) - F({a, u}, {b, v})));
  CHECK(e < 1e-6);
}

TEST_CASE("hexagon closed form") {
  const HexagonParams h{1, 0.1, 4, 1, 1, 10, 0.25, 1};
  const auto ab = hexagon_ab(h);
  CHECK_FALSE(ab.standard_regime);
  const cplx z(0.7, -1.3);
  const CMat P = eval_factor(hexagon_p1(h), z) * eval_factor(hexagon_p2(h), z);
  CHECK(rel_diff(CMat(ab.A(z) * ab.B(z)), CMat(P * P)) < 1e-12);
  CHECK(rel_diff(CMat(ab.B(z) * ab.A(z)), CMat(P * P)) < 1e-12);
  const auto m = preset("hexagon_2x2", {{"N", 2}});
  const auto kc = hexagon_2x2_kernel(h, 2);
  const auto kb = kernel_bottom(m.symbols, factorize(m.product(), m.M));
  double e = 0;
  for (int mp : {0, 1, 2})
    for (int x : {-2, 0, 1})
      for (int xp : {-1, 0, 2}) e = std::max(e, max_abs(CMat(kc.block({1, x, mp, xp}) - kb.block({4, x, 4 * mp, xp}))));
  CHECK(e < 1e-8);
  HexagonParams same = h;
  same.beta = 1;
  same.gamma = 1;
  same.b = 1;
  same.c = 1;
  CHECK_THROWS(check_hexagon(same));
}

TEST_CASE("Schur cross-check") {
  const auto s = schur_crosscheck({2, 3, 0.5, 0.4}, 5);
  CHECK(s.residual < 1e-8);
  CHECK(s.deformation_residual < 1e-10);
}

TEST_CASE("p = 1 Aztec closed form rejects contours that enclose -1") {
  KernelOptions o;
  o.r_outer = 2.0;
  CHECK_THROWS(aztec_p1_kernel(1.0, 2, o));
}
