#include <doctest.h>

#include <random>

#include "blockdpp/errors.hpp"
#include "blockdpp/symbol.hpp"

using namespace bdpp;
using K = FactorKind;

namespace {

CMat random_matrix(int p, std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  CMat m(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) m(i, j) = cplx(U(rng), U(rng));
  return m;
}

}  // namespace

TEST_CASE("scalar factors reduce to the textbook steps") {
  const cplx z(0.3, 0.7);
  CHECK(std::abs(eval_factor(make_factor(K::BernoulliUp, {2.0}), z)(0, 0) - (1.0 + 2.0 * z)) < 1e-15);
  CHECK(std::abs(eval_factor(make_factor(K::BernoulliDown, {2.0}), z)(0, 0) - (1.0 + 2.0 / z)) < 1e-15);
  CHECK(std::abs(eval_factor(make_factor(K::GeometricUp, {0.5}), z)(0, 0) - 1.0 / (1.0 - 0.5 * z)) < 1e-15);
  CHECK(std::abs(eval_factor(make_factor(K::GeometricDown, {0.5}), z)(0, 0) - 1.0 / (1.0 - 0.5 / z)) < 1e-15);
}

TEST_CASE("determinant and inverse agree with Eigen") {
  std::mt19937 rng(5);
  for (int p = 1; p <= 6; ++p) {
    const CMat m = random_matrix(p, rng);
    CHECK(std::abs(det(m) - m.determinant()) < 1e-12);
    CHECK(max_abs(CMat(inverse(m) * m - identity(p))) < 1e-10);
  }
}

TEST_CASE("shift to the power p is z^-1") {
  const cplx z(0.4, -1.1);
  for (int p : {1, 2, 3, 5}) CHECK(max_abs(CMat(eval_shift(z, p, p) - identity(p) / z)) < 1e-14);
}

TEST_CASE("curl is a conjugated inverse whirl for every p") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(0.3, 2.0);
  for (int p = 1; p <= 5; ++p) {
    RVec a(p);
    for (auto& x : a) x = U(rng);
    const cplx z(0.6, 0.35);
    CMat J = CMat::Zero(p, p);
    for (int i = 0; i < p; ++i) J(i, i) = (i % 2) ? -1.0 : 1.0;
    const CMat rhs = J * inverse(eval_whirl((p % 2 ? -1.0 : 1.0) * z, a)) * J;
    CHECK(rel_diff(eval_curl(z, a), rhs) < 1e-12);
  }
}

TEST_CASE("determinant of a factor matches its closed form") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.3, 0.9);
  for (int p : {1, 2, 3, 5})
    for (int k = 0; k < 4; ++k) {
      RVec a(p), b(p);
      for (auto& x : a) x = U(rng);
      for (auto& x : b) x = U(rng) + 0.5;
      const auto f = make_factor(static_cast<K>(k), a, b);
      const cplx z(0.8, 0.9);
      CHECK(std::abs(det_factor(f, z) - det(eval_factor(f, z))) <
            1e-12 * std::max(1.0, std::abs(det_factor(f, z))));
    }
}

TEST_CASE("winding of det counts Bernoulli factors with prod a > 1") {
  SymbolExpr s(2);
  s.push(make_factor(K::BernoulliUp, {2.0, 1.5}));
  s.push(make_factor(K::BernoulliUp, {3.0, 1.0}));
  s.push(make_factor(K::BernoulliDown, {2.0, 2.0}));
  s.push(make_factor(K::GeometricDown, {0.5, 0.5}));
  s.push(make_factor(K::BernoulliUp, {0.2, 0.5}));
  CHECK(winding_number_det(s) == 1);
  s.push(ZPow{-1});
  CHECK(winding_number_det(s) == -1);
}

TEST_CASE("power and product expand exponents") {
  SymbolExpr s(1);
  s.push(make_factor(K::BernoulliUp, {0.5}));
  const SymbolExpr s3 = power(s, 3);
  const cplx z(0.2, 0.3);
  CHECK(std::abs(eval_symbol(s3, z)(0, 0) - std::pow(1.0 + 0.5 * z, 3)) < 1e-14);
  CHECK(flatten(s3).items.size() == 3);
}

TEST_CASE("symbol JSON round trip") {
  SymbolExpr s(2);
  s.push(make_factor(K::BernoulliDown, {0.4, 2.0}, {1.0, 3.0}));
  s.push(make_factor(K::GeometricUp, {0.5, 0.6}));
  s.push(ZPow{2});
  s.push(ShiftPow{-1});
  s.push(ScalarRational{{1.0, 0.5}, {2.0}});
  s.exponent = 2;
  const SymbolExpr t = symbol_from_json(to_json(s));
  CHECK(to_json(t) == to_json(s));
  const cplx z(0.7, -0.2);
  CHECK(max_abs(CMat(eval_symbol(t, z) - eval_symbol(s, z))) == 0.0);
}

TEST_CASE("fourier blocks of a Bernoulli step") {
  SymbolExpr s(1);
  s.push(make_factor(K::BernoulliUp, {0.7}, {2.0}));
  CHECK(std::abs(fourier_block(s, 0)(0, 0) - 2.0) < 1e-14);
  CHECK(std::abs(fourier_block(s, 1)(0, 0) - 0.7 * 2.0) < 1e-14);
  CHECK(std::abs(fourier_block(s, 2)(0, 0)) < 1e-14);
}

TEST_CASE("invalid factors are rejected") {
  CHECK_THROWS_AS(make_factor(K::GeometricUp, {1.5}), Error);
  CHECK_THROWS_AS(make_factor(K::BernoulliUp, {-1.0}), Error);
  CHECK_THROWS_AS(make_factor(K::BernoulliUp, {1.0, 2.0}, {1.0}), Error);
  CHECK_THROWS(kind_from_name("sideways"));
}
