#include <doctest.h>

#include "blockdpp/errors.hpp"
#include "blockdpp/models.hpp"
#include "blockdpp/wienerhopf.hpp"

using namespace bdpp;
using K = FactorKind;

TEST_CASE("two-periodic and 3x2 symbols factorize in both orders") {
  for (const auto& [name, params] :
       {std::pair<std::string, nlohmann::json>{"aztec_2p", {{"a", 0.9}, {"N", 2}}},
        {"aztec_3x2", {{"a", 0.9}, {"N", 1}}}}) {
    const auto m = preset(name, params);
    const SymbolExpr s = m.product();
    for (auto v : {WHVariant::PlusMinus, WHVariant::MinusPlus}) {
      const auto f = factorize(s, m.M, v);
      const auto r = validate(f, s);
      CAPTURE(name);
      CHECK(r.ok);
      CHECK(r.product_residual < 1e-9);
      CHECK(r.plus_negative_fourier < 1e-8);
      CHECK(r.minus_normalization < 1e-6);
      CHECK(f.M == m.M);
    }
  }
}

TEST_CASE("scalar symbol: the zero outside the disk goes to the plus side") {
  SymbolExpr s(1);
  s.push(make_factor(K::BernoulliUp, {2.0}));
  s.push(make_factor(K::BernoulliUp, {0.5}));
  CHECK(check_admissible(s, 1));
  const auto f = factorize(s, 1, WHVariant::PlusMinus);
  const cplx z(0.3, -0.6);
  CHECK(std::abs(eval_product(f, z)(0, 0) - (1.0 + 2.0 * z) * (1.0 + 0.5 * z)) < 1e-14);
  // plus analytic and invertible in the disk
  CHECK(std::abs(det_symbol(f.plus, 0.0)) > 0.1);
  CHECK(validate(f, s).ok);
}

TEST_CASE("periodic switching orbit gives the closed form") {
  SymbolExpr blk(1);
  blk.push(make_factor(K::BernoulliUp, {2.0}));
  blk.push(make_factor(K::BernoulliUp, {0.5}));
  blk.exponent = 3;
  const auto o = detect_orbit(blk, WHVariant::PlusMinus);
  REQUIRE(o.has_value());
  CHECK(o->q == 1);
  const auto f = factorize_orbit(blk, 3, WHVariant::PlusMinus);
  CHECK(f.orbit.has_value());
  CHECK(validate(f, blk).ok);
}

TEST_CASE("winding mismatch is an admissibility error") {
  const auto m = preset("aztec_2p", {{"a", 0.9}, {"N", 2}});
  CHECK_FALSE(check_admissible(m.product(), m.M + 1));
  CHECK_THROWS_AS(factorize(m.product(), m.M + 1), AdmissibilityError);
  SymbolExpr flat(1);
  flat.push(make_factor(K::BernoulliUp, {1.0}));
  // det vanishes on the unit circle
  CHECK_THROWS_AS(factorize(flat, 0), Error);
}

TEST_CASE("regions of elementary factors") {
  CHECK(inside_regular(make_factor(K::BernoulliUp, {0.5})));
  CHECK_FALSE(inside_regular(make_factor(K::BernoulliUp, {2.0})));
  CHECK(inside_regular(make_factor(K::GeometricUp, {0.5, 0.9})));
}

TEST_CASE("factorization JSON carries both sides") {
  const auto m = preset("aztec_2p", {{"a", 0.9}, {"N", 1}});
  const auto f = factorize(m.product(), m.M);
  const auto j = to_json(f);
  CHECK(j.at("variant") == "plus_minus");
  CHECK(j.at("M") == -1);
  const SymbolExpr plus = symbol_from_json(j.at("plus"));
  const cplx z(0.2, 0.9);
  CHECK(max_abs(CMat(eval_symbol(plus, z) - eval_symbol(f.plus, z))) < 1e-14);
}
