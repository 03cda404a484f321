#include <doctest.h>

#include <random>

#include "blockdpp/switching.hpp"

using namespace bdpp;
using K = FactorKind;

namespace {

RVec random_vec(std::mt19937& rng, int p, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  RVec v(p);
  for (auto& x : v) x = U(rng);
  return v;
}

const cplx kZ[3] = {{0.3, 0.8}, {-1.2, 0.4}, {0.9, -1.7}};

}  // namespace

TEST_CASE("eta on the two-periodic example") {
  const auto [bp, ap] = eta_map({1, 2}, {3, 4});
  CHECK(bp[0] == doctest::Approx(8.0 / 3));
  CHECK(bp[1] == doctest::Approx(4.5));
  CHECK(ap[0] == doctest::Approx(4.0 / 3));
  CHECK(ap[1] == doctest::Approx(1.5));
  for (cplx z : kZ)
    CHECK(rel_diff(CMat(eval_whirl(z, bp) * eval_whirl(z, ap)),
                   CMat(eval_whirl(z, {1, 2}) * eval_whirl(z, {3, 4}))) < 1e-14);
}

TEST_CASE("whirl, curl and mixed exchange relations") {
  std::mt19937 rng(11);
  for (int p = 1; p <= 6; ++p) {
    const RVec a = random_vec(rng, p, 0.2, 1.5), b = random_vec(rng, p, 0.2, 1.5);
    const auto [eb, ea] = eta_map(a, b);
    const auto [cb, ca] = eta_curl_map(a, b);
    const auto [tb, ta] = theta_map(a, b);
    const auto [ia, ib] = theta_inverse(tb, ta);
    for (cplx z : kZ) {
      CHECK(rel_diff(CMat(eval_whirl(z, eb) * eval_whirl(z, ea)),
                     CMat(eval_whirl(z, a) * eval_whirl(z, b))) < 1e-12);
      CHECK(rel_diff(CMat(eval_curl(z, cb) * eval_curl(z, ca)),
                     CMat(eval_curl(z, a) * eval_curl(z, b))) < 1e-12);
      CHECK(rel_diff(CMat(eval_curl(z, tb) * eval_whirl(z, ta)),
                     CMat(eval_whirl(z, a) * eval_curl(z, b))) < 1e-12);
    }
    for (int i = 0; i < p; ++i) {
      CHECK(ia[i] == doctest::Approx(a[i]).epsilon(1e-12));
      CHECK(ib[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("printed curl rule with eta(a, b) fails at p = 3") {
  const RVec a{0.5, 1.3, 0.8}, b{1.1, 0.4, 0.9};
  const auto [bp, ap] = eta_map(a, b);
  const cplx z(0.3, 0.8);
  CHECK(rel_diff(CMat(eval_curl(z, bp) * eval_curl(z, ap)),
                 CMat(eval_curl(z, a) * eval_curl(z, b))) > 1e-3);
}

TEST_CASE("2x2 rules") {
  SUBCASE("up-up") {
    const P2Factors in{{1, 2, 3, 4}, {5, 6, 7, 8}};
    const auto sw = p2_switch(P2Rule::UpUp, in);
    CHECK(sw.x == doctest::Approx(22.0 / 43));
    for (cplx z : kZ) {
      const CMat before = p2_eval_left(P2Rule::UpUp, in, z, false) * p2_eval_right(P2Rule::UpUp, in, z, false);
      const CMat after = p2_eval_left(P2Rule::UpUp, sw.out, z, true) * p2_eval_right(P2Rule::UpUp, sw.out, z, true);
      CHECK(rel_diff(after, before) < 1e-14);
    }
  }
  for (auto rule : {P2Rule::DownDown, P2Rule::MixedDownUp}) {
    const P2Factors in{{1.5, 0.5, 2, 0.7}, {0.3, 1.2, 0.8, 2.5}};
    const auto sw = p2_switch(rule, in);
    for (cplx z : kZ) {
      const CMat before = p2_eval_left(rule, in, z, false) * p2_eval_right(rule, in, z, false);
      const CMat after = p2_eval_left(rule, sw.out, z, true) * p2_eval_right(rule, sw.out, z, true);
      CHECK(rel_diff(after, before) < 1e-13);
    }
  }
}

TEST_CASE("dualized down factors evaluate to the original") {
  const auto bd = make_factor(K::BernoulliDown, {0.7, 1.8, 0.5}, {1.2, 0.9, 2.0});
  const auto gd = make_factor(K::GeometricDown, {0.7, 0.8, 0.5}, {1.2, 0.9, 2.0});
  for (const auto& f : {bd, gd})
    for (auto side : {DualSide::Left, DualSide::Right})
      for (cplx z : kZ) CHECK(rel_diff(eval_symbol(dualize(f, side), z), eval_factor(f, z)) < 1e-13);
}

TEST_CASE("switch_pair swaps kinds and keeps determinants for all kind pairs") {
  std::mt19937 rng(3);
  for (int p : {1, 2, 3, 5})
    for (int kl = 0; kl < 4; ++kl)
      for (int kr = 0; kr < 4; ++kr) {
        auto mk = [&](int k) {
          RVec a = random_vec(rng, p, 0.3, 1.5);
          if (!is_bernoulli(static_cast<K>(k)))
            for (auto& x : a) x *= 0.6;
          return make_factor(static_cast<K>(k), a, random_vec(rng, p, 0.5, 2.0));
        };
        const auto L = mk(kl), R = mk(kr);
        if (!is_bernoulli(L.kind) && L.prod_a() >= 1) continue;
        if (!is_bernoulli(R.kind) && R.prod_a() >= 1) continue;
        const auto sw = switch_pair(L, R);
        CHECK(sw.left.kind == R.kind);
        CHECK(sw.right.kind == L.kind);
        for (cplx z : kZ) {
          CHECK(rel_diff(CMat(eval_factor(sw.left, z) * eval_factor(sw.right, z)),
                         CMat(eval_factor(L, z) * eval_factor(R, z))) < 1e-11);
          CHECK(std::abs(det_factor(sw.left, z) - det_factor(R, z)) <
                1e-12 * std::max(1.0, std::abs(det_factor(R, z))));
        }
      }
}
