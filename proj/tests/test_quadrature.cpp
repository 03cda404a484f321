#include <doctest.h>

#include "blockdpp/errors.hpp"
#include "blockdpp/quadrature.hpp"

using namespace bdpp;

namespace {

ZFn scalar(std::function<cplx(cplx)> f) {
  return [f](cplx z) {
    CMat m(1, 1);
    m(0, 0) = f(z);
    return m;
  };
}

}  // namespace

TEST_CASE("residues") {
  CHECK(std::abs(circle_integral(scalar([](cplx z) { return 1.0 / z; }), {0.0, 1.0}).value(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(circle_integral(scalar([](cplx z) { return std::exp(z) / (z * z * z); }), {0.0, 1.0}).value(0, 0) - 0.5) < 1e-12);
  CHECK(std::abs(circle_integral(scalar([](cplx z) { return 1.0 / ((z - 0.2) * (z - 3.0)); }), {0.0, 1.0}).value(0, 0) + 1.0 / 2.8) < 1e-12);
  // shifted centre picks up only the enclosed pole
  CHECK(std::abs(circle_integral(scalar([](cplx z) { return 1.0 / (z * (z - 0.5)); }), {0.5, 0.25}).value(0, 0) - 2.0) < 1e-12);
}

TEST_CASE("contour radius does not matter inside the analytic annulus") {
  const auto g = scalar([](cplx z) { return std::cos(z) / (z * (z - 2.0)); });
  const cplx a = circle_integral(g, {0.0, 0.5}).value(0, 0);
  CHECK(std::abs(circle_integral(g, {0.0, 1.7}).value(0, 0) - a) < 1e-10);
}

TEST_CASE("nested double integral") {
  const auto r = double_integral(
      [](cplx z, cplx w) {
        CMat m(1, 1);
        m(0, 0) = 1.0 / (z * (z - w));
        return m;
      },
      {0.0, 1.0}, {0.0, 2.0});
  CHECK(std::abs(r.value(0, 0) + 1.0) < 1e-12);
  // swapping the nesting removes the residue at z = w
  const auto s = double_integral_sep(scalar([](cplx) { return 1.0; }),
                                     scalar([](cplx z) { return 1.0 / z; }), {0.0, 2.0}, {0.0, 1.0});
  CHECK(std::abs(s.value(0, 0)) < 1e-12);
}

TEST_CASE("bad contours") {
  CHECK_THROWS_AS(check_separated({0.0, 1.0}, {0.0, 1.0}), ContourError);
  CHECK_THROWS_AS(circle_integral(scalar([](cplx z) { return 1.0 / z; }), {0.0, -1.0}), ContourError);
  QuadOptions tight;
  tight.cap = 64;
  CHECK_THROWS_AS(circle_integral(scalar([](cplx z) { return 1.0 / (z - 0.999); }), {0.0, 1.0}, tight),
                  ConvergenceError);
}
