#pragma once

#include <functional>

#include "blockdpp/cmat.hpp"

namespace bdpp {

struct Contour {
  cplx center = 0.0;
  double radius = 1.0;
  int nodes = 32;
};

struct QuadOptions {
  double tol = 1e-13;
  int cap = 1 << 14;
};

struct QuadResult {
  CMat value;
  int nodes = 0;
  int nodes_w = 0;
  double delta = 0.0;
};

using ZFn = std::function<CMat(cplx)>;
using ZWFn = std::function<CMat(cplx, cplx)>;

// Trapezoid nodes z_k and weights dz_k / (2 pi i) on a circle.
void circle_nodes(const Contour& c, int n, std::vector<cplx>& z, std::vector<cplx>& wt);

// (1/2 pi i) \oint f(z) dz, doubling the node count until two estimates agree.
QuadResult circle_integral(const ZFn& f, Contour c, QuadOptions opt = {});

// (1/2 pi i)^2 \oint\oint g(z,w) dz dw with z on `zc` and w on `wc`.
QuadResult double_integral(const ZWFn& g, Contour zc, Contour wc, QuadOptions opt = {});

// Same integral for g = L(w) R(z) s(z,w) / (z - w) where L, R are matrix valued.
// Node values are computed once per node count, so this is the kernel workhorse.
QuadResult double_integral_sep(const ZFn& left_w, const ZFn& right_z, Contour zc, Contour wc,
                               QuadOptions opt = {});

void check_separated(const Contour& a, const Contour& b);

}  // namespace bdpp
