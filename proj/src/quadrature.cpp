#include "blockdpp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "blockdpp/errors.hpp"

namespace bdpp {

void circle_nodes(const Contour& c, int n, std::vector<cplx>& z, std::vector<cplx>& wt) {
  z.resize(n);
  wt.resize(n);
  for (int k = 0; k < n; ++k) {
    const cplx u = std::polar(1.0, 2.0 * std::numbers::pi * k / n);
    z[k] = c.center + c.radius * u;
    // dz = i r u dtheta, dtheta = 2 pi / n
    wt[k] = c.radius * u / static_cast<double>(n);
  }
}

namespace {

double scale(const CMat& m) { return std::max(1.0, max_abs(m)); }

}  // namespace

QuadResult circle_integral(const ZFn& f, Contour c, QuadOptions opt) {
  if (c.radius <= 0) throw ContourError("contour radius must be positive");
  int n = std::max(16, c.nodes);
  std::vector<cplx> z, wt;
  circle_nodes(c, n, z, wt);
  CMat sum = f(z[0]) * wt[0] * static_cast<double>(n);
  for (int k = 1; k < n; ++k) sum += f(z[k]) * wt[k] * static_cast<double>(n);
  // sum holds the unnormalized node sum; estimate = sum / n
  CMat est = sum / static_cast<double>(n);
  double delta = 0.0;
  while (2 * n <= opt.cap) {
    // add the midpoints of the current grid
    for (int k = 0; k < n; ++k) {
      const cplx u = std::polar(1.0, std::numbers::pi * (2 * k + 1) / n);
      sum += f(c.center + c.radius * u) * (c.radius * u);
    }
    n *= 2;
    CMat next = sum / static_cast<double>(n);
    delta = max_abs(next - est) / scale(next);
    est = next;
    if (delta < opt.tol) return {est, n, n, delta};
  }
  throw ConvergenceError("circle integral did not converge, last delta " + std::to_string(delta),
                         delta);
}

void check_separated(const Contour& a, const Contour& b) {
  const double d = std::abs(a.center - b.center);
  const double gap = std::abs(a.radius - b.radius) - d;
  if (gap < 1e-3 * std::max(a.radius, b.radius))
    throw ContourError("contour radii collide: z - w can vanish on the grid");
}

namespace {

CMat eval_double(const ZWFn& g, const Contour& zc, const Contour& wc, int nz, int nw) {
  std::vector<cplx> z, zw, w, ww;
  circle_nodes(zc, nz, z, zw);
  circle_nodes(wc, nw, w, ww);
  CMat acc = g(z[0], w[0]) * (zw[0] * ww[0]);
  for (int i = 0; i < nz; ++i)
    for (int j = 0; j < nw; ++j) {
      if (i == 0 && j == 0) continue;
      acc += g(z[i], w[j]) * (zw[i] * ww[j]);
    }
  return acc;
}

template <class Eval>
QuadResult adapt2(Eval eval, int n0, QuadOptions opt) {
  int nz = n0, nw = n0;
  CMat cur = eval(nz, nw);
  double delta = 1e300;
  for (;;) {
    bool moved = false;
    double dz = 0.0, dw = 0.0;
    if (2 * nz <= opt.cap) {
      CMat t = eval(2 * nz, nw);
      dz = max_abs(t - cur) / scale(t);
      if (dz >= opt.tol) {
        nz *= 2;
        cur = t;
        moved = true;
      }
    }
    if (2 * nw <= opt.cap) {
      CMat t = eval(nz, 2 * nw);
      dw = max_abs(t - cur) / scale(t);
      if (dw >= opt.tol) {
        nw *= 2;
        cur = t;
        moved = true;
      }
    }
    delta = std::max(dz, dw);
    if (!moved) {
      if (delta < opt.tol) return {cur, nz, nw, delta};
      break;
    }
  }
  throw ConvergenceError("double integral did not converge, last delta " + std::to_string(delta),
                         delta);
}

}  // namespace

QuadResult double_integral(const ZWFn& g, Contour zc, Contour wc, QuadOptions opt) {
  check_separated(zc, wc);
  return adapt2([&](int nz, int nw) { return eval_double(g, zc, wc, nz, nw); },
                std::max(16, std::min(zc.nodes, wc.nodes)), opt);
}

QuadResult double_integral_sep(const ZFn& left_w, const ZFn& right_z, Contour zc, Contour wc,
                               QuadOptions opt) {
  check_separated(zc, wc);
  auto eval = [&](int nz, int nw) {
    std::vector<cplx> z, zw, w, ww;
    circle_nodes(zc, nz, z, zw);
    circle_nodes(wc, nw, w, ww);
    std::vector<CMat> L(nw);
    for (int j = 0; j < nw; ++j) L[j] = left_w(w[j]) * ww[j];
    const int p = static_cast<int>(L[0].rows());
    CMat acc = CMat::Zero(p, static_cast<int>(L[0].cols()));
    acc.setZero();
    CMat S;
    bool first = true;
    for (int i = 0; i < nz; ++i) {
      S = L[0] / (z[i] - w[0]);
      for (int j = 1; j < nw; ++j) S += L[j] / (z[i] - w[j]);
      CMat R = right_z(z[i]) * zw[i];
      if (first) {
        acc = S * R;
        first = false;
      } else {
        acc += S * R;
      }
    }
    return acc;
  };
  return adapt2(eval, std::max(16, std::min(zc.nodes, wc.nodes)), opt);
}

}  // namespace bdpp
