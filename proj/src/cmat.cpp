#include "blockdpp/cmat.hpp"

#include <algorithm>
#include <cmath>

#include "blockdpp/errors.hpp"

namespace bdpp {

CMat identity(int p) { return CMat::Identity(p, p); }

CMat diag_b(const RVec& b) {
  const int p = static_cast<int>(b.size());
  CMat d = CMat::Zero(p, p);
  for (int i = 0; i < p; ++i) d(i, i) = b[i];
  return d;
}

namespace {

cplx det3(const CMat& m, int r0, int r1, int r2, int c0, int c1, int c2) {
  return m(r0, c0) * (m(r1, c1) * m(r2, c2) - m(r1, c2) * m(r2, c1)) -
         m(r0, c1) * (m(r1, c0) * m(r2, c2) - m(r1, c2) * m(r2, c0)) +
         m(r0, c2) * (m(r1, c0) * m(r2, c1) - m(r1, c1) * m(r2, c0));
}

}  // namespace

cplx det(const CMat& m) {
  if (m.rows() != m.cols()) throw Error("det of non-square matrix");
  switch (m.rows()) {
    case 0:
      return 1.0;
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
      return det3(m, 0, 1, 2, 0, 1, 2);
    case 4:
      return m(0, 0) * det3(m, 1, 2, 3, 1, 2, 3) - m(0, 1) * det3(m, 1, 2, 3, 0, 2, 3) +
             m(0, 2) * det3(m, 1, 2, 3, 0, 1, 3) - m(0, 3) * det3(m, 1, 2, 3, 0, 1, 2);
    default:
      return m.partialPivLu().determinant();
  }
}

CMat inverse(const CMat& m) {
  if (m.rows() == 1) {
    if (m(0, 0) == cplx(0.0)) throw Error("inverse of singular matrix");
    return CMat::Constant(1, 1, 1.0 / m(0, 0));
  }
  if (m.rows() == 2) {
    const cplx d = det(m);
    if (d == cplx(0.0)) throw Error("inverse of singular matrix");
    CMat r(2, 2);
    r << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    return r / d;
  }
  Eigen::PartialPivLU<CMat> lu(m);
  if (lu.determinant() == cplx(0.0)) throw Error("inverse of singular matrix");
  return lu.inverse();
}

CMat solve(const CMat& a, const CMat& b) { return a.partialPivLu().solve(b); }

CMat mat_pow(const CMat& m, int k) {
  CMat base = k < 0 ? inverse(m) : m;
  unsigned e = static_cast<unsigned>(k < 0 ? -k : k);
  CMat r = identity(static_cast<int>(m.rows()));
  while (e) {
    if (e & 1u) r = r * base;
    e >>= 1u;
    if (e) base = base * base;
  }
  return r;
}

double max_abs(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

double rel_diff(const CMat& a, const CMat& b) {
  return max_abs(a - b) / std::max(1.0, max_abs(b));
}

}  // namespace bdpp
