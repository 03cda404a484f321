#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace bdpp {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using RVec = std::vector<double>;

CMat identity(int p);
CMat diag_b(const RVec& b);

// Closed-form expansion up to 4x4, partial-pivot LU beyond.
cplx det(const CMat& m);
CMat inverse(const CMat& m);
CMat solve(const CMat& a, const CMat& b);
CMat mat_pow(const CMat& m, int k);

double max_abs(const CMat& m);
// max_ij |a-b| / max(1, max_ij |b|)
double rel_diff(const CMat& a, const CMat& b);

}  // namespace bdpp
