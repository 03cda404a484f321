#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blockdpp/quadrature.hpp"
#include "blockdpp/symbol.hpp"
#include "blockdpp/wienerhopf.hpp"

namespace bdpp {

// Query (m, x; m', x') in block coordinates: rows/columns of the returned p x p
// block are the residues r' = u' mod p and r = u mod p, i.e.
// block(r', r) = K(m, p x + r; m', p x' + r').
struct Query {
  int m = 0;
  int x = 0;
  int mp = 0;
  int xp = 0;
};

// Splits a site u into (x, r) with u = p x + r, 0 <= r < p.
std::pair<int, int> split_site(int u, int p);

// phi_{k,l} = phi_{k+1} ... phi_l, identity when k >= l.
CMat level_product(const std::vector<SymbolExpr>& symbols, int k, int l, cplx z);

struct FiniteEnsemble {
  int p = 1;
  int n = 1;  // pn paths
  int M = 0;
  std::vector<SymbolExpr> symbols;  // phi_1 .. phi_N
  int N() const { return static_cast<int>(symbols.size()); }
};

// Finite-n kernel through the moment matrix G and R_n(z, w). Fourier
// coefficients are taken on |z| = radius, which must lie in the annulus where
// every phi_m is analytic; radius 1 is the definition, other radii trade
// roundoff for symbols that are large on the unit circle.
class FiniteKernel {
 public:
  explicit FiniteKernel(FiniteEnsemble e, int nodes = 2048, double radius = 1.0);

  const FiniteEnsemble& ensemble() const { return e_; }
  const CMat& moment_matrix() const { return G_; }
  const CMat& moment_inverse() const { return Ginv_; }
  cplx det_G() const { return detG_; }
  // Change of G when the Fourier grid is halved; a proxy for aliasing error.
  double aliasing_estimate() const { return alias_; }

  CMat cd_kernel(cplx z, cplx w) const;
  CMat block(const Query& q) const;
  cplx entry(int m, int u, int mp, int up) const;

  double radius() const { return radius_; }

  // Fourier coefficient of z^j in phi_{k,l}.
  const CMat& coefficient(int k, int l, int j) const;

 private:
  const std::vector<CMat>& node_values(int k, int l) const;
  CMat coefficient_with(const std::vector<CMat>& vals, int j, int stride) const;

  FiniteEnsemble e_;
  int nodes_;
  double radius_;
  std::vector<cplx> z_;
  CMat G_, Ginv_;
  cplx detG_ = 0.0;
  double alias_ = 0.0;
  mutable std::map<std::pair<int, int>, std::vector<CMat>> vals_;
  mutable std::map<std::tuple<int, int, int>, CMat> coef_;
};

// (1/2 pi i) \oint w^k phi(w) R_n(z, w) dw / w^{M+n} - z^k I, relative max norm,
// integrated over |w| = fk.radius().
double reproducing_residual(const FiniteKernel& fk, int k, cplx z, int nodes = 1024);

using LevelFn = std::function<CMat(int, cplx)>;
using PairFn = std::function<CMat(int, int, cplx)>;

// K = -chi_{m>m'} (1/2 pi i) \oint_sc single(m', m, z) z^{x'-x} dz / z
//     + sign (1/2 pi i)^2 \oint_zc \oint_wc left(m', w) right(m, z)
//         w^{x' + w_shift} / z^{x + z_shift + 1} dz dw / (z - w)
struct ContourKernelSpec {
  int p = 1;
  LevelFn left;
  LevelFn right;
  PairFn single;
  Contour zc, wc, sc;
  double sign = -1.0;
  int w_shift = 0;
  int z_shift = 0;
  double tol = 1e-12;
  int min_nodes = 64;
  int max_nodes = 1 << 13;
  std::string name;
};

class ContourKernel {
 public:
  explicit ContourKernel(ContourKernelSpec s);

  CMat block(const Query& q) const;
  cplx entry(int m, int u, int mp, int up) const;
  const ContourKernelSpec& spec() const { return s_; }
  int last_nodes() const { return last_nodes_; }
  double last_delta() const { return last_delta_; }

 private:
  struct Grid {
    std::vector<cplx> z, zwt, w, wwt, s, swt;
  };
  const Grid& grid(int n) const;
  const std::vector<CMat>& left_at(int mp, int n) const;
  const std::vector<CMat>& right_at(int m, int n) const;
  CMat double_term(const Query& q, int n) const;
  CMat single_term(const Query& q, int n) const;

  ContourKernelSpec s_;
  mutable std::map<int, Grid> grids_;
  mutable std::map<std::pair<int, int>, std::vector<CMat>> left_, right_;
  mutable std::map<std::tuple<int, int, int>, std::vector<CMat>> single_;
  mutable int last_nodes_ = 0;
  mutable double last_delta_ = 0.0;
};

struct KernelOptions {
  double tol = 1e-12;
  int min_nodes = 64;
  int max_nodes = 1 << 13;
  std::optional<double> r_inner;  // overrides for the generic circle radii
  std::optional<double> r_outer;
};

// Bottom kernel from a plus_minus factorization of prod symbols.
ContourKernel kernel_bottom(const std::vector<SymbolExpr>& symbols, const WHFactorization& f,
                            const KernelOptions& opt = {});
// Top kernel in (m, xi; m', xi') coordinates from a minus_plus factorization.
ContourKernel kernel_top(const std::vector<SymbolExpr>& symbols, const WHFactorization& f,
                         const KernelOptions& opt = {});

// Uniform-weight Aztec diamond, p = 1, levels 2m.
ContourKernel aztec_p1_kernel(double a, int N, const KernelOptions& opt = {});

// Two-periodic Aztec diamond at a = 1, levels 4m, N even, alpha beta = 1.
struct TwoPeriodic {
  double alpha = 1.0;
  double beta = 1.0;
  CMat Phi(cplx z) const;
  std::pair<cplx, cplx> rho(cplx z) const;  // (rho1, rho2)
  CMat projector(cplx z) const;             // (Phi - rho2) / (rho1 - rho2)
};
ContourKernel aztec_2p_kernel(double alpha, double beta, int N, const KernelOptions& opt = {});

// A(z), B(z) of the 3x2-periodic Aztec diamond regenerated by switching,
// together with the printed factor lists.
struct ThreeByTwoFactors {
  RVec alpha, beta, c;
  std::vector<ElementaryFactor> A, B;                  // regenerated
  std::vector<ElementaryFactor> A_printed, B_printed;  // as printed
  std::vector<std::string> discrepancies;
  CMat evalA(cplx z) const;
  CMat evalB(cplx z) const;
  CMat evalPhi(cplx z) const;
};
ThreeByTwoFactors three_by_two_factors(const RVec& alpha, const RVec& beta);
double three_by_two_identity_residual(const ThreeByTwoFactors& t, int k, int samples,
                                      unsigned seed);
nlohmann::json to_json(const ThreeByTwoFactors& t);
ContourKernel aztec_3x2_kernel(const ThreeByTwoFactors& t, int N, const KernelOptions& opt = {});

struct HexagonParams {
  double a = 1, b = 1, c = 1, d = 1;
  double alpha = 1, beta = 1, gamma = 1, delta = 1;
};
void check_hexagon(const HexagonParams& h);
// Step symbols P1 = (a b; cz d), P2 = (alpha beta; gamma z delta).
ElementaryFactor hexagon_p1(const HexagonParams& h);
ElementaryFactor hexagon_p2(const HexagonParams& h);
// Closed-form A, B with A B = B A = (P1 P2)^2, chosen by the regime of the ratios.
struct HexagonAB {
  bool standard_regime = true;  // beta gamma / alpha delta < 1 < b c / a d
  double x = 1.0, y = 1.0;
  double y_printed = 1.0;
  std::function<CMat(cplx)> A, B;
};
HexagonAB hexagon_ab(const HexagonParams& h);
ContourKernel hexagon_2x2_kernel(const HexagonParams& h, int N, const KernelOptions& opt = {});

// p = 1 chain with steps 1 + b_m z: max over |x|,|x'| <= xmax of
// |(-1)^{x'-x} K(x, x') - delta_{x x'} + K_Schur(x + 1/2 - N/2, x' + 1/2 - N/2)|.
struct SchurCheck {
  double residual = 0.0;
  double deformation_residual = 0.0;  // nesting swap changes K by exactly delta
};
SchurCheck schur_crosscheck(const RVec& b, int xmax);
// Okounkov's Schur-measure kernel for geometric specializations xs, ys (< 1):
// (1/2 pi i)^2 \oint\oint_{|z|>|w|} J(z)/J(w) z^{-i-1/2} w^{j-1/2} dz dw / (z - w),
// J(z) = prod (1 - y/z) / prod (1 - x z), with i = ih + 1/2, j = jh + 1/2.
cplx schur_kernel(const RVec& xs, const RVec& ys, int ih, int jh);

}  // namespace bdpp
