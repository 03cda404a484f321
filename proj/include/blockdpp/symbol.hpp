#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "blockdpp/cmat.hpp"

namespace bdpp {

enum class FactorKind { BernoulliUp, BernoulliDown, GeometricUp, GeometricDown };

std::string kind_name(FactorKind k);
FactorKind kind_from_name(const std::string& s);
bool is_up(FactorKind k);
bool is_bernoulli(FactorKind k);

// One transition symbol. Up kinds: M(z;a)B(b), N(z;a)B(b).
// Down kinds: M(1/z;a)^T B(b), N(1/z;a)^T B(b).
struct ElementaryFactor {
  FactorKind kind = FactorKind::BernoulliUp;
  RVec a;
  RVec b;

  int p() const { return static_cast<int>(a.size()); }
  double prod_a() const;
};

ElementaryFactor make_factor(FactorKind kind, RVec a, RVec b = {});

CMat eval_whirl(cplx z, const RVec& a);
CMat eval_curl(cplx z, const RVec& a);
// M(1/z;a)^T and N(1/z;a)^T, evaluated without forming 1/z where possible
CMat eval_whirl_dual(cplx z, const RVec& a);
CMat eval_curl_dual(cplx z, const RVec& a);
CMat eval_factor(const ElementaryFactor& f, cplx z);
CMat eval_shift(cplx z, int p, int k);
cplx det_factor(const ElementaryFactor& f, cplx z);

std::vector<cplx> factor_poles(const ElementaryFactor& f);
std::vector<cplx> factor_det_zeros(const ElementaryFactor& f);

struct ZPow {
  int k = 0;
};
struct ShiftPow {
  int k = 0;
};
struct ConstMat {
  CMat m;
};
// Scalar prefactor num(z)/den(z), coefficients in ascending powers of z.
struct ScalarRational {
  std::vector<double> num{1.0};
  std::vector<double> den{1.0};
};

using Primitive = std::variant<ElementaryFactor, ZPow, ShiftPow, ConstMat, ScalarRational>;

struct SymbolExpr {
  int p = 1;
  std::vector<Primitive> items;
  int exponent = 1;

  SymbolExpr() = default;
  explicit SymbolExpr(int p_) : p(p_) {}

  SymbolExpr& push(Primitive x);
  SymbolExpr& append(const SymbolExpr& other);
};

SymbolExpr single(const ElementaryFactor& f);
// Product of the listed symbols with each one's own exponent expanded.
SymbolExpr flatten(const SymbolExpr& s);
SymbolExpr product(const std::vector<SymbolExpr>& parts);
SymbolExpr power(const SymbolExpr& s, int k);

CMat eval_primitive(const Primitive& x, int p, cplx z);
CMat eval_symbol(const SymbolExpr& s, cplx z);
cplx det_symbol(const SymbolExpr& s, cplx z);

// Poles of the entries and zeros of the determinant, origin included.
std::vector<cplx> singular_points(const SymbolExpr& s);

using MatFn = std::function<CMat(cplx)>;

// (1/2 pi i) \oint f(z) z^{-k-1} dz on |z| = radius via an n-point trapezoid rule
CMat fourier_block(const SymbolExpr& s, int k, double radius = 1.0, int nodes = 256);
std::vector<CMat> fourier_range(const MatFn& f, int p, int kmin, int kmax, double radius,
                                int nodes);

int winding_number_det(const SymbolExpr& s, int nodes = 256);
// Winding of d around 0 along |z| = radius.
int winding_number(const std::function<cplx(cplx)>& d, double radius, int nodes = 256);

// Largest annulus around the unit circle free of singular moduli.
struct Annulus {
  double rho_inner = 0.0;
  double rho_outer = 0.0;
};
Annulus free_annulus(const std::vector<cplx>& singular);

nlohmann::json to_json(const SymbolExpr& s);
SymbolExpr symbol_from_json(const nlohmann::json& j);

}  // namespace bdpp
