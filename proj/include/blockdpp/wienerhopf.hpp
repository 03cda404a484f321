#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockdpp/symbol.hpp"

namespace bdpp {

enum class WHVariant { PlusMinus, MinusPlus };

std::string variant_name(WHVariant v);
WHVariant variant_from_name(const std::string& s);

// Closed form (prod_l Phi_+^(l))^{N/q} (prod_l Phi_-^(l))^{N/q} from a periodic switching orbit.
struct OrbitInfo {
  int q = 0;
  int repeats = 0;
  // One period of each side in product order, e.g. Phi_+^(1)..Phi_+^(q) and
  // Phi_-^(q)..Phi_-^(1) for plus_minus.
  std::vector<ElementaryFactor> plus_block;
  std::vector<ElementaryFactor> minus_block;
};

// plus_minus: phi = plus * minus.  minus_plus: phi = minus * plus.
struct WHFactorization {
  SymbolExpr plus;
  SymbolExpr minus;
  WHVariant variant = WHVariant::PlusMinus;
  int l1 = 0;  // Bernoulli downs rewritten on the plus side
  int l2 = 0;  // Bernoulli ups rewritten on the minus side
  int M = 0;
  CMat C;
  std::optional<OrbitInfo> orbit;
  int switches = 0;
};

// True when the factor and its inverse are analytic in the open unit disk
// apart from a possible singularity at 0.
bool inside_regular(const ElementaryFactor& f);

// Overrides inside_regular, e.g. at a boundary parameter where it is undefined.
using Classifier = std::function<bool(const ElementaryFactor&)>;

bool check_admissible(const SymbolExpr& s, int M);

// Reorders by pairwise switching so that inside-regular factors come first
// (inside_first) or last. Returns the switch count through `switches`.
std::vector<ElementaryFactor> sort_by_region(std::vector<ElementaryFactor> fs, bool inside_first,
                                             int* switches = nullptr,
                                             const Classifier& inside = nullptr);

WHFactorization factorize(const SymbolExpr& s, int M, WHVariant variant = WHVariant::PlusMinus);

// s must be a power Phi^N (s.items = Phi, s.exponent = N).
std::optional<OrbitInfo> detect_orbit(const SymbolExpr& s, WHVariant variant, int cap = 64,
                                      const Classifier& inside = nullptr);

// Factorization built from the closed orbit form; falls back to factorize when no orbit exists.
WHFactorization factorize_orbit(const SymbolExpr& s, int M,
                                WHVariant variant = WHVariant::PlusMinus);

struct WHReport {
  bool ok = true;
  double product_residual = 0.0;
  double det_residual = 0.0;
  double plus_negative_fourier = 0.0;
  double plus_inverse_negative_fourier = 0.0;  // relative to sup |plus^{-1}| on the circle
  double minus_normalization = 0.0;
  int winding_plus = 0;
  int winding_minus = 0;
  std::vector<std::string> failures;
};

WHReport validate(const WHFactorization& f, const SymbolExpr& s, double tol = 1e-9);

// Value of phi at z recombined from the two sides.
CMat eval_product(const WHFactorization& f, cplx z);

nlohmann::json to_json(const WHFactorization& f);
nlohmann::json to_json(const WHReport& r);

}  // namespace bdpp
