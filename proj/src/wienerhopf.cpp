#include "blockdpp/wienerhopf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "blockdpp/errors.hpp"
#include "blockdpp/switching.hpp"

namespace bdpp {

std::string variant_name(WHVariant v) {
  return v == WHVariant::PlusMinus ? "plus_minus" : "minus_plus";
}

WHVariant variant_from_name(const std::string& s) {
  if (s == "plus_minus") return WHVariant::PlusMinus;
  if (s == "minus_plus") return WHVariant::MinusPlus;
  throw UsageError("unknown factorization variant '" + s + "'");
}

bool inside_regular(const ElementaryFactor& f) {
  switch (f.kind) {
    case FactorKind::GeometricUp:
      return true;
    case FactorKind::GeometricDown:
      return false;
    default:
      break;
  }
  const double A = f.prod_a();
  if (std::abs(A - 1.0) < 1e-12)
    throw AdmissibilityError("Bernoulli factor with parameter product 1 vanishes on the unit circle");
  return f.kind == FactorKind::BernoulliUp ? A < 1.0 : A > 1.0;
}

bool check_admissible(const SymbolExpr& s, int M) { return winding_number_det(s) == s.p * M; }

namespace {

const cplx kProbe[2] = {std::polar(1.0, 0.913), std::polar(1.0, 2.417)};

void check_switch(const ElementaryFactor& l, const ElementaryFactor& r, const SwitchResult& sw) {
  for (cplx z : kProbe) {
    const CMat before = eval_factor(l, z) * eval_factor(r, z);
    const CMat after = eval_factor(sw.left, z) * eval_factor(sw.right, z);
    if (rel_diff(after, before) > 1e-10) throw Error("switching residual above tolerance");
  }
}

// Factors of s, with monomials collected into `zpow`.
std::vector<ElementaryFactor> collect(const SymbolExpr& s, int& zpow) {
  const SymbolExpr flat = flatten(s);
  std::vector<ElementaryFactor> out;
  zpow = 0;
  for (const auto& it : flat.items) {
    if (const auto* f = std::get_if<ElementaryFactor>(&it)) {
      if (f->p() != s.p) throw Error("factor size differs from symbol size");
      out.push_back(*f);
    } else if (const auto* zp = std::get_if<ZPow>(&it)) {
      zpow += zp->k;
    } else {
      throw Error("factorize supports elementary factors and monomials only");
    }
  }
  return out;
}

ElementaryFactor shifted(const ElementaryFactor& f, int k) {
  return {f.kind, sigma(f.a, k), sigma(f.b, k)};
}

// BernoulliDown(a,b) = BernoulliUp(1/a, sigma^{-1}(a b)) S
ElementaryFactor down_to_up_right_shift(const ElementaryFactor& f) {
  return {FactorKind::BernoulliUp, recip(f.a), sigma(hadamard(f.a, f.b), -1)};
}
// BernoulliUp(e,f) = BernoulliDown(1/e, sigma(f) e) S^{-1}
ElementaryFactor up_to_down_right_shift(const ElementaryFactor& f) {
  return {FactorKind::BernoulliDown, recip(f.a), hadamard(sigma(f.b, 1), f.a)};
}
SymbolExpr from_factors(int p, const std::vector<ElementaryFactor>& fs) {
  SymbolExpr s(p);
  for (const auto& f : fs) s.push(f);
  return s;
}

double outer_radius(const SymbolExpr& s) {
  double r = 1.0;
  for (auto z : singular_points(s)) r = std::max(r, std::abs(z));
  return 2.0 * r;
}

WHFactorization assemble(int p, std::vector<ElementaryFactor> inside,
                         std::vector<ElementaryFactor> outside, int M, int zpow, WHVariant variant) {
  WHFactorization out;
  out.variant = variant;
  out.M = M;
  std::vector<ElementaryFactor> U, V;
  int l1 = 0, l2 = 0;
  if (variant == WHVariant::PlusMinus) {
    // inside block: S's migrate to its right end, S^k V = V(sigma^{-k}) S^k
    for (const auto& f0 : inside) {
      ElementaryFactor f = shifted(f0, -l1);
      if (f.kind == FactorKind::BernoulliDown) {
        f = down_to_up_right_shift(f);
        ++l1;
      }
      U.push_back(f);
    }
    // outside block: S^{-1}'s migrate to its left end, V S^{-k} = S^{-k} V(sigma^{-k})
    for (auto it = outside.rbegin(); it != outside.rend(); ++it) {
      ElementaryFactor f = *it;
      if (f.kind == FactorKind::BernoulliUp) {
        f = up_to_down_right_shift(f);
        ++l2;
      }
      V.push_back(shifted(f, -l2));
    }
    std::reverse(V.begin(), V.end());
  } else {
    // outside block on the left: S^{-k} V = V(sigma^k) S^{-k}
    for (const auto& f0 : outside) {
      ElementaryFactor f = shifted(f0, l2);
      if (f.kind == FactorKind::BernoulliUp) {
        f = up_to_down_right_shift(f);
        ++l2;
      }
      V.push_back(f);
    }
    // inside block on the right: V S^k = S^k V(sigma^k)
    for (auto it = inside.rbegin(); it != inside.rend(); ++it) {
      ElementaryFactor f = *it;
      if (f.kind == FactorKind::BernoulliDown) {
        f = down_to_up_right_shift(f);
        ++l1;
      }
      U.push_back(shifted(f, l1));
    }
    std::reverse(U.begin(), U.end());
  }
  out.l1 = l1;
  out.l2 = l2;
  // S^{p q} = z^{-q}, so the collected shift must be a multiple of p
  const int net = l1 - l2;
  if (net % p != 0) throw AdmissibilityError("shift count not a multiple of p; winding mismatch");
  const int zexp = -net / p + zpow;
  if (zexp != M) throw AdmissibilityError("winding mismatch: factors give M=" + std::to_string(zexp));

  const SymbolExpr Vs = from_factors(p, V);
  out.C = V.empty() ? identity(p) : fourier_block(Vs, 0, outer_radius(Vs), 512);
  if (std::abs(det(out.C)) < 1e-14) throw Error("normalization constant is singular");
  const CMat Ci = inverse(out.C);

  out.plus = SymbolExpr(p);
  out.minus = SymbolExpr(p);
  if (variant == WHVariant::PlusMinus) {
    for (const auto& f : U) out.plus.push(f);
    out.plus.push(ConstMat{out.C});
    out.minus.push(ConstMat{Ci});
    if (M != 0) out.minus.push(ZPow{M});
    for (const auto& f : V) out.minus.push(f);
  } else {
    out.plus.push(ConstMat{out.C});
    for (const auto& f : U) out.plus.push(f);
    if (M != 0) out.minus.push(ZPow{M});
    for (const auto& f : V) out.minus.push(f);
    out.minus.push(ConstMat{Ci});
  }
  return out;
}

bool classify(const Classifier& c, const ElementaryFactor& f) {
  return c ? c(f) : inside_regular(f);
}

void split(const std::vector<ElementaryFactor>& fs, std::vector<ElementaryFactor>& in,
           std::vector<ElementaryFactor>& out, const Classifier& c = nullptr) {
  in.clear();
  out.clear();
  for (const auto& f : fs) (classify(c, f) ? in : out).push_back(f);
}

bool same_params(const std::vector<ElementaryFactor>& x, const std::vector<ElementaryFactor>& y,
                 double tol) {
  if (x.size() != y.size()) return false;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i].kind != y[i].kind) return false;
    for (size_t j = 0; j < x[i].a.size(); ++j) {
      if (std::abs(x[i].a[j] - y[i].a[j]) > tol * std::abs(y[i].a[j])) return false;
      if (std::abs(x[i].b[j] - y[i].b[j]) > tol * std::abs(y[i].b[j])) return false;
    }
  }
  return true;
}

// Largest entry over the blocks kmin..kmax, doubling nodes until aliasing settles.
double fourier_max(const MatFn& fn, int p, int kmin, int kmax, double radius, const CMat* sub) {
  double prev = -1.0;
  for (int n = 512; n <= (1 << 15); n *= 2) {
    auto cs = fourier_range(fn, p, kmin, kmax, radius, n);
    if (sub) cs[0] -= *sub;
    double m = 0.0;
    for (const auto& c : cs) m = std::max(m, max_abs(c));
    if (prev >= 0.0 && std::abs(m - prev) < 1e-14) return m;
    prev = m;
  }
  return prev;
}

}  // namespace

std::vector<ElementaryFactor> sort_by_region(std::vector<ElementaryFactor> fs, bool inside_first,
                                             int* switches, const Classifier& inside) {
  // Every adjacent out-of-order pair is switched in one simultaneous sweep;
  // repeated sweeps realize the staircase schedule of the block-wise procedure.
  std::vector<bool> cls(fs.size());
  for (size_t i = 0; i < fs.size(); ++i) cls[i] = classify(inside, fs[i]) == inside_first;
  int count = 0;
  for (bool moved = true; moved;) {
    moved = false;
    for (size_t i = 0; i + 1 < fs.size(); ++i) {
      if (!cls[i] && cls[i + 1]) {
        SwitchResult sw = switch_pair(fs[i], fs[i + 1]);
        check_switch(fs[i], fs[i + 1], sw);
        fs[i] = sw.left;
        fs[i + 1] = sw.right;
        std::swap(cls[i], cls[i + 1]);
        ++count;
        ++i;
        moved = true;
      }
    }
  }
  if (switches) *switches += count;
  return fs;
}

WHFactorization factorize(const SymbolExpr& s, int M, WHVariant variant) {
  if (!check_admissible(s, M))
    throw AdmissibilityError("winding mismatch: winding of det is not p*M");
  int zpow = 0;
  const auto fs = collect(s, zpow);
  int sw = 0;
  const bool inside_first = variant == WHVariant::PlusMinus;
  const auto sorted = sort_by_region(fs, inside_first, &sw);
  std::vector<ElementaryFactor> in, out;
  split(sorted, in, out);
  WHFactorization f = assemble(s.p, in, out, M, zpow, variant);
  f.switches = sw;
  return f;
}

static std::optional<OrbitInfo> detect_orbit_impl(const SymbolExpr& s, WHVariant variant, int cap,
                                                  const Classifier& inside);

std::optional<OrbitInfo> detect_orbit(const SymbolExpr& s, WHVariant variant, int cap,
                                      const Classifier& inside) {
  try {
    return detect_orbit_impl(s, variant, cap, inside);
  } catch (const AdmissibilityError&) {
    throw;
  } catch (const Error&) {
    // parameters drifting far enough to break switching means no short orbit
    return std::nullopt;
  }
}

static std::optional<OrbitInfo> detect_orbit_impl(const SymbolExpr& s, WHVariant variant, int cap,
                                                  const Classifier& inside) {
  const int N = s.exponent;
  if (N <= 0) return std::nullopt;
  SymbolExpr block = s;
  block.exponent = 1;
  int zpow = 0;
  const auto phi = collect(block, zpow);
  if (zpow != 0 || phi.empty()) return std::nullopt;
  const bool inside_first = variant == WHVariant::PlusMinus;

  std::vector<ElementaryFactor> in, out;
  split(sort_by_region(phi, inside_first, nullptr, inside), in, out, inside);
  if (in.empty() || out.empty()) {
    OrbitInfo o{1, N, in, out};
    return o;
  }
  const auto in0 = in, out0 = out;
  std::vector<std::vector<ElementaryFactor>> ins{in}, outs{out};
  for (int step = 1; step <= cap; ++step) {
    // plus_minus: Phi_-^(l) Phi_+^(l) -> Phi_+^(l+1) Phi_-^(l+1)
    std::vector<ElementaryFactor> cat = inside_first ? out : in;
    const auto& tail = inside_first ? in : out;
    cat.insert(cat.end(), tail.begin(), tail.end());
    split(sort_by_region(cat, inside_first, nullptr, inside), in, out, inside);
    if (same_params(in, in0, 1e-12) && same_params(out, out0, 1e-12)) {
      const int q = step;
      if (N % q != 0) return std::nullopt;
      OrbitInfo o;
      o.q = q;
      o.repeats = N / q;
      // plus_minus: Phi_+^(1)..Phi_+^(q) | Phi_-^(q)..Phi_-^(1); minus_plus mirrors it
      for (int l = 0; l < q; ++l) {
        const auto& b = ins[inside_first ? l : q - 1 - l];
        o.plus_block.insert(o.plus_block.end(), b.begin(), b.end());
      }
      for (int l = 0; l < q; ++l) {
        const auto& b = outs[inside_first ? q - 1 - l : l];
        o.minus_block.insert(o.minus_block.end(), b.begin(), b.end());
      }
      return o;
    }
    ins.push_back(in);
    outs.push_back(out);
  }
  return std::nullopt;
}

WHFactorization factorize_orbit(const SymbolExpr& s, int M, WHVariant variant) {
  const auto orbit = detect_orbit(s, variant);
  if (!orbit) return factorize(s, M, variant);
  if (!check_admissible(s, M))
    throw AdmissibilityError("winding mismatch: winding of det is not p*M");
  std::vector<ElementaryFactor> in, out;
  for (int r = 0; r < orbit->repeats; ++r) {
    in.insert(in.end(), orbit->plus_block.begin(), orbit->plus_block.end());
    out.insert(out.end(), orbit->minus_block.begin(), orbit->minus_block.end());
  }
  WHFactorization f = assemble(s.p, in, out, M, 0, variant);
  f.orbit = orbit;
  return f;
}

CMat eval_product(const WHFactorization& f, cplx z) {
  const CMat P = eval_symbol(f.plus, z), Mn = eval_symbol(f.minus, z);
  return f.variant == WHVariant::PlusMinus ? CMat(P * Mn) : CMat(Mn * P);
}

WHReport validate(const WHFactorization& f, const SymbolExpr& s, double tol) {
  WHReport r;
  const int p = s.p;
  for (int j = 0; j < 64; ++j) {
    const cplx z = std::polar(1.0, 2.0 * std::numbers::pi * (j + 0.37) / 64);
    const CMat ref = eval_symbol(s, z);
    r.product_residual = std::max(r.product_residual, rel_diff(eval_product(f, z), ref));
    const cplx d = det_symbol(f.plus, z) * det_symbol(f.minus, z), dref = det_symbol(s, z);
    r.det_residual = std::max(r.det_residual, std::abs(d - dref) / std::max(1.0, std::abs(dref)));
  }
  const auto plus_fn = [&](cplx z) { return eval_symbol(f.plus, z); };
  const auto plus_inv = [&](cplx z) { return inverse(eval_symbol(f.plus, z)); };
  r.plus_negative_fourier = fourier_max(plus_fn, p, -8, -1, 1.0, nullptr);
  double inv_scale = 1.0;
  for (int j = 0; j < 256; ++j)
    inv_scale = std::max(inv_scale, max_abs(plus_inv(std::polar(1.0, 2.0 * std::numbers::pi * j / 256))));
  r.plus_inverse_negative_fourier = fourier_max(plus_inv, p, -8, -1, 1.0, nullptr) / inv_scale;
  const int M = f.M;
  const auto norm_fn = [&](cplx z) { return CMat(eval_symbol(f.minus, z) * std::pow(z, -M)); };
  const CMat I = identity(p);
  r.minus_normalization = fourier_max(norm_fn, p, 0, 8, 10.0, &I);

  r.winding_plus = winding_number([&](cplx z) { return det_symbol(f.plus, z); }, 1.0 - 1e-6);
  r.winding_minus = winding_number(
      [&](cplx z) { return det_symbol(f.minus, z) * std::pow(z, -p * M); }, 1.0 + 1e-6);

  if (r.product_residual > tol) r.failures.push_back("product identity");
  if (r.det_residual > 10 * tol) r.failures.push_back("determinant conservation");
  if (r.plus_negative_fourier > 1e-8) r.failures.push_back("plus analyticity");
  if (r.plus_inverse_negative_fourier > 1e-8) r.failures.push_back("plus inverse analyticity");
  if (r.minus_normalization > 1e-6) r.failures.push_back("minus normalization");
  if (r.winding_plus != 0) r.failures.push_back("winding of det plus");
  if (r.winding_minus != 0) r.failures.push_back("winding of det minus");
  r.ok = r.failures.empty();
  return r;
}

nlohmann::json to_json(const WHFactorization& f) {
  nlohmann::json j;
  j["variant"] = variant_name(f.variant);
  j["M"] = f.M;
  j["l1"] = f.l1;
  j["l2"] = f.l2;
  j["switches"] = f.switches;
  j["plus"] = to_json(f.plus);
  j["minus"] = to_json(f.minus);
  nlohmann::json c = nlohmann::json::array();
  for (int i = 0; i < f.C.rows(); ++i)
    for (int k = 0; k < f.C.cols(); ++k) c.push_back({f.C(i, k).real(), f.C(i, k).imag()});
  j["C"] = c;
  if (f.orbit) {
    j["orbit"] = {{"q", f.orbit->q}, {"repeats", f.orbit->repeats}};
    SymbolExpr pb(f.plus.p), mb(f.plus.p);
    for (const auto& x : f.orbit->plus_block) pb.push(x);
    for (const auto& x : f.orbit->minus_block) mb.push(x);
    j["orbit"]["plus_block"] = to_json(pb);
    j["orbit"]["minus_block"] = to_json(mb);
  } else {
    j["orbit"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const WHReport& r) {
  return {{"ok", r.ok},
          {"product_residual", r.product_residual},
          {"det_residual", r.det_residual},
          {"plus_negative_fourier", r.plus_negative_fourier},
          {"plus_inverse_negative_fourier", r.plus_inverse_negative_fourier},
          {"minus_normalization", r.minus_normalization},
          {"winding_plus", r.winding_plus},
          {"winding_minus", r.winding_minus},
          {"failures", r.failures}};
}

}  // namespace bdpp
