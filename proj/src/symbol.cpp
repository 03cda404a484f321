#include "blockdpp/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "blockdpp/errors.hpp"

namespace bdpp {

std::string kind_name(FactorKind k) {
  switch (k) {
    case FactorKind::BernoulliUp:
      return "BernoulliUp";
    case FactorKind::BernoulliDown:
      return "BernoulliDown";
    case FactorKind::GeometricUp:
      return "GeometricUp";
    case FactorKind::GeometricDown:
      return "GeometricDown";
  }
  return "?";
}

FactorKind kind_from_name(const std::string& s) {
  if (s == "BernoulliUp") return FactorKind::BernoulliUp;
  if (s == "BernoulliDown") return FactorKind::BernoulliDown;
  if (s == "GeometricUp") return FactorKind::GeometricUp;
  if (s == "GeometricDown") return FactorKind::GeometricDown;
  throw Error("unknown factor kind: " + s);
}

bool is_up(FactorKind k) { return k == FactorKind::BernoulliUp || k == FactorKind::GeometricUp; }
bool is_bernoulli(FactorKind k) {
  return k == FactorKind::BernoulliUp || k == FactorKind::BernoulliDown;
}

double ElementaryFactor::prod_a() const {
  double r = 1.0;
  for (double x : a) r *= x;
  return r;
}

ElementaryFactor make_factor(FactorKind kind, RVec a, RVec b) {
  if (a.empty()) throw Error("factor needs p >= 1 parameters");
  if (b.empty()) b.assign(a.size(), 1.0);
  if (b.size() != a.size()) throw Error("factor parameter vectors differ in length");
  for (double x : a)
    if (!(x > 0)) throw Error("factor parameter a must be positive");
  for (double x : b)
    if (!(x > 0)) throw Error("factor parameter b must be positive");
  ElementaryFactor f{kind, std::move(a), std::move(b)};
  if (!is_bernoulli(kind) && !(f.prod_a() < 1.0))
    throw Error("geometric factor requires prod(a) < 1");
  return f;
}

namespace {

double prod_range(const RVec& a, int from, int to_incl) {
  const int p = static_cast<int>(a.size());
  double r = 1.0;
  for (int l = from; l <= to_incl; ++l) r *= a[((l % p) + p) % p];
  return r;
}

double prod_all(const RVec& a) { return prod_range(a, 0, static_cast<int>(a.size()) - 1); }

}  // namespace

CMat eval_whirl(cplx z, const RVec& a) {
  const int p = static_cast<int>(a.size());
  if (p == 1) return CMat::Constant(1, 1, 1.0 + a[0] * z);
  CMat m = identity(p);
  for (int i = 0; i + 1 < p; ++i) m(i, i + 1) = a[i];
  m(p - 1, 0) = a[p - 1] * z;
  return m;
}

CMat eval_curl(cplx z, const RVec& a) {
  const int p = static_cast<int>(a.size());
  const double A = prod_all(a);
  const cplx den = 1.0 - A * z;
  if (std::abs(den) < 1e-300) throw PoleError("curl pole at z = 1/prod(a)", z);
  if (p == 1) return CMat::Constant(1, 1, 1.0 / den);
  CMat m(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      m(i, j) = j >= i ? cplx(prod_range(a, i, j - 1)) : z * prod_range(a, i, j + p - 1);
  return m / den;
}

CMat eval_whirl_dual(cplx z, const RVec& a) {
  const int p = static_cast<int>(a.size());
  if (z == cplx(0.0)) throw PoleError("whirl dual pole at z = 0", z);
  if (p == 1) return CMat::Constant(1, 1, 1.0 + a[0] / z);
  CMat m = identity(p);
  for (int i = 0; i + 1 < p; ++i) m(i + 1, i) = a[i];
  m(0, p - 1) = a[p - 1] / z;
  return m;
}

CMat eval_curl_dual(cplx z, const RVec& a) {
  const int p = static_cast<int>(a.size());
  const double A = prod_all(a);
  const cplx den = z - A;
  if (std::abs(den) < 1e-300) throw PoleError("curl dual pole at z = prod(a)", z);
  CMat m(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      m(i, j) = i >= j ? z * prod_range(a, j, i - 1) : cplx(prod_range(a, j, i + p - 1));
  return m / den;
}

CMat eval_factor(const ElementaryFactor& f, cplx z) {
  CMat m;
  switch (f.kind) {
    case FactorKind::BernoulliUp:
      m = eval_whirl(z, f.a);
      break;
    case FactorKind::BernoulliDown:
      m = eval_whirl_dual(z, f.a);
      break;
    case FactorKind::GeometricUp:
      m = eval_curl(z, f.a);
      break;
    case FactorKind::GeometricDown:
      m = eval_curl_dual(z, f.a);
      break;
  }
  for (int j = 0; j < f.p(); ++j) m.col(j) *= f.b[j];
  return m;
}

CMat eval_shift(cplx z, int p, int k) {
  if (k == 0) return identity(p);
  if (z == cplx(0.0)) throw PoleError("shift operator pole at z = 0", z);
  // S e_j = e_{j+1}, S e_{p-1} = z^{-1} e_0, hence S^p = z^{-1} I
  const int q = k >= 0 ? k / p : -((-k + p - 1) / p);
  const int r = k - q * p;
  CMat m = CMat::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    const int t = j + r;
    m(t % p, j) = t >= p ? 1.0 / z : cplx(1.0);
  }
  return m * std::pow(z, -q);
}

cplx det_factor(const ElementaryFactor& f, cplx z) {
  const int p = f.p();
  const double A = f.prod_a();
  const double sgn = (p - 1) % 2 == 0 ? 1.0 : -1.0;
  double B = prod_all(f.b);
  switch (f.kind) {
    case FactorKind::BernoulliUp:
      return (1.0 + sgn * A * z) * B;
    case FactorKind::BernoulliDown:
      return (1.0 + sgn * A / z) * B;
    case FactorKind::GeometricUp:
      return B / (1.0 - A * z);
    case FactorKind::GeometricDown:
      return B * z / (z - A);
  }
  return 0.0;
}

std::vector<cplx> factor_poles(const ElementaryFactor& f) {
  switch (f.kind) {
    case FactorKind::BernoulliUp:
      return {};
    case FactorKind::BernoulliDown:
      return {0.0};
    case FactorKind::GeometricUp:
      return {1.0 / f.prod_a()};
    case FactorKind::GeometricDown:
      return {f.prod_a()};
  }
  return {};
}

std::vector<cplx> factor_det_zeros(const ElementaryFactor& f) {
  const double sgn = f.p() % 2 == 0 ? 1.0 : -1.0;
  switch (f.kind) {
    case FactorKind::BernoulliUp:
      return {sgn / f.prod_a()};
    case FactorKind::BernoulliDown:
      return {sgn * f.prod_a()};
    case FactorKind::GeometricUp:
      return {};
    case FactorKind::GeometricDown:
      return {0.0};
  }
  return {};
}

SymbolExpr& SymbolExpr::push(Primitive x) {
  if (auto* f = std::get_if<ElementaryFactor>(&x))
    if (f->p() != p) throw Error("primitive period does not match symbol period");
  if (auto* c = std::get_if<ConstMat>(&x))
    if (c->m.rows() != p || c->m.cols() != p) throw Error("constant matrix has wrong size");
  items.push_back(std::move(x));
  return *this;
}

SymbolExpr& SymbolExpr::append(const SymbolExpr& other) {
  if (other.p != p) throw Error("cannot multiply symbols of different period");
  SymbolExpr o = flatten(other);
  if (exponent != 1) *this = flatten(*this);
  for (auto& x : o.items) items.push_back(x);
  return *this;
}

SymbolExpr single(const ElementaryFactor& f) {
  SymbolExpr s(f.p());
  s.push(f);
  return s;
}

namespace {

Primitive invert_primitive(const Primitive& x, int p) {
  if (auto* z = std::get_if<ZPow>(&x)) return ZPow{-z->k};
  if (auto* s = std::get_if<ShiftPow>(&x)) return ShiftPow{-s->k};
  if (auto* c = std::get_if<ConstMat>(&x)) return ConstMat{inverse(c->m)};
  if (auto* r = std::get_if<ScalarRational>(&x)) return ScalarRational{r->den, r->num};
  (void)p;
  throw Error("elementary factors have no primitive inverse");
}

}  // namespace

SymbolExpr flatten(const SymbolExpr& s) {
  if (s.exponent == 1) return s;
  SymbolExpr out(s.p);
  if (s.exponent > 0) {
    for (int e = 0; e < s.exponent; ++e)
      for (auto& x : s.items) out.items.push_back(x);
    return out;
  }
  if (s.exponent == 0) return out;
  SymbolExpr inv(s.p);
  for (auto it = s.items.rbegin(); it != s.items.rend(); ++it)
    inv.items.push_back(invert_primitive(*it, s.p));
  for (int e = 0; e < -s.exponent; ++e)
    for (auto& x : inv.items) out.items.push_back(x);
  return out;
}

SymbolExpr product(const std::vector<SymbolExpr>& parts) {
  if (parts.empty()) throw Error("empty product needs an explicit period");
  SymbolExpr out(parts.front().p);
  for (auto& s : parts) out.append(s);
  return out;
}

SymbolExpr power(const SymbolExpr& s, int k) {
  SymbolExpr out = flatten(s);
  out.exponent = k;
  return out;
}

namespace {

cplx poly(const std::vector<double>& c, cplx z) {
  cplx r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * z + *it;
  return r;
}

}  // namespace

CMat eval_primitive(const Primitive& x, int p, cplx z) {
  if (auto* f = std::get_if<ElementaryFactor>(&x)) return eval_factor(*f, z);
  if (auto* zp = std::get_if<ZPow>(&x)) {
    if (zp->k < 0 && z == cplx(0.0)) throw PoleError("monomial pole at z = 0", z);
    return identity(p) * std::pow(z, zp->k);
  }
  if (auto* sp = std::get_if<ShiftPow>(&x)) return eval_shift(z, p, sp->k);
  if (auto* c = std::get_if<ConstMat>(&x)) return c->m;
  const auto& r = std::get<ScalarRational>(x);
  const cplx d = poly(r.den, z);
  if (std::abs(d) < 1e-300) throw PoleError("scalar prefactor pole", z);
  return identity(p) * (poly(r.num, z) / d);
}

CMat eval_symbol(const SymbolExpr& s, cplx z) {
  CMat m = identity(s.p);
  for (auto& x : s.items) m = m * eval_primitive(x, s.p, z);
  if (s.exponent == 1) return m;
  return mat_pow(m, s.exponent);
}

cplx det_symbol(const SymbolExpr& s, cplx z) {
  cplx d = 1.0;
  for (auto& x : s.items) {
    if (auto* f = std::get_if<ElementaryFactor>(&x))
      d *= det_factor(*f, z);
    else
      d *= det(eval_primitive(x, s.p, z));
  }
  return std::pow(d, s.exponent);
}

namespace {

std::vector<cplx> poly_roots(std::vector<double> c) {
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i] / c[n];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
  std::vector<cplx> r;
  for (int i = 0; i < n; ++i) r.push_back(es.eigenvalues()(i));
  return r;
}

}  // namespace

std::vector<cplx> singular_points(const SymbolExpr& s) {
  std::vector<cplx> out;
  for (auto& x : s.items) {
    if (auto* f = std::get_if<ElementaryFactor>(&x)) {
      for (auto z : factor_poles(*f)) out.push_back(z);
      for (auto z : factor_det_zeros(*f)) out.push_back(z);
    } else if (auto* zp = std::get_if<ZPow>(&x)) {
      if (zp->k != 0) out.push_back(0.0);
    } else if (auto* sp = std::get_if<ShiftPow>(&x)) {
      if (sp->k != 0) out.push_back(0.0);
    } else if (auto* r = std::get_if<ScalarRational>(&x)) {
      for (auto z : poly_roots(r->num)) out.push_back(z);
      for (auto z : poly_roots(r->den)) out.push_back(z);
    }
  }
  return out;
}

std::vector<CMat> fourier_range(const MatFn& f, int p, int kmin, int kmax, double radius,
                                int nodes) {
  std::vector<CMat> out(kmax - kmin + 1, CMat::Zero(p, p));
  for (int j = 0; j < nodes; ++j) {
    const double th = 2.0 * std::numbers::pi * j / nodes;
    const cplx u = std::polar(1.0, th);
    const CMat v = f(radius * u);
    // z^{-k} = r^{-k} u^{-k}
    cplx zk = std::pow(radius * u, -kmin);
    const cplx step = 1.0 / (radius * u);
    for (int k = kmin; k <= kmax; ++k) {
      out[k - kmin] += v * zk;
      zk *= step;
    }
  }
  for (auto& m : out) m /= static_cast<double>(nodes);
  return out;
}

namespace {

void check_circle(const SymbolExpr& s, double radius) {
  for (auto z : singular_points(s)) {
    if (std::abs(std::abs(z) - radius) < 1e-9 * std::max(1.0, radius))
      throw ContourError("contour of radius " + std::to_string(radius) +
                         " passes through a singular point");
  }
}

}  // namespace

CMat fourier_block(const SymbolExpr& s, int k, double radius, int nodes) {
  check_circle(s, radius);
  return fourier_range([&](cplx z) { return eval_symbol(s, z); }, s.p, k, k, radius, nodes)[0];
}

namespace {

double winding_at(const std::function<cplx(cplx)>& d, double radius, int nodes, double& min_abs,
                  double& max_abs_v) {
  double total = 0.0;
  cplx prev = d(radius);
  min_abs = max_abs_v = std::abs(prev);
  for (int j = 1; j <= nodes; ++j) {
    const cplx cur = d(std::polar(radius, 2.0 * std::numbers::pi * j / nodes));
    min_abs = std::min(min_abs, std::abs(cur));
    max_abs_v = std::max(max_abs_v, std::abs(cur));
    total += std::arg(cur / prev);
    prev = cur;
  }
  return total / (2.0 * std::numbers::pi);
}

}  // namespace

int winding_number(const std::function<cplx(cplx)>& d, double radius, int nodes) {
  double lo = 0, hi = 0;
  double w = winding_at(d, radius, nodes, lo, hi);
  if (lo < 1e-13 * hi) throw ContourError("determinant near-singular on the contour");
  for (int iter = 0; iter < 8; ++iter) {
    nodes *= 2;
    const double w2 = winding_at(d, radius, nodes, lo, hi);
    const bool agree = std::lround(w) == std::lround(w2);
    w = w2;
    if (agree && std::abs(w - std::lround(w)) < 0.25) return static_cast<int>(std::lround(w));
  }
  throw ConvergenceError("non-integer winding number", std::abs(w - std::lround(w)));
}

int winding_number_det(const SymbolExpr& s, int nodes) {
  check_circle(s, 1.0);
  // winding is additive; long products overflow the dynamic range of det(s) itself
  int total = 0;
  for (auto& x : s.items)
    total += winding_number([&](cplx z) { return det(eval_primitive(x, s.p, z)); }, 1.0, nodes);
  return total * s.exponent;
}

Annulus free_annulus(const std::vector<cplx>& singular) {
  Annulus a{0.0, 1e300};
  for (auto z : singular) {
    const double r = std::abs(z);
    if (r < 1.0) a.rho_inner = std::max(a.rho_inner, r);
    if (r > 1.0) a.rho_outer = std::min(a.rho_outer, r);
    if (r == 1.0) throw ContourError("singular point on the unit circle");
  }
  return a;
}

nlohmann::json to_json(const SymbolExpr& s) {
  nlohmann::json j;
  j["p"] = s.p;
  j["exponent"] = s.exponent;
  j["factors"] = nlohmann::json::array();
  for (auto& x : s.items) {
    nlohmann::json e;
    if (auto* f = std::get_if<ElementaryFactor>(&x)) {
      e["kind"] = kind_name(f->kind);
      e["a"] = f->a;
      e["b"] = f->b;
    } else if (auto* zp = std::get_if<ZPow>(&x)) {
      e["zpow"] = zp->k;
    } else if (auto* sp = std::get_if<ShiftPow>(&x)) {
      e["shift"] = sp->k;
    } else if (auto* c = std::get_if<ConstMat>(&x)) {
      auto arr = nlohmann::json::array();
      for (int r = 0; r < c->m.rows(); ++r)
        for (int q = 0; q < c->m.cols(); ++q) arr.push_back({c->m(r, q).real(), c->m(r, q).imag()});
      e["const"] = arr;
    } else {
      auto& r = std::get<ScalarRational>(x);
      e["rational"] = {{"num", r.num}, {"den", r.den}};
    }
    j["factors"].push_back(e);
  }
  return j;
}

SymbolExpr symbol_from_json(const nlohmann::json& j) {
  SymbolExpr s(j.at("p").get<int>());
  if (s.p < 1) throw Error("symbol period must be >= 1");
  s.exponent = j.value("exponent", 1);
  for (auto& e : j.at("factors")) {
    if (e.contains("kind")) {
      s.push(make_factor(kind_from_name(e.at("kind").get<std::string>()), e.at("a").get<RVec>(),
                         e.value("b", RVec{})));
    } else if (e.contains("zpow")) {
      s.push(ZPow{e.at("zpow").get<int>()});
    } else if (e.contains("shift")) {
      s.push(ShiftPow{e.at("shift").get<int>()});
    } else if (e.contains("const")) {
      const auto& arr = e.at("const");
      if (static_cast<int>(arr.size()) != s.p * s.p) throw Error("constant matrix has wrong size");
      CMat m(s.p, s.p);
      for (int k = 0; k < s.p * s.p; ++k) m(k / s.p, k % s.p) = cplx(arr[k][0], arr[k][1]);
      s.push(ConstMat{m});
    } else if (e.contains("rational")) {
      s.push(ScalarRational{e["rational"].at("num").get<std::vector<double>>(),
                            e["rational"].at("den").get<std::vector<double>>()});
    } else {
      throw Error("unrecognized symbol primitive");
    }
  }
  return s;
}

}  // namespace bdpp
