#include "blockdpp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "blockdpp/errors.hpp"
#include "blockdpp/switching.hpp"

namespace bdpp {

std::pair<int, int> split_site(int u, int p) {
  int r = u % p;
  if (r < 0) r += p;
  return {(u - r) / p, r};
}

CMat level_product(const std::vector<SymbolExpr>& symbols, int k, int l, cplx z) {
  if (symbols.empty()) throw ValidationError("empty symbol list");
  CMat r = identity(symbols.front().p);
  for (int m = k + 1; m <= l; ++m) r = r * eval_symbol(symbols.at(m - 1), z);
  return r;
}

namespace {

cplx ipow(cplx z, int k) { return k >= 0 ? std::pow(z, k) : 1.0 / std::pow(z, -k); }

void check_levels(int m, int mp, int N) {
  if (m < 0 || m > N || mp < 0 || mp > N)
    throw ValidationError("level outside 0..N: m=" + std::to_string(m) +
                          " m'=" + std::to_string(mp));
}

}  // namespace

// ---------------------------------------------------------------- finite kernel

FiniteKernel::FiniteKernel(FiniteEnsemble e, int nodes, double radius)
    : e_(std::move(e)), nodes_(nodes), radius_(radius) {
  if (!(radius_ > 0)) throw ContourError("Fourier radius must be positive");
  if (e_.symbols.empty()) throw ValidationError("finite ensemble needs at least one symbol");
  if (e_.n < 1) throw ValidationError("finite ensemble needs n >= 1");
  for (auto& s : e_.symbols)
    if (s.p != e_.p) throw ValidationError("symbol size differs from p");
  z_.resize(nodes_);
  for (int k = 0; k < nodes_; ++k) z_[k] = std::polar(radius_, 2.0 * std::numbers::pi * k / nodes_);

  const int p = e_.p, n = e_.n, N = e_.N();
  G_ = CMat::Zero(p * n, p * n);
  CMat Ghalf = G_;
  const auto& vals = node_values(0, N);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      const int idx = e_.M + n + 1 - i - j;
      G_.block((i - 1) * p, (j - 1) * p, p, p) = coefficient(0, N, idx);
      Ghalf.block((i - 1) * p, (j - 1) * p, p, p) = coefficient_with(vals, idx, 2);
    }
  alias_ = max_abs(G_ - Ghalf);
  Eigen::FullPivLU<CMat> lu(G_);
  if (!lu.isInvertible()) throw ValidationError("moment matrix G is singular");
  Ginv_ = lu.inverse();
  detG_ = lu.determinant();
}

const std::vector<CMat>& FiniteKernel::node_values(int k, int l) const {
  if (k >= l) {
    k = 0;
    l = 0;
  }
  auto key = std::make_pair(k, l);
  auto it = vals_.find(key);
  if (it != vals_.end()) return it->second;
  std::vector<CMat> v(nodes_);
  if (l == 0) {
    for (auto& x : v) x = identity(e_.p);
  } else {
    const auto& prev = node_values(k, l - 1);
    for (int i = 0; i < nodes_; ++i) v[i] = prev[i] * eval_symbol(e_.symbols[l - 1], z_[i]);
  }
  return vals_.emplace(key, std::move(v)).first->second;
}

CMat FiniteKernel::coefficient_with(const std::vector<CMat>& vals, int j, int stride) const {
  using lcplx = std::complex<long double>;
  const int n = nodes_ / stride, p = e_.p;
  // long double accumulation: G is ill conditioned for long chains
  std::vector<lcplx> acc(p * p, 0.0L);
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  for (int i = 0; i < n; ++i) {
    const long long t = (static_cast<long long>(-j) * i) % n;
    const long double th = two_pi * static_cast<long double>(t) / n;
    const lcplx e(std::cos(th), std::sin(th));
    const CMat& v = vals[i * stride];
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c) acc[r * p + c] += lcplx(v(r, c)) * e;
  }
  CMat out(p, p);
  const long double scale = std::pow(static_cast<long double>(radius_), -j) / n;
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) out(r, c) = cplx(acc[r * p + c] * scale);
  return out;
}

const CMat& FiniteKernel::coefficient(int k, int l, int j) const {
  if (k >= l) {
    k = 0;
    l = 0;
  }
  auto key = std::make_tuple(k, l, j);
  auto it = coef_.find(key);
  if (it != coef_.end()) return it->second;
  return coef_.emplace(key, coefficient_with(node_values(k, l), j, 1)).first->second;
}

CMat FiniteKernel::cd_kernel(cplx z, cplx w) const {
  const int p = e_.p, n = e_.n;
  CMat r = CMat::Zero(p, p);
  for (int k = 1; k <= n; ++k)
    for (int l = 1; l <= n; ++l)
      r += ipow(w, k - 1) * ipow(z, l - 1) * Ginv_.block((k - 1) * p, (l - 1) * p, p, p);
  return r;
}

CMat FiniteKernel::block(const Query& q) const {
  const int p = e_.p, n = e_.n, N = e_.N();
  check_levels(q.m, q.mp, N);
  CMat r = CMat::Zero(p, p);
  if (q.m > q.mp) r -= coefficient(q.mp, q.m, q.x - q.xp);
  for (int k = 1; k <= n; ++k) {
    const CMat& left = coefficient(q.mp, N, e_.M + n - k - q.xp);
    CMat inner = CMat::Zero(p, p);
    for (int l = 1; l <= n; ++l)
      inner += Ginv_.block((k - 1) * p, (l - 1) * p, p, p) * coefficient(0, q.m, q.x + 1 - l);
    r += left * inner;
  }
  return r;
}

cplx FiniteKernel::entry(int m, int u, int mp, int up) const {
  auto [x, r] = split_site(u, e_.p);
  auto [xp, rp] = split_site(up, e_.p);
  return block({m, x, mp, xp})(rp, r);
}

double reproducing_residual(const FiniteKernel& fk, int k, cplx z, int nodes) {
  const auto& e = fk.ensemble();
  std::vector<cplx> w, wt;
  circle_nodes({0.0, fk.radius(), nodes}, nodes, w, wt);
  CMat acc = CMat::Zero(e.p, e.p);
  for (int j = 0; j < nodes; ++j)
    acc += ipow(w[j], k - e.M - e.n) * level_product(e.symbols, 0, e.N(), w[j]) *
           fk.cd_kernel(z, w[j]) * wt[j];
  const cplx zk = ipow(z, k);
  return max_abs(acc - zk * identity(e.p)) / std::abs(zk);
}

// ---------------------------------------------------------------- contour engine

ContourKernel::ContourKernel(ContourKernelSpec s) : s_(std::move(s)) {
  if (!s_.left || !s_.right) throw ValidationError("contour kernel needs left and right factors");
  check_separated(s_.zc, s_.wc);
}

const ContourKernel::Grid& ContourKernel::grid(int n) const {
  auto it = grids_.find(n);
  if (it != grids_.end()) return it->second;
  Grid g;
  circle_nodes(s_.zc, n, g.z, g.zwt);
  circle_nodes(s_.wc, n, g.w, g.wwt);
  circle_nodes(s_.sc, n, g.s, g.swt);
  return grids_.emplace(n, std::move(g)).first->second;
}

const std::vector<CMat>& ContourKernel::left_at(int mp, int n) const {
  auto key = std::make_pair(mp, n);
  auto it = left_.find(key);
  if (it != left_.end()) return it->second;
  const Grid& g = grid(n);
  std::vector<CMat> v(n);
  for (int j = 0; j < n; ++j) v[j] = s_.left(mp, g.w[j]);
  return left_.emplace(key, std::move(v)).first->second;
}

const std::vector<CMat>& ContourKernel::right_at(int m, int n) const {
  auto key = std::make_pair(m, n);
  auto it = right_.find(key);
  if (it != right_.end()) return it->second;
  const Grid& g = grid(n);
  std::vector<CMat> v(n);
  for (int j = 0; j < n; ++j) v[j] = s_.right(m, g.z[j]);
  return right_.emplace(key, std::move(v)).first->second;
}

CMat ContourKernel::double_term(const Query& q, int n) const {
  const Grid& g = grid(n);
  const auto& L = left_at(q.mp, n);
  const auto& R = right_at(q.m, n);
  std::vector<cplx> wf(n);
  for (int j = 0; j < n; ++j) wf[j] = ipow(g.w[j], q.xp + s_.w_shift) * g.wwt[j];
  CMat acc = CMat::Zero(s_.p, s_.p);
  CMat T(s_.p, s_.p);
  for (int i = 0; i < n; ++i) {
    T.setZero();
    for (int j = 0; j < n; ++j) T += L[j] * (wf[j] / (g.z[i] - g.w[j]));
    acc += T * R[i] * (ipow(g.z[i], -(q.x + s_.z_shift + 1)) * g.zwt[i]);
  }
  return s_.sign * acc;
}

CMat ContourKernel::single_term(const Query& q, int n) const {
  if (q.m <= q.mp || !s_.single) return CMat::Zero(s_.p, s_.p);
  const Grid& g = grid(n);
  auto key = std::make_tuple(q.mp, q.m, n);
  auto it = single_.find(key);
  if (it == single_.end()) {
    std::vector<CMat> v(n);
    for (int j = 0; j < n; ++j) v[j] = s_.single(q.mp, q.m, g.s[j]);
    it = single_.emplace(key, std::move(v)).first;
  }
  CMat acc = CMat::Zero(s_.p, s_.p);
  for (int j = 0; j < n; ++j)
    acc += it->second[j] * (ipow(g.s[j], q.xp - q.x - 1) * g.swt[j]);
  return -acc;
}

CMat ContourKernel::block(const Query& q) const {
  int n = s_.min_nodes;
  CMat prev = single_term(q, n) + double_term(q, n);
  double delta = 0.0, before = INFINITY;
  while (2 * n <= s_.max_nodes) {
    n *= 2;
    CMat cur = single_term(q, n) + double_term(q, n);
    delta = max_abs(cur - prev) / std::max(1.0, max_abs(cur));
    // trapezoid errors decay geometrically, so a stalled delta is roundoff
    const bool floor = delta < 1e-7 && delta > 0.25 * before;
    before = delta;
    if (delta < s_.tol || floor) {
      last_nodes_ = n;
      last_delta_ = delta;
      return cur;
    }
    prev = std::move(cur);
  }
  throw ConvergenceError(s_.name + " kernel did not converge, last delta " +
                             std::to_string(delta),
                         delta);
}

cplx ContourKernel::entry(int m, int u, int mp, int up) const {
  auto [x, r] = split_site(u, s_.p);
  auto [xp, rp] = split_site(up, s_.p);
  return block({m, x, mp, xp})(rp, r);
}

// ---------------------------------------------------------------- generic kernels

namespace {

Annulus symbols_annulus(const std::vector<SymbolExpr>& symbols, const WHFactorization& f) {
  std::vector<cplx> sing;
  for (auto& s : symbols) {
    auto v = singular_points(s);
    sing.insert(sing.end(), v.begin(), v.end());
  }
  for (auto* s : {&f.plus, &f.minus}) {
    auto v = singular_points(*s);
    sing.insert(sing.end(), v.begin(), v.end());
  }
  return free_annulus(sing);
}

std::pair<double, double> annulus_radii(const Annulus& a, const KernelOptions& opt) {
  const double rin = opt.r_inner.value_or(1.0 - 0.3 * (1.0 - a.rho_inner));
  const double rout = opt.r_outer.value_or(1.0 + 0.3 * std::min(a.rho_outer - 1.0, 1.0));
  if (!(rin > a.rho_inner && rin < rout && rout < a.rho_outer))
    throw ContourError("kernel radii must satisfy rho_inner < r_inner < r_outer < rho_outer");
  return {rin, rout};
}

// phi = A B with constant matrices at the junction, A = A0 Ca and B = Cb B0.
// Returns A0, B0 and K = Ca Cb; switching can make Ca and Cb badly conditioned
// while K stays tame, and B^{-1}(w) A^{-1}(z) = B0^{-1}(w) K^{-1} A0^{-1}(z).
struct Junction {
  SymbolExpr A0, B0;
  CMat K;
};

Junction junction(const SymbolExpr& A, const SymbolExpr& B) {
  const SymbolExpr a = flatten(A), b = flatten(B);
  Junction j{SymbolExpr(a.p), SymbolExpr(b.p), identity(a.p)};
  auto is_const = [](const Primitive& x) { return std::holds_alternative<ConstMat>(x); };
  auto movable = [&](const Primitive& x) {
    return is_const(x) || std::holds_alternative<ZPow>(x);
  };
  size_t ea = a.items.size();
  while (ea > 0 && movable(a.items[ea - 1])) --ea;
  CMat Ca = identity(a.p);
  for (size_t i = 0; i < a.items.size(); ++i) {
    if (i >= ea && is_const(a.items[i]))
      Ca = Ca * std::get<ConstMat>(a.items[i]).m;
    else
      j.A0.push(a.items[i]);
  }
  size_t sb = 0;
  while (sb < b.items.size() && movable(b.items[sb])) ++sb;
  CMat Cb = identity(b.p);
  for (size_t i = 0; i < b.items.size(); ++i) {
    if (i < sb && is_const(b.items[i]))
      Cb = Cb * std::get<ConstMat>(b.items[i]).m;
    else
      j.B0.push(b.items[i]);
  }
  j.K = Ca * Cb;
  return j;
}

void apply(ContourKernelSpec& s, const KernelOptions& opt) {
  s.tol = opt.tol;
  s.min_nodes = opt.min_nodes;
  s.max_nodes = opt.max_nodes;
}

}  // namespace

ContourKernel kernel_bottom(const std::vector<SymbolExpr>& symbols, const WHFactorization& f,
                            const KernelOptions& opt) {
  if (f.variant != WHVariant::PlusMinus)
    throw ValidationError("kernel_bottom needs a plus_minus factorization");
  auto [rin, rout] = annulus_radii(symbols_annulus(symbols, f), opt);
  const int N = static_cast<int>(symbols.size());
  ContourKernelSpec s;
  s.name = "bottom";
  s.p = f.plus.p;
  const Junction j = junction(f.plus, f.minus);
  s.left = [symbols, B0 = j.B0, Ki = inverse(j.K), N](int mp, cplx w) -> CMat {
    return level_product(symbols, mp, N, w) * inverse(eval_symbol(B0, w)) * Ki;
  };
  s.right = [symbols, A0 = j.A0](int m, cplx z) -> CMat {
    return inverse(eval_symbol(A0, z)) * level_product(symbols, 0, m, z);
  };
  s.single = [symbols](int mp, int m, cplx z) -> CMat { return level_product(symbols, mp, m, z); };
  s.zc = {0.0, rin};
  s.wc = {0.0, rout};
  s.sc = {0.0, 1.0};
  s.sign = -1.0;
  apply(s, opt);
  return ContourKernel(std::move(s));
}

ContourKernel kernel_top(const std::vector<SymbolExpr>& symbols, const WHFactorization& f,
                         const KernelOptions& opt) {
  if (f.variant != WHVariant::MinusPlus)
    throw ValidationError("kernel_top needs a minus_plus factorization");
  auto [rin, rout] = annulus_radii(symbols_annulus(symbols, f), opt);
  const int N = static_cast<int>(symbols.size());
  ContourKernelSpec s;
  s.name = "top";
  s.p = f.plus.p;
  const Junction j = junction(f.minus, f.plus);
  s.left = [symbols, B0 = j.B0, Ki = inverse(j.K), N](int mp, cplx w) -> CMat {
    return level_product(symbols, mp, N, w) * inverse(eval_symbol(B0, w)) * Ki;
  };
  s.right = [symbols, A0 = j.A0](int m, cplx z) -> CMat {
    return inverse(eval_symbol(A0, z)) * level_product(symbols, 0, m, z);
  };
  s.single = [symbols](int mp, int m, cplx z) -> CMat { return level_product(symbols, mp, m, z); };
  s.zc = {0.0, rout};
  s.wc = {0.0, rin};
  s.sc = {0.0, 1.0};
  s.sign = 1.0;
  s.w_shift = -f.M;
  s.z_shift = -f.M;
  apply(s, opt);
  return ContourKernel(std::move(s));
}

// ---------------------------------------------------------------- Aztec, p = 1

ContourKernel aztec_p1_kernel(double a, int N, const KernelOptions& opt) {
  if (!(a > 0.0 && a <= 1.0)) throw ConstraintError("aztec_p1 needs 0 < a <= 1");
  if (N < 1) throw ConstraintError("aztec_p1 needs N >= 1");
  ContourKernelSpec s;
  s.name = "aztec_p1";
  s.p = 1;
  s.left = [a, N](int mp, cplx w) -> CMat {
    return CMat::Constant(1, 1, std::pow(a, mp) * ipow(w - a, mp - N) / ipow(a * w + 1.0, mp));
  };
  s.right = [a, N](int m, cplx z) -> CMat {
    return CMat::Constant(1, 1, std::pow(a, -m) * ipow(a * z + 1.0, m) / ipow(z - a, m - N));
  };
  s.single = [a](int mp, int m, cplx z) -> CMat {
    return CMat::Constant(1, 1, std::pow(a, mp - m) * ipow((a * z + 1.0) / (z - a), m - mp));
  };
  // w and the single term on gamma_int around 0 and 1, z on gamma_ext around
  // it, -1 outside both
  s.wc = {0.5, opt.r_inner.value_or(0.9)};
  s.zc = {0.5, opt.r_outer.value_or(1.3)};
  s.sc = s.wc;
  if (std::abs(-1.0 - s.zc.center) <= s.zc.radius || s.wc.radius <= 0.5 ||
      s.zc.radius <= s.wc.radius)
    throw ContourError("aztec_p1 contours must enclose 0 and 1 and keep -1 outside");
  s.sign = 1.0;
  s.w_shift = N;
  s.z_shift = N;
  apply(s, opt);
  return ContourKernel(std::move(s));
}

// ---------------------------------------------------------------- two-periodic Aztec

CMat TwoPeriodic::Phi(cplx z) const {
  CMat q(2, 2), r(2, 2);
  q << 1.0, alpha * alpha / z, beta * beta, 1.0;
  r << 1.0, 1.0 / z, 1.0, 1.0;
  const cplx pre = 1.0 / ((1.0 - 1.0 / z) * (1.0 - 1.0 / z));
  return pre * (q * q * r * r);
}

std::pair<cplx, cplx> TwoPeriodic::rho(cplx z) const {
  const double x = alpha * alpha + beta * beta;
  const double disc = std::sqrt(x * x / 4.0 - 1.0);
  const double r1 = -x / 2.0 + disc, r2 = -x / 2.0 - disc;
  const cplx root = std::sqrt(z) * std::sqrt(z - r1) * std::sqrt(z - r2);
  const cplx base = (z + 1.0) * (z + 1.0) + 2.0 * z * x;
  const cplx den = (z - 1.0) * (z - 1.0);
  const cplx t = 2.0 * (alpha + beta) * root;
  return {(base + t) / den, (base - t) / den};
}

CMat TwoPeriodic::projector(cplx z) const {
  auto [r1, r2] = rho(z);
  return (Phi(z) - r2 * identity(2)) / (r1 - r2);
}

ContourKernel aztec_2p_kernel(double alpha, double beta, int N, const KernelOptions& opt) {
  if (!(alpha > 0 && beta > 0)) throw ConstraintError("aztec_2p needs alpha, beta > 0");
  if (std::abs(alpha * beta - 1.0) > 1e-12) throw ConstraintError("aztec_2p needs alpha*beta = 1");
  if (N < 2 || N % 2) throw ConstraintError("aztec_2p needs N even and positive");
  const TwoPeriodic tp{alpha, beta};
  ContourKernelSpec s;
  s.name = "aztec_2p";
  s.p = 2;
  s.left = [tp, N](int mp, cplx w) -> CMat {
    auto [r1, r2] = tp.rho(w);
    (void)r2;
    return ipow(r1, N / 2 - mp) * ipow(1.0 - 1.0 / w, -N) * tp.projector(w);
  };
  s.right = [tp, N](int m, cplx z) -> CMat {
    return ipow(1.0 - 1.0 / z, N) * mat_pow(tp.Phi(z), m - N / 2);
  };
  s.single = [tp](int mp, int m, cplx z) -> CMat { return mat_pow(tp.Phi(z), m - mp); };
  s.wc = {1.0, opt.r_inner.value_or(0.25)};
  s.zc = {0.0, opt.r_outer.value_or(2.0)};
  s.sc = s.zc;
  // the cuts of the square root lie on the negative real axis
  if (s.wc.radius >= 1.0) throw ContourError("gamma_1 must stay clear of the branch cuts");
  s.sign = 1.0;
  apply(s, opt);
  return ContourKernel(std::move(s));
}

// ---------------------------------------------------------------- 3x2 Aztec

namespace {

CMat eval_chain(const std::vector<ElementaryFactor>& fs, cplx z) {
  CMat r = identity(fs.front().p());
  for (auto& f : fs) r = r * eval_factor(f, z);
  return r;
}

}  // namespace

CMat ThreeByTwoFactors::evalA(cplx z) const { return eval_chain(A, z); }
CMat ThreeByTwoFactors::evalB(cplx z) const { return eval_chain(B, z); }

CMat ThreeByTwoFactors::evalPhi(cplx z) const {
  const RVec one{1, 1, 1};
  // prod alpha = 1 sits on the boundary make_factor rejects
  return eval_chain({{FactorKind::BernoulliDown, alpha, one},
                     {FactorKind::GeometricDown, alpha, one},
                     {FactorKind::BernoulliDown, beta, one},
                     {FactorKind::GeometricDown, beta, one}},
                    z);
}

ThreeByTwoFactors three_by_two_factors(const RVec& alpha, const RVec& beta) {
  if (alpha.size() != 3 || beta.size() != 3) throw ConstraintError("3x2 needs parameter triples");
  for (double v : alpha)
    if (!(v > 0)) throw ConstraintError("3x2 needs positive alpha");
  for (double v : beta)
    if (!(v > 0)) throw ConstraintError("3x2 needs positive beta");
  if (std::abs(alpha[0] * alpha[1] * alpha[2] - 1.0) > 1e-12)
    throw ConstraintError("3x2 needs alpha0*alpha1*alpha2 = 1");
  if (std::abs(beta[0] * beta[1] * beta[2] - 1.0) > 1e-12)
    throw ConstraintError("3x2 needs beta0*beta1*beta2 = 1");

  ThreeByTwoFactors t;
  t.alpha = alpha;
  t.beta = beta;
  const RVec& al = alpha;
  const RVec& be = beta;
  const double c0 = (al[0] + be[0]) / (al[2] + be[2]);
  const double c1 = (al[1] + be[1]) / (al[0] + be[0]);
  const double c2 = (al[2] + be[2]) / (al[1] + be[1]);
  t.c = {c0, c1, c2};

  const RVec one{1, 1, 1};
  SymbolExpr phi(3);
  phi.push(ElementaryFactor{FactorKind::BernoulliDown, al, one});
  phi.push(ElementaryFactor{FactorKind::GeometricDown, al, one});
  phi.push(ElementaryFactor{FactorKind::BernoulliDown, be, one});
  phi.push(ElementaryFactor{FactorKind::GeometricDown, be, one});
  phi.exponent = 3;
  // at a = 1 every product of parameters equals 1, so the region is fixed by kind
  auto orbit = detect_orbit(phi, WHVariant::MinusPlus, 64, [](const ElementaryFactor& f) {
    return f.kind == FactorKind::BernoulliDown;
  });
  if (!orbit) throw ValidationError("3x2 switching orbit not found");
  t.A = orbit->minus_block;
  t.B = orbit->plus_block;

  auto nd = [&](RVec a) { return ElementaryFactor{FactorKind::GeometricDown, std::move(a), one}; };
  auto md = [&](RVec a) { return ElementaryFactor{FactorKind::BernoulliDown, std::move(a), one}; };
  t.A_printed = {nd({al[0], al[1], al[2]}),
                 nd({be[2] * c0, be[0] * c1, be[1] * c2}),
                 nd({al[2] * c0, al[0] * c1, al[1] * c2}),
                 nd({be[1] * c2 * c0, be[2] * c0 * c1, be[0] * c1 * c0}),
                 nd({al[1] * c2 * c0, al[2] * c0 * c1, al[0] * c1 * c0}),
                 nd({be[0], be[1], be[2]})};
  t.B_printed = {md({al[0], al[1], al[2]}),
                 md({be[1] * c2 * c0, be[2] * c0 * c1, be[0] * c1 * c0}),
                 md({al[1] * c2 * c0, al[2] * c0 * c1, al[0] * c1 * c0}),
                 md({be[2] * c0, be[0] * c1, be[1] * c2}),
                 md({al[2] * c0, al[0] * c1, al[1] * c2}),
                 md({be[0], be[1], be[2]})};

  auto compare = [&](const char* name, const std::vector<ElementaryFactor>& gen,
                     const std::vector<ElementaryFactor>& pr) {
    if (gen.size() != pr.size()) {
      t.discrepancies.push_back(std::string(name) + ": factor count differs");
      return;
    }
    for (size_t i = 0; i < gen.size(); ++i) {
      if (gen[i].kind != pr[i].kind) {
        t.discrepancies.push_back(std::string(name) + "[" + std::to_string(i + 1) +
                                  "]: kind differs");
        continue;
      }
      for (int j = 0; j < 3; ++j) {
        const double g = gen[i].a[j], q = pr[i].a[j];
        if (std::abs(g - q) > 1e-9 * std::max(1.0, std::abs(g))) {
          std::ostringstream os;
          os.precision(12);
          os << name << "[" << i + 1 << "] parameter " << j << ": printed " << q
             << ", regenerated " << g;
          t.discrepancies.push_back(os.str());
        }
      }
    }
  };
  compare("A", t.A, t.A_printed);
  compare("B", t.B, t.B_printed);
  return t;
}

double three_by_two_identity_residual(const ThreeByTwoFactors& t, int k, int samples,
                                      unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> rad(0.5, 2.0), ang(0.0, 2.0 * std::numbers::pi);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const cplx z = std::polar(rad(rng), ang(rng));
    const CMat lhs = mat_pow(t.evalPhi(z), 3 * k);
    const CMat rhs = mat_pow(t.evalA(z), k) * mat_pow(t.evalB(z), k);
    worst = std::max(worst, rel_diff(rhs, lhs));
  }
  return worst;
}

nlohmann::json to_json(const ThreeByTwoFactors& t) {
  auto list = [](const std::vector<ElementaryFactor>& fs) {
    nlohmann::json a = nlohmann::json::array();
    for (auto& f : fs) a.push_back({{"kind", kind_name(f.kind)}, {"a", f.a}, {"b", f.b}});
    return a;
  };
  return {{"alpha", t.alpha},
          {"beta", t.beta},
          {"c", t.c},
          {"A", list(t.A)},
          {"B", list(t.B)},
          {"A_printed", list(t.A_printed)},
          {"B_printed", list(t.B_printed)},
          {"discrepancies", t.discrepancies}};
}

ContourKernel aztec_3x2_kernel(const ThreeByTwoFactors& t, int N, const KernelOptions& opt) {
  if (N < 1) throw ConstraintError("aztec_3x2 needs N >= 1");
  ContourKernelSpec s;
  s.name = "aztec_3x2";
  s.p = 3;
  s.left = [t, N](int mp, cplx w) -> CMat {
    return mat_pow(t.evalA(w), N - mp) * mat_pow(t.evalB(w), -mp);
  };
  s.right = [t, N](int m, cplx z) -> CMat {
    return mat_pow(t.evalA(z), m - N) * mat_pow(t.evalB(z), m);
  };
  s.single = [t](int mp, int m, cplx z) -> CMat {
    return mat_pow(t.evalA(z), m - mp) * mat_pow(t.evalB(z), m - mp);
  };
  s.wc = {0.5, opt.r_inner.value_or(0.9)};
  s.zc = {0.5, opt.r_outer.value_or(1.3)};
  s.sc = s.wc;
  if (std::abs(-1.0 - s.zc.center) <= s.zc.radius || s.wc.radius <= 0.5)
    throw ContourError("aztec_3x2 contours must enclose 0 and 1 and keep -1 outside");
  s.sign = 1.0;
  apply(s, opt);
  return ContourKernel(std::move(s));
}

// ---------------------------------------------------------------- hexagon

void check_hexagon(const HexagonParams& h) {
  for (double v : {h.a, h.b, h.c, h.d, h.alpha, h.beta, h.gamma, h.delta})
    if (!(v > 0)) throw ConstraintError("hexagon weights must be positive");
  const double r1 = h.b * h.c / (h.a * h.d);
  const double r2 = h.beta * h.gamma / (h.alpha * h.delta);
  if (std::abs(r1 - r2) <= 1e-12 * std::max(r1, r2))
    throw ConstraintError("hexagon needs bc/ad != beta*gamma/(alpha*delta)");
  if ((r1 - 1.0) * (r2 - 1.0) >= 0.0)
    throw ConstraintError(
        "hexagon needs bc/ad and beta*gamma/(alpha*delta) on opposite sides of 1");
}

ElementaryFactor hexagon_p1(const HexagonParams& h) {
  return make_factor(FactorKind::BernoulliUp, {h.b / h.d, h.c / h.a}, {h.a, h.d});
}

ElementaryFactor hexagon_p2(const HexagonParams& h) {
  return make_factor(FactorKind::BernoulliUp, {h.beta / h.delta, h.gamma / h.alpha},
                     {h.alpha, h.delta});
}

namespace {

CMat mat2(cplx a, cplx b, cplx c, cplx d) {
  CMat m(2, 2);
  m << a, b, c, d;
  return m;
}

CMat dhalf(double t) { return mat2(std::sqrt(t), 0.0, 0.0, 1.0 / std::sqrt(t)); }

}  // namespace

HexagonAB hexagon_ab(const HexagonParams& h) {
  check_hexagon(h);
  const double a = h.a, b = h.b, c = h.c, d = h.d;
  const double al = h.alpha, be = h.beta, ga = h.gamma, de = h.delta;
  HexagonAB r;
  r.standard_regime = b * c / (a * d) > 1.0;
  r.y_printed = (d * ga + c * de) / (b * al + a * be);
  auto P1 = [=](cplx z) { return mat2(a, b, c * z, d); };
  auto P2 = [=](cplx z) { return mat2(al, be, ga * z, de); };
  if (r.standard_regime) {
    r.x = (a * be + b * de) / (c * al + d * ga);
    r.y = (a * ga + c * de) / (b * al + d * be);
    const CMat Dx = dhalf(r.x), Dy = dhalf(r.y), Dxi = inverse(Dx), Dyi = inverse(Dy);
    r.A = [=](cplx z) { return CMat(Dx * mat2(al, ga, be * z, de) * Dy * P2(z)); };
    r.B = [=](cplx z) { return CMat(P1(z) * Dyi * mat2(a, c, b * z, d) * Dxi); };
  } else {
    r.x = (al * b + be * d) / (ga * a + de * c);
    r.y = (al * c + ga * d) / (be * a + de * b);
    const CMat Dx = dhalf(r.x), Dy = dhalf(r.y), Dxi = inverse(Dx), Dyi = inverse(Dy);
    r.A = [=](cplx z) { return CMat(P1(z) * Dx * mat2(a, c, b * z, d) * Dy); };
    r.B = [=](cplx z) { return CMat(Dyi * mat2(al, ga, be * z, de) * Dxi * P2(z)); };
  }
  return r;
}

ContourKernel hexagon_2x2_kernel(const HexagonParams& h, int N, const KernelOptions& opt) {
  if (N < 1) throw ConstraintError("hexagon needs N >= 1");
  const HexagonAB ab = hexagon_ab(h);
  const double zero1 = h.a * h.d / (h.b * h.c);
  const double zero2 = h.alpha * h.delta / (h.beta * h.gamma);
  // det B vanishes inside the unit disk, det A outside
  const double s_minus = ab.standard_regime ? zero1 : zero2;
  const double s_plus = ab.standard_regime ? zero2 : zero1;
  ContourKernelSpec s;
  s.name = "hexagon_2x2";
  s.p = 2;
  auto A = ab.A, B = ab.B;
  s.left = [A, B, N](int mp, cplx w) -> CMat { return mat_pow(A(w), N - mp) * mat_pow(B(w), -mp); };
  s.right = [A, B, N](int m, cplx z) -> CMat { return mat_pow(A(z), m - N) * mat_pow(B(z), m); };
  s.single = [A, B](int mp, int m, cplx z) -> CMat { return mat_pow(A(z) * B(z), m - mp); };
  const double rz = opt.r_inner.value_or(0.5 * s_plus);
  const double rw = opt.r_outer.value_or(1.5 * std::max(rz, s_minus));
  if (!(rz < s_plus && rw > rz && rw > s_minus))
    throw ContourError("hexagon contours: need r_z < zero of det A and r_w > r_z, zero of det B");
  s.zc = {0.0, rz};
  s.wc = {0.0, rw};
  s.sc = {0.0, 1.0};
  s.sign = -1.0;
  apply(s, opt);
  return ContourKernel(std::move(s));
}

// ---------------------------------------------------------------- Schur cross-check

cplx schur_kernel(const RVec& xs, const RVec& ys, int ih, int jh) {
  double xmax = 0.0, ymax = 0.0;
  for (double v : xs) xmax = std::max(xmax, v);
  for (double v : ys) ymax = std::max(ymax, v);
  if (xmax >= 1.0 || ymax >= 1.0) throw ConstraintError("Schur specializations must be < 1");
  const double hi = xmax > 0 ? 1.0 / xmax : 2.0;
  const double lo = ymax;
  auto J = [xs, ys](cplx z) {
    cplx r = 1.0;
    for (double y : ys) r *= 1.0 - y / z;
    for (double x : xs) r /= 1.0 - x * z;
    return r;
  };
  auto left = [J, jh](cplx w) -> CMat { return CMat::Constant(1, 1, ipow(w, jh) / J(w)); };
  auto right = [J, ih](cplx z) -> CMat { return CMat::Constant(1, 1, J(z) * ipow(z, -ih - 1)); };
  const Contour zc{0.0, lo + 2.0 * (hi - lo) / 3.0, 64}, wc{0.0, lo + (hi - lo) / 3.0, 64};
  return double_integral_sep(left, right, zc, wc, {1e-13, 1 << 13}).value(0, 0);
}

SchurCheck schur_crosscheck(const RVec& b, int xmax) {
  const int N = static_cast<int>(b.size());
  if (N < 2 || N % 2) throw ConstraintError("Schur cross-check needs N even");
  for (int k = 0; k < N; ++k) {
    const bool first = k < N / 2;
    if (!(b[k] > 0) || (first && !(b[k] > 1.0)) || (!first && !(b[k] < 1.0)))
      throw ConstraintError("Schur cross-check needs b_1..b_{N/2} > 1 > b_{N/2+1}..b_N > 0");
  }
  std::vector<SymbolExpr> symbols;
  SymbolExpr phi(1);
  RVec xs, ys;
  for (int k = 0; k < N; ++k) {
    auto f = make_factor(FactorKind::BernoulliUp, {b[k]}, {1.0});
    symbols.push_back(single(f));
    phi.push(f);
    if (k < N / 2)
      ys.push_back(1.0 / b[k]);
    else
      xs.push_back(b[k]);
  }
  const auto f = factorize(phi, N / 2, WHVariant::PlusMinus);
  const ContourKernel K = kernel_bottom(symbols, f);
  ContourKernelSpec swapped = K.spec();
  std::swap(swapped.zc, swapped.wc);
  const ContourKernel Ks(swapped);
  const int m = N / 2;
  SchurCheck r;
  for (int x = -xmax; x <= xmax; ++x)
    for (int xp = -xmax; xp <= xmax; ++xp) {
      const cplx k = K.block({m, x, m, xp})(0, 0);
      const double sgn = ((xp - x) % 2 == 0) ? 1.0 : -1.0;
      const double dl = x == xp ? 1.0 : 0.0;
      const cplx ks = schur_kernel(xs, ys, x - N / 2, xp - N / 2);
      r.residual = std::max(r.residual, std::abs(sgn * k - dl + ks));
      const cplx k2 = Ks.block({m, x, m, xp})(0, 0);
      r.deformation_residual = std::max(r.deformation_residual, std::abs(k - k2 - dl));
    }
  return r;
}

}  // namespace bdpp
