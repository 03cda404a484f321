#include "blockdpp/switching.hpp"

#include "blockdpp/errors.hpp"

namespace bdpp {

RVec sigma(const RVec& v, int k) {
  const int p = static_cast<int>(v.size());
  RVec out(p);
  for (int i = 0; i < p; ++i) out[i] = v[(((i + k) % p) + p) % p];
  return out;
}

RVec recip(const RVec& v) {
  RVec out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = 1.0 / v[i];
  return out;
}

RVec hadamard(const RVec& u, const RVec& v) {
  RVec out(u.size());
  for (size_t i = 0; i < u.size(); ++i) out[i] = u[i] * v[i];
  return out;
}

namespace {

int md(int i, int p) { return ((i % p) + p) % p; }

void check_pair(const RVec& a, const RVec& b) {
  if (a.size() != b.size() || a.empty()) throw Error("switch parameters must share p >= 1");
}

}  // namespace

std::vector<double> eta_k(const RVec& a, const RVec& b) {
  check_pair(a, b);
  const int p = static_cast<int>(a.size());
  std::vector<double> k(p, 0.0);
  for (int i = 0; i < p; ++i) {
    for (int j = i; j <= i + p - 1; ++j) {
      double t = 1.0;
      for (int l = i + 1; l <= j; ++l) t *= b[md(l, p)];
      for (int l = j + 1; l <= i + p - 1; ++l) t *= a[md(l, p)];
      k[i] += t;
    }
  }
  return k;
}

std::pair<RVec, RVec> eta_map(const RVec& a, const RVec& b) {
  const auto k = eta_k(a, b);
  const int p = static_cast<int>(a.size());
  RVec bp(p), ap(p);
  for (int i = 0; i < p; ++i) {
    bp[i] = b[md(i + 1, p)] * k[md(i + 1, p)] / k[i];
    ap[i] = a[md(i - 1, p)] * k[md(i - 1, p)] / k[i];
  }
  return {bp, ap};
}

std::pair<RVec, RVec> eta_curl_map(const RVec& a, const RVec& b) {
  // M(b)M(a) = M(a'')M(b'') inverts to N(a)N(b) = N(b'')N(a'')
  auto [a2, b2] = eta_map(b, a);
  return {b2, a2};
}

std::pair<RVec, RVec> theta_map(const RVec& a, const RVec& b) {
  check_pair(a, b);
  const int p = static_cast<int>(a.size());
  RVec bp(p), ap(p);
  for (int i = 0; i < p; ++i) {
    const double r = (a[i] + b[i]) / (a[md(i + 1, p)] + b[md(i + 1, p)]);
    bp[i] = b[md(i + 1, p)] * r;
    ap[i] = a[md(i + 1, p)] * r;
  }
  return {bp, ap};
}

std::pair<RVec, RVec> theta_inverse(const RVec& e, const RVec& f) {
  check_pair(e, f);
  const int p = static_cast<int>(e.size());
  // a_i + b_i = a'_i + b'_i is invariant under theta
  RVec s(p), a(p), b(p);
  for (int i = 0; i < p; ++i) s[i] = e[i] + f[i];
  for (int i = 0; i < p; ++i) {
    const double r = s[i] / s[md(i - 1, p)];
    b[i] = e[md(i - 1, p)] * r;
    a[i] = f[md(i - 1, p)] * r;
  }
  return {a, b};
}

namespace {

CMat up2(const std::array<double, 4>& v, cplx z) {
  CMat m(2, 2);
  m << v[0], v[1], v[2] * z, v[3];
  return m;
}

CMat down2(const std::array<double, 4>& v, cplx z) {
  CMat m(2, 2);
  m << v[0], v[1] / z, v[2], v[3];
  return m;
}

}  // namespace

P2Switch p2_switch(P2Rule rule, const P2Factors& in) {
  const auto [a, b, c, d] = in.left;
  const auto [al, be, ga, de] = in.right;
  P2Switch r;
  switch (rule) {
    case P2Rule::MixedDownUp: {
      const double x = (a * al + b * ga) / (d * de + be * c);
      r.x = x;
      r.out.left = {de * x, be, ga, al / x};
      r.out.right = {d, b / x, x * c, a};
      break;
    }
    case P2Rule::UpUp:
    case P2Rule::DownDown: {
      const double x = (a * be + b * de) / (c * al + d * ga);
      r.x = x;
      r.out.left = {al, ga * x, be / x, de};
      r.out.right = {a, c * x, b / x, d};
      break;
    }
  }
  return r;
}

CMat p2_eval_left(P2Rule rule, const P2Factors& f, cplx z, bool switched) {
  if (rule == P2Rule::UpUp) return up2(f.left, z);
  if (rule == P2Rule::DownDown) return down2(f.left, z);
  return switched ? up2(f.left, z) : down2(f.left, z);
}

CMat p2_eval_right(P2Rule rule, const P2Factors& f, cplx z, bool switched) {
  if (rule == P2Rule::UpUp) return up2(f.right, z);
  if (rule == P2Rule::DownDown) return down2(f.right, z);
  return switched ? down2(f.right, z) : up2(f.right, z);
}

SymbolExpr dualize(const ElementaryFactor& f, DualSide side) {
  const int p = f.p();
  const RVec ai = recip(f.a);
  const RVec ones(p, 1.0);
  SymbolExpr s(p);
  if (f.kind == FactorKind::BernoulliDown) {
    ElementaryFactor m{FactorKind::BernoulliUp, ai, ones};
    if (side == DualSide::Left) {
      s.push(m).push(ShiftPow{1}).push(ConstMat{diag_b(hadamard(f.a, f.b))});
    } else {
      ElementaryFactor mb{FactorKind::BernoulliUp, ai, f.b};
      s.push(ConstMat{diag_b(sigma(f.a, -1))}).push(ShiftPow{1}).push(mb);
    }
    return s;
  }
  if (f.kind == FactorKind::GeometricDown) {
    ElementaryFactor n{FactorKind::GeometricUp, ai, ones};
    if (side == DualSide::Left) {
      s.push(ConstMat{-identity(p)}).push(n).push(ShiftPow{-1});
      s.push(ConstMat{diag_b(hadamard(sigma(ai, -1), f.b))});
    } else {
      ElementaryFactor nb{FactorKind::GeometricUp, ai, f.b};
      s.push(ConstMat{-diag_b(ai)}).push(ShiftPow{-1}).push(nb);
    }
    return s;
  }
  throw Error("dualize expects a down factor, got " + kind_name(f.kind));
}

namespace {

bool is_whirl(FactorKind k) { return is_bernoulli(k); }

// c^b_i = c_i b_i / b_{i+1}: B(b) F(c) = F(c^b) B(b)
RVec gauge(const RVec& c, const RVec& b) {
  const int p = static_cast<int>(c.size());
  RVec out(p);
  for (int i = 0; i < p; ++i) out[i] = c[i] * b[i] / b[md(i + 1, p)];
  return out;
}

RVec gauge_inv(const RVec& c, const RVec& b) {
  const int p = static_cast<int>(c.size());
  RVec out(p);
  for (int i = 0; i < p; ++i) out[i] = c[i] * b[md(i + 1, p)] / b[i];
  return out;
}

// F(a)G(e) = G(e')F(a') for pure whirls/curls; returns (e', a').
std::pair<RVec, RVec> core_switch(bool f_whirl, const RVec& a, bool g_whirl, const RVec& e) {
  if (f_whirl && g_whirl) return eta_map(a, e);
  if (!f_whirl && !g_whirl) return eta_curl_map(a, e);
  if (f_whirl && !g_whirl) return theta_map(a, e);
  return theta_inverse(a, e);
}

struct UpForm {
  bool whirl;
  RVec c;
  RVec d;
  double sign;
  int k;
};

UpForm to_up(const ElementaryFactor& f) {
  switch (f.kind) {
    case FactorKind::BernoulliUp:
      return {true, f.a, f.b, 1.0, 0};
    case FactorKind::GeometricUp:
      return {false, f.a, f.b, 1.0, 0};
    case FactorKind::BernoulliDown:
      return {true, recip(f.a), sigma(hadamard(f.a, f.b), -1), 1.0, 1};
    case FactorKind::GeometricDown:
      return {false, recip(f.a), hadamard(recip(f.a), sigma(f.b, 1)), -1.0, -1};
  }
  throw Error("bad kind");
}

ElementaryFactor from_up(FactorKind kind, const RVec& e, const RVec& f) {
  switch (kind) {
    case FactorKind::BernoulliUp:
    case FactorKind::GeometricUp:
      return {kind, e, f};
    case FactorKind::BernoulliDown:
      return {kind, recip(e), hadamard(sigma(f, 1), e)};
    case FactorKind::GeometricDown: {
      RVec q(e.size());
      for (size_t i = 0; i < e.size(); ++i) q[i] = f[i] / e[i];
      return {kind, recip(e), sigma(q, -1)};
    }
  }
  throw Error("bad kind");
}

// Up-up switch of X = F(a)B(b), Y = G(c)B(d).
std::pair<UpForm, UpForm> switch_up(const UpForm& x, const UpForm& y) {
  const RVec e = gauge(y.c, x.d);
  auto [e2, a2] = core_switch(x.whirl, x.c, y.whirl, e);
  const int p = static_cast<int>(a2.size());
  RVec g(p);
  for (int i = 0; i < p; ++i) g[i] = a2[i] * y.d[md(i + 1, p)] / y.d[i];
  UpForm ny{y.whirl, e2, y.d, y.sign, y.k};
  UpForm nx{x.whirl, g, x.d, x.sign, x.k};
  return {ny, nx};
}

UpForm conj_shift(const UpForm& u, int k) {
  // S^k V(a) = V(sigma^{-k} a) S^k
  UpForm r = u;
  r.c = sigma(u.c, -k);
  r.d = sigma(u.d, -k);
  return r;
}

}  // namespace

SwitchResult switch_pair(const ElementaryFactor& left, const ElementaryFactor& right) {
  if (left.p() != right.p()) throw Error("switch_pair: factors have different p");
  const int p = left.p();
  if (p == 1) return {right, left, {}};

  const bool lu = is_up(left.kind), ru = is_up(right.kind);
  if (lu && ru) {
    UpForm x{is_whirl(left.kind), left.a, left.b, 1.0, 0};
    UpForm y{is_whirl(right.kind), right.a, right.b, 1.0, 0};
    auto [ny, nx] = switch_up(x, y);
    return {ElementaryFactor{right.kind, ny.c, ny.d}, ElementaryFactor{left.kind, nx.c, nx.d},
            eta_k(left.a, gauge(right.a, left.b))};
  }
  if (!lu && !ru) {
    // transpose of the up switch G(c'')F(a) = F(a*)G(c*)
    const RVec c2 = gauge_inv(right.a, left.b);
    auto [a_star, c_star] = core_switch(is_whirl(right.kind), c2, is_whirl(left.kind), left.a);
    RVec g(p);
    for (int i = 0; i < p; ++i) g[i] = a_star[i] * right.b[i] / right.b[md(i + 1, p)];
    return {ElementaryFactor{right.kind, c_star, right.b}, ElementaryFactor{left.kind, g, left.b},
            c2};
  }
  // mixed: X Y = s u_x u_y^{sigma^{-kx}} S^{kx+ky}
  const UpForm ux = to_up(left), uy = to_up(right);
  const UpForm uy2 = conj_shift(uy, ux.k);
  auto [vy, vx] = switch_up(ux, uy2);
  UpForm wx = conj_shift(vx, -uy.k);
  return {from_up(right.kind, vy.c, vy.d), from_up(left.kind, wx.c, wx.d), {}};
}

nlohmann::json to_json(const SwitchResult& r) {
  nlohmann::json j;
  j["left"] = {{"kind", kind_name(r.left.kind)}, {"a", r.left.a}, {"b", r.left.b}};
  j["right"] = {{"kind", kind_name(r.right.kind)}, {"a", r.right.a}, {"b", r.right.b}};
  j["aux"] = r.aux;
  return j;
}

}  // namespace bdpp
