#include "blockdpp/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "blockdpp/errors.hpp"
#include "blockdpp/wienerhopf.hpp"

namespace bdpp {

SymbolExpr ModelPreset::product() const { return bdpp::product(symbols); }

std::vector<std::string> preset_names() {
  return {"aztec_p1", "aztec_2p", "aztec_3x2", "hexagon_2x2", "schur", "chain"};
}

namespace {

double num(const nlohmann::json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number()) throw UsageError(std::string("parameter ") + key + " must be a number");
  return j.at(key).get<double>();
}

int inum(const nlohmann::json& j, const char* key, int def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number_integer())
    throw UsageError(std::string("parameter ") + key + " must be an integer");
  return j.at(key).get<int>();
}

RVec triple(const nlohmann::json& j, const char* key, const RVec& def) {
  if (!j.contains(key)) return def;
  auto v = j.at(key).get<RVec>();
  if (v.size() != 3) throw ConstraintError(std::string(key) + " must have three entries");
  return v;
}

// make_factor rejects prod(a) = 1 for geometric kinds; the a = 1 Aztec models sit there.
ElementaryFactor boundary_factor(FactorKind k, RVec a, RVec b) {
  if (!is_bernoulli(k) && std::abs(ElementaryFactor{k, a, b}.prod_a() - 1.0) < 1e-12)
    return ElementaryFactor{k, std::move(a), std::move(b)};
  return make_factor(k, std::move(a), std::move(b));
}

SymbolExpr one_factor(ElementaryFactor f) { return single(f); }

void check_a(double a) {
  if (!(a > 0.0 && a <= 1.0)) throw ConstraintError("regularization parameter needs 0 < a <= 1");
}

void check_aztec_admissible(const ModelPreset& m) {
  if (m.a < 1.0 && !check_admissible(m.product(), m.M))
    throw AdmissibilityError("winding mismatch for preset " + m.name);
}

}  // namespace

HexagonParams hexagon_params(const nlohmann::json& params) {
  HexagonParams h;
  h.a = num(params, "a", 1);
  h.b = num(params, "b", 0.1);
  h.c = num(params, "c", 4);
  h.d = num(params, "d", 1);
  h.alpha = num(params, "alpha", 1);
  h.beta = num(params, "beta", 10);
  h.gamma = num(params, "gamma", 0.25);
  h.delta = num(params, "delta", 1);
  return h;
}

ModelPreset preset(const std::string& name, const nlohmann::json& params) {
  ModelPreset m;
  m.name = name;
  m.params = params;
  if (name == "aztec_p1") {
    m.a = num(params, "a", 1.0);
    m.N = inum(params, "N", 2);
    check_a(m.a);
    if (m.N < 1) throw ConstraintError("aztec_p1 needs N >= 1");
    m.p = 1;
    m.M = -m.N;
    m.level_stride = 2;
    for (int k = 0; k < m.N; ++k) {
      m.symbols.push_back(one_factor(make_factor(FactorKind::BernoulliDown, {1.0 / m.a}, {1.0})));
      m.symbols.push_back(one_factor(boundary_factor(FactorKind::GeometricDown, {m.a}, {1.0})));
    }
    check_aztec_admissible(m);
  } else if (name == "aztec_2p") {
    const double al = num(params, "alpha", 2.0), be = num(params, "beta", 0.5);
    m.a = num(params, "a", 1.0);
    m.N = inum(params, "N", 2);
    check_a(m.a);
    if (!(al > 0 && be > 0)) throw ConstraintError("aztec_2p needs alpha, beta > 0");
    if (std::abs(al * be - 1.0) > 1e-12) throw ConstraintError("aztec_2p needs alpha*beta = 1");
    if (m.N < 1) throw ConstraintError("aztec_2p needs N >= 1");
    m.p = 2;
    m.M = -m.N;
    m.level_stride = 4;
    const double a = m.a;
    for (int k = 0; k < m.N; ++k) {
      m.symbols.push_back(one_factor(
          make_factor(FactorKind::BernoulliDown, {be * be / a, al * al / a}, {1, 1})));
      m.symbols.push_back(one_factor(
          boundary_factor(FactorKind::GeometricDown, {be * be * a, al * al * a}, {1, 1})));
      m.symbols.push_back(
          one_factor(make_factor(FactorKind::BernoulliDown, {1 / a, 1 / a}, {1, 1})));
      m.symbols.push_back(one_factor(boundary_factor(FactorKind::GeometricDown, {a, a}, {1, 1})));
    }
    check_aztec_admissible(m);
  } else if (name == "aztec_3x2") {
    const RVec al = triple(params, "alpha", {0.2, 0.7, 1.0 / 0.14});
    const RVec be = triple(params, "beta", {1.0, 1.0, 1.0});
    m.a = num(params, "a", 1.0);
    m.N = inum(params, "N", 1);
    check_a(m.a);
    for (double v : al)
      if (!(v > 0)) throw ConstraintError("aztec_3x2 needs alpha_i > 0");
    for (double v : be)
      if (!(v > 0)) throw ConstraintError("aztec_3x2 needs beta_i > 0");
    if (std::abs(al[0] * al[1] * al[2] - 1.0) > 1e-12)
      throw ConstraintError("aztec_3x2 needs alpha0*alpha1*alpha2 = 1");
    if (std::abs(be[0] * be[1] * be[2] - 1.0) > 1e-12)
      throw ConstraintError("aztec_3x2 needs beta0*beta1*beta2 = 1");
    if (m.N < 1) throw ConstraintError("aztec_3x2 needs N >= 1");
    m.p = 3;
    m.M = -2 * m.N;
    m.level_stride = 12;
    const double a = m.a;
    auto scaled = [](const RVec& v, double s) {
      RVec r = v;
      for (double& x : r) x *= s;
      return r;
    };
    const RVec one{1, 1, 1};
    for (int k = 0; k < 3 * m.N; ++k) {
      m.symbols.push_back(one_factor(make_factor(FactorKind::BernoulliDown, scaled(al, 1 / a), one)));
      m.symbols.push_back(one_factor(boundary_factor(FactorKind::GeometricDown, scaled(al, a), one)));
      m.symbols.push_back(one_factor(make_factor(FactorKind::BernoulliDown, scaled(be, 1 / a), one)));
      m.symbols.push_back(one_factor(boundary_factor(FactorKind::GeometricDown, scaled(be, a), one)));
    }
    check_aztec_admissible(m);
  } else if (name == "hexagon_2x2") {
    const HexagonParams h = hexagon_params(params);
    m.N = inum(params, "N", 2);
    check_hexagon(h);
    if (m.N < 1) throw ConstraintError("hexagon_2x2 needs N >= 1");
    m.p = 2;
    m.M = m.N;
    m.level_stride = 4;
    for (int k = 0; k < 2 * m.N; ++k) {
      m.symbols.push_back(one_factor(hexagon_p1(h)));
      m.symbols.push_back(one_factor(hexagon_p2(h)));
    }
  } else if (name == "schur") {
    const RVec b = params.value("b", RVec{2, 3, 0.5, 0.4});
    const int N = static_cast<int>(b.size());
    if (N < 2 || N % 2) throw ConstraintError("schur needs an even number of parameters");
    for (int k = 0; k < N; ++k)
      if (!(b[k] > 0) || (k < N / 2 ? !(b[k] > 1) : !(b[k] < 1)))
        throw ConstraintError("schur needs b_1..b_{N/2} > 1 > b_{N/2+1}..b_N > 0");
    m.p = 1;
    m.N = N;
    m.M = N / 2;
    for (double v : b) m.symbols.push_back(one_factor(make_factor(FactorKind::BernoulliUp, {v}, {1})));
  } else if (name == "chain") {
    if (!params.contains("symbols") || !params.at("symbols").is_array() ||
        params.at("symbols").empty())
      throw UsageError("chain needs a non-empty symbols array");
    for (auto& s : params.at("symbols")) m.symbols.push_back(symbol_from_json(s));
    m.p = m.symbols.front().p;
    for (auto& s : m.symbols)
      if (s.p != m.p) throw ConstraintError("chain symbols differ in size");
    m.M = inum(params, "M", 0);
    m.N = m.steps();
  } else {
    throw UsageError("unknown preset " + name);
  }
  return m;
}

nlohmann::json to_json(const ModelPreset& m) {
  nlohmann::json syms = nlohmann::json::array();
  for (auto& s : m.symbols) syms.push_back(to_json(s));
  return {{"model", m.name}, {"params", m.params}, {"p", m.p}, {"M", m.M}, {"symbols", syms}};
}

ModelPreset preset_from_json(const nlohmann::json& j) {
  if (!j.contains("model")) throw UsageError("preset file needs a \"model\" field");
  return preset(j.at("model").get<std::string>(), j.value("params", nlohmann::json::object()));
}

// ---------------------------------------------------------------- cylinder events

CylinderResult cylinder_probability(const KernelFn& k, const CylinderEvent& e) {
  if (e.vacant.size() > 20) throw BudgetError("cylinder event with more than 20 vacant sites");
  const int nv = static_cast<int>(e.vacant.size());
  cplx total = 0.0;
  std::vector<Site> sites;
  for (long long mask = 0; mask < (1LL << nv); ++mask) {
    sites = e.occupied;
    int bits = 0;
    for (int i = 0; i < nv; ++i)
      if (mask >> i & 1) {
        sites.push_back(e.vacant[i]);
        ++bits;
      }
    const int n = static_cast<int>(sites.size());
    cplx d = 1.0;
    if (n > 0) {
      CMat K(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) K(i, j) = k(sites[i], sites[j]);
      d = det(K);
    }
    total += (bits % 2 ? -1.0 : 1.0) * d;
  }
  CylinderResult r;
  r.value = total.real();
  r.imag = total.imag();
  r.in_range = r.value >= -1e-8 && r.value <= 1 + 1e-8 && std::abs(r.imag) <= 1e-9;
  return r;
}

// ---------------------------------------------------------------- enumeration

PathGraphInstance finite_instance(const FiniteEnsemble& e, int umin, int umax) {
  PathGraphInstance g;
  g.p = e.p;
  g.symbols = e.symbols;
  for (int j = 0; j < e.p * e.n; ++j) {
    g.starts.push_back(j);
    g.ends.push_back(e.p * e.M + j);
  }
  g.umin = umin;
  g.umax = umax;
  return g;
}

PathGraphInstance aztec_paths(const ModelPreset& m) {
  if (!m.is_aztec()) throw UsageError("aztec_paths needs an Aztec preset");
  PathGraphInstance g;
  const int D = m.diamond();
  g.p = m.p;
  g.symbols = m.symbols;
  for (int j = 0; j < D; ++j) {
    g.starts.push_back(j);
    g.ends.push_back(j - D);
  }
  g.umin = -D;
  g.umax = D - 1;
  // down steps expand in 1/z; |z| = 2 avoids the pole at 1 when a = 1
  g.fourier_radius = 2.0;
  return g;
}

namespace {

struct Transfer {
  int p;
  int span;
  std::vector<std::vector<CMat>> coef;  // coef[m][idx + span]
  double T(int m, int u, int v) const {
    auto [x, r] = split_site(u, p);
    auto [y, s] = split_site(v, p);
    const int d = y - x;
    if (d < -span || d > span) return 0.0;
    return coef[m][d + span](r, s).real();
  }
};

Transfer make_transfer(const PathGraphInstance& g) {
  Transfer t;
  t.p = g.p;
  t.span = (g.umax - g.umin) / g.p + 2;
  for (auto& s : g.symbols) {
    auto c = fourier_range([&s](cplx z) { return eval_symbol(s, z); }, g.p, -t.span, t.span,
                           g.fourier_radius, g.fourier_nodes);
    double big = 0.0;
    for (auto& b : c) big = std::max(big, max_abs(b));
    for (auto& b : c)
      for (int i = 0; i < b.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j)
          if (std::abs(b(i, j)) < 1e-13 * big) b(i, j) = 0.0;
    t.coef.push_back(std::move(c));
  }
  return t;
}

void subsets(int lo, int hi, int k, Config& cur, std::vector<Config>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (int u = lo; u <= hi - (k - static_cast<int>(cur.size()) - 1); ++u) {
    cur.push_back(u);
    subsets(u + 1, hi, k, cur, out);
    cur.pop_back();
  }
}

double transfer_det(const Transfer& t, int m, const Config& a, const Config& b) {
  const int k = static_cast<int>(a.size());
  Eigen::MatrixXd A(k, k);
  bool any = false;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      A(i, j) = t.T(m, a[i], b[j]);
      any = any || A(i, j) != 0.0;
    }
  if (!any) return 0.0;
  if (k == 0) return 1.0;
  // cancellations leave roundoff where the exact determinant vanishes
  double bound = 1.0;
  for (int i = 0; i < k; ++i) bound *= A.row(i).norm();
  const double d = A.partialPivLu().determinant();
  return std::abs(d) <= 1e-11 * bound ? 0.0 : d;
}

}  // namespace

namespace {

struct Lattice {
  struct Edge {
    int to;
    double w;
  };
  std::vector<std::vector<Config>> level;
  std::vector<std::vector<std::vector<Edge>>> out;
  std::vector<std::vector<double>> fwd, bwd, count;
};

Lattice build_lattice(const PathGraphInstance& g, long long budget) {
  const int N = static_cast<int>(g.symbols.size());
  const int K = static_cast<int>(g.starts.size());
  if (N < 1) throw ValidationError("path graph needs at least one step");
  if (static_cast<int>(g.ends.size()) != K) throw ValidationError("start and end counts differ");
  if (!std::is_sorted(g.starts.begin(), g.starts.end()) ||
      !std::is_sorted(g.ends.begin(), g.ends.end()))
    throw ValidationError("start and end points must be increasing");
  const Transfer t = make_transfer(g);

  std::vector<Config> interior;
  {
    Config cur;
    subsets(g.umin, g.umax, K, cur, interior);
  }
  if (static_cast<long long>(interior.size()) > budget)
    throw BudgetError("too many configurations per level");

  Lattice L;
  L.level.resize(N + 1);
  L.out.resize(N);
  L.level[0] = {g.starts};
  long long work = 0;
  for (int m = 1; m <= N; ++m) {
    const std::vector<Config>& cand = m == N ? std::vector<Config>{g.ends} : interior;
    std::vector<int> index(cand.size(), -1);
    L.out[m - 1].assign(L.level[m - 1].size(), {});
    for (size_t i = 0; i < L.level[m - 1].size(); ++i)
      for (size_t j = 0; j < cand.size(); ++j) {
        if (++work > budget) throw BudgetError("path enumeration budget exceeded");
        const double w = transfer_det(t, m - 1, L.level[m - 1][i], cand[j]);
        if (w == 0.0) continue;
        if (index[j] < 0) {
          index[j] = static_cast<int>(L.level[m].size());
          L.level[m].push_back(cand[j]);
        }
        L.out[m - 1][i].push_back({index[j], w});
      }
    if (L.level[m].empty())
      throw ValidationError("no path family reaches level " + std::to_string(m));
  }
  L.count.resize(N + 1);
  L.bwd.resize(N + 1);
  L.count[N].assign(L.level[N].size(), 1.0);
  L.bwd[N].assign(L.level[N].size(), 1.0);
  for (int m = N - 1; m >= 0; --m) {
    L.count[m].assign(L.level[m].size(), 0.0);
    L.bwd[m].assign(L.level[m].size(), 0.0);
    for (size_t i = 0; i < L.level[m].size(); ++i)
      for (auto& e : L.out[m][i]) {
        L.count[m][i] += L.count[m + 1][e.to];
        L.bwd[m][i] += e.w * L.bwd[m + 1][e.to];
      }
  }
  if (L.count[0][0] == 0.0) throw ValidationError("no nonintersecting path family exists");
  L.fwd.resize(N + 1);
  L.fwd[0] = {1.0};
  for (int m = 0; m < N; ++m) {
    L.fwd[m + 1].assign(L.level[m + 1].size(), 0.0);
    for (size_t i = 0; i < L.level[m].size(); ++i)
      for (auto& e : L.out[m][i]) L.fwd[m + 1][e.to] += L.fwd[m][i] * e.w;
  }
  return L;
}

}  // namespace

double for_each_family(const PathGraphInstance& g, const FamilyVisitor& visit, long long budget) {
  const Lattice L = build_lattice(g, budget);
  const int N = static_cast<int>(L.level.size()) - 1;
  if (L.count[0][0] > static_cast<double>(budget))
    throw BudgetError("path family count exceeds budget");
  std::vector<Config> seq(N + 1);
  double Z = 0.0;
  std::function<void(int, int, double)> dfs = [&](int m, int i, double w) {
    seq[m] = L.level[m][i];
    if (m == N) {
      Z += w;
      visit(seq, w);
      return;
    }
    for (auto& e : L.out[m][i])
      if (L.count[m + 1][e.to] > 0) dfs(m + 1, e.to, w * e.w);
  };
  dfs(0, 0, 1.0);
  return Z;
}

double for_each_transition(const PathGraphInstance& g, const TransitionVisitor& visit,
                           long long budget, double* families) {
  const Lattice L = build_lattice(g, budget);
  const int N = static_cast<int>(L.level.size()) - 1;
  const double Z = L.bwd[0][0];
  if (Z == 0.0) throw ValidationError("partition function vanishes");
  for (int m = 0; m < N; ++m)
    for (size_t i = 0; i < L.level[m].size(); ++i)
      for (auto& e : L.out[m][i]) {
        const double pr = L.fwd[m][i] * e.w * L.bwd[m + 1][e.to] / Z;
        if (pr != 0.0) visit(m + 1, L.level[m][i], L.level[m + 1][e.to], pr);
      }
  if (families) *families = L.count[0][0];
  return Z;
}

double CorrelationTable::density(const Site& s) const {
  auto it = rho1.find(s);
  return it == rho1.end() ? 0.0 : it->second;
}

double CorrelationTable::pair(const Site& a, const Site& b) const {
  if (a == b) return density(a);
  auto it = rho2.find(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
  return it == rho2.end() ? 0.0 : it->second;
}

CorrelationTable enumerate_measure(const PathGraphInstance& g, bool pairs, long long budget) {
  CorrelationTable t;
  if (!pairs) {
    double fam = 0.0;
    t.Z = for_each_transition(
        g,
        [&](int step, const Config& from, const Config& to, double pr) {
          if (step == 1)
            for (int u : from) t.rho1[{0, u}] += pr;
          for (int u : to) t.rho1[{step, u}] += pr;
        },
        budget, &fam);
    t.families = static_cast<long long>(fam);
    return t;
  }
  std::vector<Site> sites;
  t.Z = for_each_family(
      g,
      [&](const std::vector<Config>& seq, double w) {
        ++t.families;
        sites.clear();
        for (int m = 0; m < static_cast<int>(seq.size()); ++m)
          for (int u : seq[m]) sites.push_back({m, u});
        for (auto& s : sites) t.rho1[s] += w;
        for (size_t i = 0; i < sites.size(); ++i)
          for (size_t j = i + 1; j < sites.size(); ++j) t.rho2[{sites[i], sites[j]}] += w;
      },
      budget);
  for (auto& [k, v] : t.rho1) v /= t.Z;
  for (auto& [k, v] : t.rho2) v /= t.Z;
  return t;
}

// ---------------------------------------------------------------- Aztec tiles

std::string tile_name(TileKind k) {
  switch (k) {
    case TileKind::West: return "west";
    case TileKind::South: return "south";
    case TileKind::East: return "east";
    case TileKind::WestOrSouth: return "west_or_south";
  }
  return "";
}

TileKind tile_from_name(const std::string& s) {
  for (auto k : {TileKind::West, TileKind::South, TileKind::East, TileKind::WestOrSouth})
    if (tile_name(k) == s) return k;
  throw UsageError("unknown tile kind " + s);
}

TileEvent tile_event(const ModelPreset& m, TileKind kind, int step, int h) {
  if (!m.is_aztec()) throw UsageError("tile events are defined for Aztec presets");
  const int D = m.diamond();
  if (step < 1 || step > 2 * D || h < 0 || h > D - 1)
    throw ValidationError("tile position outside the diamond");
  const bool odd = step % 2 == 1;
  if (odd == (kind == TileKind::East))
    throw ValidationError(tile_name(kind) + " tiles sit on " + (odd ? "even" : "odd") + " steps");
  auto occ = [](int m, int u) { return CylinderEvent{{{m, u}}, {}}; };
  TileEvent e;
  if (kind == TileKind::WestOrSouth || kind == TileKind::West)
    e.terms.push_back({1.0, occ(step - 1, h)});
  if (kind == TileKind::WestOrSouth) return e;
  // expected number of paths crossing from h to h - 1 during this step
  const double s = kind == TileKind::West ? -1.0 : 1.0;
  for (int u = h; u <= D - 1; ++u) {
    e.terms.push_back({s, occ(step - 1, u)});
    e.terms.push_back({-s, occ(step, u)});
  }
  return e;
}

double tile_probability(const KernelFn& k, const TileEvent& e) {
  double r = 0.0;
  for (auto& [c, ev] : e.terms) r += c * cylinder_probability(k, ev).value;
  return r;
}

TileTable enumerate_tiles(const ModelPreset& m, long long budget) {
  const PathGraphInstance g = aztec_paths(m);
  TileTable t;
  for_each_transition(
      g,
      [&](int step, const Config& from, const Config& to, double pr) {
        for (size_t i = 0; i < from.size(); ++i) {
          const int u = from[i], v = to[i];
          if (step % 2 == 1) {
            if (v != u && v != u - 1) throw ValidationError("odd Aztec step moved by more than one");
            if (u < 0) continue;
            t[{v == u ? TileKind::West : TileKind::South, step, u}] += pr;
            t[{TileKind::WestOrSouth, step, u}] += pr;
          } else {
            if (v > u) throw ValidationError("even Aztec step moved up");
            for (int h = std::max(v + 1, 0); h <= u; ++h) t[{TileKind::East, step, h}] += pr;
          }
        }
      },
      budget);
  return t;
}

KernelFn AztecFiniteKernel::fn() const {
  return [this](const Site& a, const Site& b) {
    return fk.entry(a.m, a.u + shift, b.m, b.u + shift);
  };
}

AztecFiniteKernel aztec_finite_kernel(const ModelPreset& m, int corridor_depth) {
  if (!m.is_aztec()) throw UsageError("aztec_finite_kernel needs an Aztec preset");
  const int D = m.diamond();
  const int n = D / m.p + corridor_depth;
  FiniteEnsemble e{m.p, n, m.M, m.symbols};
  // at a = 1 the steps have a pole on the unit circle; their transition
  // weights are the expansion at infinity, read off on |z| = 2
  const double radius = m.a < 1.0 ? 1.0 : 2.0;
  return AztecFiniteKernel{FiniteKernel(std::move(e), 2048, radius), m.p * n - D};
}

KernelFn aztec_top_fn(const ContourKernel& k, int D, int level_stride) {
  return [&k, D, level_stride](const Site& a, const Site& b) {
    if (a.m % level_stride || b.m % level_stride)
      throw ValidationError("closed-form kernel is only available every " +
                            std::to_string(level_stride) + " steps");
    return k.entry(a.m / level_stride, a.u - D, b.m / level_stride, b.u - D);
  };
}

// ---------------------------------------------------------------- density grids

double DensityGrid::at(int m, int u) const {
  if (m < win.m0 || m > win.m1 || u < win.u0 || u > win.u1)
    throw ValidationError("site outside the density window");
  return values[(u - win.u0) * (win.m1 - win.m0 + 1) + (m - win.m0)];
}

namespace {

nlohmann::json contour_meta(const ContourKernel& k) {
  const auto c = [](const Contour& x) {
    return nlohmann::json{{"center", {x.center.real(), x.center.imag()}}, {"radius", x.radius}};
  };
  const auto& s = k.spec();
  return {{"kernel", s.name}, {"z_contour", c(s.zc)}, {"w_contour", c(s.wc)},
          {"single_contour", c(s.sc)}, {"tol", s.tol}, {"max_nodes", s.max_nodes}};
}

}  // namespace

ModelKernel model_kernel(const ModelPreset& m, const std::string& method, const KernelOptions& opt,
                         int finite_n) {
  if (method != "auto" && method != "closed" && method != "generic" && method != "finite")
    throw UsageError("unknown kernel method " + method);
  ModelKernel out;
  out.level_stride = m.level_stride;
  out.levels = m.steps() / m.level_stride;
  const int D = m.diamond(), levels = out.levels;
  if (m.is_aztec()) {
    out.in_range = [D, levels](int l, int u) { return l > 0 && l < levels && u >= 0 && u < D; };
  } else {
    out.in_range = [levels](int l, int) { return l >= 0 && l <= levels; };
  }
  const bool has_closed = m.name == "aztec_p1" || m.name == "hexagon_2x2" ||
                          ((m.name == "aztec_2p" || m.name == "aztec_3x2") && m.a == 1.0);
  std::string how = method;
  if (how == "auto") how = has_closed ? "closed" : "generic";
  if (how == "closed" && !has_closed)
    throw UsageError("no closed-form kernel for " + m.name + " with these parameters");
  out.method = how;
  std::shared_ptr<ContourKernel> ck;
  if (how == "finite") {
    if (m.is_aztec()) {
      auto fk = std::make_shared<AztecFiniteKernel>(aztec_finite_kernel(m));
      out.fn = [fk](const Site& a, const Site& b) { return fk->fn()(a, b); };
      out.meta = {{"kernel", "finite"}, {"n", fk->fk.ensemble().n}, {"shift", fk->shift}};
    } else {
      auto fk = std::make_shared<FiniteKernel>(FiniteEnsemble{m.p, finite_n, m.M, m.symbols});
      out.fn = [fk](const Site& a, const Site& b) { return fk->entry(a.m, a.u, b.m, b.u); };
      out.meta = {{"kernel", "finite"}, {"n", finite_n}, {"aliasing", fk->aliasing_estimate()}};
    }
    return out;
  }
  int stride = 1;  // steps per unit of the contour kernel's level index
  if (how == "closed") {
    stride = m.level_stride;
    if (m.name == "aztec_p1") {
      ck = std::make_shared<ContourKernel>(aztec_p1_kernel(m.a, m.N, opt));
    } else if (m.name == "aztec_2p") {
      ck = std::make_shared<ContourKernel>(aztec_2p_kernel(
          m.params.value("alpha", 2.0), m.params.value("beta", 0.5), m.N, opt));
    } else if (m.name == "aztec_3x2") {
      const auto t = three_by_two_factors(m.params.value("alpha", RVec{0.2, 0.7, 1.0 / 0.14}),
                                          m.params.value("beta", RVec{1.0, 1.0, 1.0}));
      ck = std::make_shared<ContourKernel>(aztec_3x2_kernel(t, m.N, opt));
    } else {
      ck = std::make_shared<ContourKernel>(hexagon_2x2_kernel(hexagon_params(m.params), m.N, opt));
    }
  } else if (m.is_aztec()) {
    if (m.a >= 1.0) throw UsageError("the generic top kernel needs a < 1");
    const auto f = factorize(m.product(), m.M, WHVariant::MinusPlus);
    ck = std::make_shared<ContourKernel>(kernel_top(m.symbols, f, opt));
  } else {
    const auto f = factorize(m.product(), m.M, WHVariant::PlusMinus);
    ck = std::make_shared<ContourKernel>(kernel_bottom(m.symbols, f, opt));
  }
  out.meta = contour_meta(*ck);
  if (m.is_aztec()) {
    auto k = aztec_top_fn(*ck, D, stride);
    out.fn = [ck, k](const Site& a, const Site& b) { return k(a, b); };
  } else {
    out.fn = [ck, stride](const Site& a, const Site& b) {
      if (a.m % stride || b.m % stride)
        throw ValidationError("closed-form kernel is only available every " +
                              std::to_string(stride) + " steps");
      return ck->entry(a.m / stride, a.u, b.m / stride, b.u);
    };
  }
  return out;
}

DensityGrid density_grid(const std::function<double(int, int)>& rho, const DensityWindow& w,
                         const std::function<bool(int, int)>& in_range) {
  if (w.m1 < w.m0 || w.u1 < w.u0) throw UsageError("empty query window");
  DensityGrid g;
  g.win = w;
  int outside = 0, out_of_range = 0;
  for (int u = w.u0; u <= w.u1; ++u)
    for (int m = w.m0; m <= w.m1; ++m) {
      const double v = rho(m, u);
      const bool bad = !std::isfinite(v) || v < -1e-8 || v > 1 + 1e-8;
      const bool oor = in_range && !in_range(m, u);
      outside += bad;
      out_of_range += oor;
      g.values.push_back(v);
      g.flagged.push_back(bad || oor);
    }
  g.meta = {{"window", {w.m0, w.m1, w.u0, w.u1}},
            {"outside_unit_interval", outside},
            {"out_of_stated_range", out_of_range}};
  return g;
}

void write_csv(const DensityGrid& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << "m,u,density,flagged\n";
  f.precision(17);
  for (int u = g.win.u0; u <= g.win.u1; ++u)
    for (int m = g.win.m0; m <= g.win.m1; ++m) {
      const size_t i = (u - g.win.u0) * (g.win.m1 - g.win.m0 + 1) + (m - g.win.m0);
      f << m << ',' << u << ',' << g.values[i] << ',' << (g.flagged[i] ? 1 : 0) << '\n';
    }
}

DensityGrid read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read " + path);
  std::string line;
  std::getline(f, line);
  struct Row {
    int m, u;
    double v;
    bool flag;
  };
  std::vector<Row> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    Row r{};
    char c;
    int flag = 0;
    is >> r.m >> c >> r.u >> c >> r.v >> c >> flag;
    if (!is) throw ValidationError("malformed density CSV line: " + line);
    r.flag = flag != 0;
    rows.push_back(r);
  }
  if (rows.empty()) throw ValidationError("empty density CSV");
  DensityGrid g;
  g.win = {rows.front().m, rows.front().m, rows.front().u, rows.front().u};
  for (auto& r : rows) {
    g.win.m0 = std::min(g.win.m0, r.m);
    g.win.m1 = std::max(g.win.m1, r.m);
    g.win.u0 = std::min(g.win.u0, r.u);
    g.win.u1 = std::max(g.win.u1, r.u);
  }
  const int W = g.win.m1 - g.win.m0 + 1;
  g.values.assign(rows.size(), 0.0);
  g.flagged.assign(rows.size(), false);
  for (auto& r : rows) {
    const size_t i = (r.u - g.win.u0) * W + (r.m - g.win.m0);
    if (i >= g.values.size()) throw ValidationError("density CSV is not a full grid");
    g.values[i] = r.v;
    g.flagged[i] = r.flag;
  }
  return g;
}

void write_pgm(const DensityGrid& g, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  const int W = g.win.m1 - g.win.m0 + 1, H = g.win.u1 - g.win.u0 + 1;
  f << "P5\n" << W << ' ' << H << "\n255\n";
  for (int u = g.win.u1; u >= g.win.u0; --u)
    for (int m = g.win.m0; m <= g.win.m1; ++m) {
      const double x = g.at(m, u);
      const double v = std::isfinite(x) ? std::clamp(x, 0.0, 1.0) : 0.0;
      f.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
}

}  // namespace bdpp
