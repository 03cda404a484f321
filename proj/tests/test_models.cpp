#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "blockdpp/errors.hpp"
#include "blockdpp/models.hpp"

using namespace bdpp;
using K = FactorKind;

namespace {

double max_tile_error(const ModelPreset& m, const KernelFn& k, const TileTable& tiles) {
  double e = 0;
  for (const auto& [key, pe] : tiles) {
    const auto [kind, step, h] = key;
    if (h >= m.diamond()) continue;
    e = std::max(e, std::abs(tile_probability(k, tile_event(m, kind, step, h)) - pe));
  }
  return e;
}

std::vector<SymbolExpr> p2_chain() {
  return {single(make_factor(K::BernoulliUp, {1.5, 0.6}, {1.0, 1.2})),
          single(make_factor(K::BernoulliDown, {0.8, 1.7}, {0.9, 1.1})),
          single(make_factor(K::BernoulliUp, {0.7, 2.0}, {1.0, 1.0})),
          single(make_factor(K::BernoulliDown, {1.2, 0.5}, {1.4, 0.8}))};
}

}  // namespace

TEST_CASE("presets") {
  CHECK(preset_names().size() == 6);
  const auto m = preset("aztec_2p", {{"a", 0.9}, {"N", 3}});
  CHECK(m.p == 2);
  CHECK(m.M == -3);
  CHECK(m.diamond() == 6);
  CHECK(m.steps() == 12);
  const auto back = preset_from_json(to_json(m));
  CHECK(to_json(back) == to_json(m));
  CHECK(preset("schur", nlohmann::json::object()).M == 2);
  CHECK(preset("hexagon_2x2", {{"N", 3}}).M == 3);
  CHECK_THROWS_AS(preset("aztec_2p", {{"alpha", 2.0}, {"beta", 2.0}}), ConstraintError);
  CHECK_THROWS_AS(preset("aztec_p1", {{"a", 1.5}}), ConstraintError);
  CHECK_THROWS_AS(preset("schur", {{"b", {0.5, 2.0}}}), ConstraintError);
  CHECK_THROWS_AS(preset("aztec_p1", {{"N", "two"}}), UsageError);
  CHECK_THROWS_AS(preset("dragon", nlohmann::json::object()), UsageError);
}

TEST_CASE("order-1 Aztec diamond: two tilings of probability 1/2") {
  const auto m = preset("aztec_p1", {{"N", 1}});
  double families = 0;
  const double Z = for_each_transition(aztec_paths(m), [](int, const Config&, const Config&, double) {}, 1000, &families);
  CHECK(families == 2);
  CHECK(Z == doctest::Approx(2.0));
  const auto t = enumerate_tiles(m);
  CHECK(t.at({TileKind::West, 1, 0}) == doctest::Approx(0.5));
  CHECK(t.at({TileKind::South, 1, 0}) == doctest::Approx(0.5));
  CHECK(t.at({TileKind::East, 2, 0}) == doctest::Approx(0.5));
}

TEST_CASE("single path with two up steps") {
  PathGraphInstance g;
  g.symbols = {single(make_factor(K::BernoulliUp, {1.0})), single(make_factor(K::BernoulliUp, {1.0}))};
  g.starts = {0};
  g.ends = {1};
  g.umin = 0;
  g.umax = 2;
  const auto t = enumerate_measure(g);
  CHECK(t.families == 2);
  CHECK(t.density({1, 1}) == doctest::Approx(0.5));
  CHECK(t.density({1, 0}) == doctest::Approx(0.5));
}

TEST_CASE("finite kernel matches exhaustive enumeration on a p = 2 chain") {
  const FiniteEnsemble e{2, 2, 0, p2_chain()};
  const auto table = enumerate_measure(finite_instance(e, -5, 8), true);
  CHECK(table.families == 105);
  const FiniteKernel fk(e);
  double e1 = 0, e2 = 0;
  for (int m = 0; m <= 4; ++m) {
    double mass = 0;
    for (int u = -5; u <= 8; ++u) {
      const cplx k = fk.entry(m, u, m, u);
      e1 = std::max(e1, std::abs(k - table.density({m, u})));
      mass += k.real();
      for (int v = u + 1; v <= 8; ++v) {
        const cplx d = k * fk.entry(m, v, m, v) - fk.entry(m, u, m, v) * fk.entry(m, v, m, u);
        e2 = std::max(e2, std::abs(d - table.pair({m, u}, {m, v})));
      }
    }
    CHECK(mass == doctest::Approx(4.0).epsilon(1e-12));
  }
  CHECK(e1 < 1e-10);
  CHECK(e2 < 1e-10);
}

TEST_CASE("two-periodic order-4 diamond") {
  const auto m = preset("aztec_2p", {{"N", 2}});
  double families = 0;
  const double Z = for_each_transition(aztec_paths(m), [](int, const Config&, const Config&, double) {},
                                       100'000'000, &families);
  CHECK(families == 65536);
  CHECK(Z == doctest::Approx(390625.0));
  const auto tiles = enumerate_tiles(m);
  // frozen from the enumeration
  const double ws[4] = {0.8, 0.2, 0.8, 0.2};
  const auto kc = aztec_2p_kernel(2.0, 0.5, 2);
  const auto K = aztec_top_fn(kc, 4, 4);
  for (int h = 0; h < 4; ++h) {
    CHECK(tiles.at({TileKind::WestOrSouth, 5, h}) == doctest::Approx(ws[h]).epsilon(1e-12));
    CHECK(tile_probability(K, tile_event(m, TileKind::WestOrSouth, 5, h)) ==
          doctest::Approx(ws[h]).epsilon(1e-9));
  }
  CHECK(tiles.at({TileKind::East, 2, 2}) == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(tiles.at({TileKind::South, 7, 1}) == doctest::Approx(0.36).epsilon(1e-12));
  const auto fk = aztec_finite_kernel(m);
  CHECK(max_tile_error(m, fk.fn(), tiles) < 1e-8);
}

TEST_CASE("corridor depth does not change the diamond") {
  const auto m = preset("aztec_2p", {{"N", 2}});
  const auto k0 = aztec_finite_kernel(m, 0), k1 = aztec_finite_kernel(m, 1),
             k2 = aztec_finite_kernel(m, 2);
  const auto f0 = k0.fn(), f1 = k1.fn(), f2 = k2.fn();
  double e = 0;
  for (int a = 0; a <= 8; ++a)
    for (int b = 0; b <= 8; b += 2)
      for (int u = 0; u < 4; ++u)
        for (int v = 0; v < 4; ++v) {
          const cplx x = f0({a, u}, {b, v});
          e = std::max({e, std::abs(f1({a, u}, {b, v}) - x), std::abs(f2({a, u}, {b, v}) - x)});
        }
  CHECK(e < 1e-8);
}

TEST_CASE("p = 1 Aztec: finite, closed-form and generic kernels against enumeration") {
  const auto m = preset("aztec_p1", {{"N", 2}, {"a", 0.5}});
  const auto tiles = enumerate_tiles(m);
  // frozen from the enumeration
  CHECK(tiles.at({TileKind::West, 1, 1}) == doctest::Approx(0.36));
  CHECK(tiles.at({TileKind::South, 3, 0}) == doctest::Approx(0.64));
  CHECK(tiles.at({TileKind::East, 4, 0}) == doctest::Approx(0.36));
  const auto fk = aztec_finite_kernel(m);
  CHECK(max_tile_error(m, fk.fn(), tiles) < 1e-10);

  const auto closed = model_kernel(m, "closed");
  const auto generic = model_kernel(m, "generic");
  const auto pairs = enumerate_measure(aztec_paths(m), true);
  double ec = 0, eg = 0;
  for (int u = 0; u < 2; ++u) {
    const Site s{2, u};
    ec = std::max(ec, std::abs(closed.fn(s, s).real() - pairs.density(s)));
    eg = std::max(eg, std::abs(generic.fn(s, s).real() - pairs.density(s)));
    for (int v = 0; v < 2; ++v) {
      const Site t{2, v}, b{0, v};
      if (u != v) {
        const cplx d = closed.fn(s, s) * closed.fn(t, t) - closed.fn(s, t) * closed.fn(t, s);
        ec = std::max(ec, std::abs(d - pairs.pair(s, t)));
      }
      const cplx d = closed.fn(s, s) * closed.fn(b, b) - closed.fn(s, b) * closed.fn(b, s);
      ec = std::max(ec, std::abs(d - pairs.pair(b, s)));
    }
  }
  CHECK(ec < 1e-10);
  CHECK(eg < 1e-10);
}

TEST_CASE("tile events are validated") {
  const auto m = preset("aztec_p1", {{"N", 2}});
  CHECK_THROWS(tile_event(m, TileKind::West, 2, 0));
  CHECK_THROWS(tile_event(m, TileKind::East, 1, 0));
  CHECK_THROWS(tile_event(m, TileKind::West, 1, 2));
  CHECK_THROWS(tile_event(m, TileKind::West, 5, 0));
  CHECK(tile_from_name(tile_name(TileKind::WestOrSouth)) == TileKind::WestOrSouth);
}

TEST_CASE("cylinder probabilities") {
  const auto m = preset("aztec_p1", {{"N", 3}});
  const auto fk = aztec_finite_kernel(m);
  const auto k = fk.fn();
  for (int u = 0; u < 3; ++u) {
    const Site s{2, u};
    const auto r = cylinder_probability(k, {{}, {s}});
    CHECK(std::abs(r.value - (1.0 - k(s, s).real())) < 1e-15);
    CHECK(r.in_range);
  }
  CylinderEvent big;
  for (int u = 0; u < 21; ++u) big.vacant.push_back({2, u});
  CHECK_THROWS_AS(cylinder_probability(k, big), BudgetError);
}

TEST_CASE("enumeration budget") {
  const auto m = preset("aztec_2p", {{"N", 2}});
  CHECK_THROWS_AS(for_each_family(aztec_paths(m), [](const std::vector<Config>&, double) {}, 1000),
                  BudgetError);
}

TEST_CASE("kernel methods") {
  CHECK(model_kernel(preset("aztec_p1", {{"N", 2}})).method == "closed");
  CHECK(model_kernel(preset("aztec_2p", {{"N", 2}, {"a", 0.9}})).method == "generic");
  CHECK(model_kernel(preset("schur", nlohmann::json::object())).method == "generic");
  CHECK_THROWS_AS(model_kernel(preset("aztec_2p", {{"N", 2}, {"a", 0.9}}), "closed"), UsageError);
  CHECK_THROWS_AS(model_kernel(preset("aztec_2p", {{"N", 2}}), "generic"), UsageError);
}

TEST_CASE("density grids") {
  const auto m = preset("aztec_p1", {{"N", 3}});
  const auto k = model_kernel(m);
  const auto rho = [&](int l, int u) {
    const Site s{l * k.level_stride, u};
    return k.fn(s, s).real();
  };
  const DensityGrid g = density_grid(rho, {0, 3, 0, 2}, k.in_range);
  CHECK(g.values.size() == 12);
  CHECK_FALSE(g.flagged[1]);                   // level 1, u = 0
  CHECK(g.flagged[0]);                         // level 0 is the boundary
  CHECK(g.meta.at("out_of_stated_range") == 6);
  CHECK_THROWS_AS(density_grid(rho, {2, 1, 0, 2}), UsageError);

  const auto dir = std::filesystem::temp_directory_path() / "bdpp_test_density";
  std::filesystem::create_directories(dir);
  const std::string csv = (dir / "d.csv").string(), pgm = (dir / "d.pgm").string();
  write_csv(g, csv);
  const DensityGrid back = read_csv(csv);
  REQUIRE(back.values.size() == g.values.size());
  for (size_t i = 0; i < g.values.size(); ++i) {
    CHECK(back.values[i] == g.values[i]);
    CHECK(back.flagged[i] == g.flagged[i]);
  }
  write_pgm(g, pgm);
  std::ifstream f(pgm, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, mx = 0;
  f >> magic >> w >> h >> mx;
  CHECK(magic == "P5");
  CHECK(w == 4);
  CHECK(h == 3);
  CHECK(mx == 255);
}
