#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "blockdpp/kernels.hpp"
#include "blockdpp/symbol.hpp"

namespace bdpp {

// Symbol lists of the tiling models. For the Aztec families the level index
// counts single steps; the closed-form kernels use every level_stride-th level.
struct ModelPreset {
  std::string name;
  int p = 1;
  int N = 0;  // size parameter as used by the closed-form kernel
  int M = 0;
  double a = 1.0;
  int level_stride = 1;
  std::vector<SymbolExpr> symbols;
  nlohmann::json params;
  SymbolExpr product() const;
  int steps() const { return static_cast<int>(symbols.size()); }
  bool is_aztec() const { return name.rfind("aztec", 0) == 0; }
  // Order of the Aztec diamond, -pM.
  int diamond() const { return -p * M; }
};

std::vector<std::string> preset_names();
// aztec_p1 {a, N}; aztec_2p {alpha, beta, a, N}; aztec_3x2 {alpha[3], beta[3], a, N};
// hexagon_2x2 {a, b, c, d, alpha, beta, gamma, delta, N}; schur {b[]};
// chain {symbols: [symbol json], M}.
ModelPreset preset(const std::string& name, const nlohmann::json& params);
nlohmann::json to_json(const ModelPreset& m);
ModelPreset preset_from_json(const nlohmann::json& j);

struct Site {
  int m = 0;
  int u = 0;
  auto operator<=>(const Site&) const = default;
};

// Probability that all `occupied` sites carry a particle and no `vacant` site does.
struct CylinderEvent {
  std::vector<Site> occupied;
  std::vector<Site> vacant;
};

using KernelFn = std::function<cplx(const Site&, const Site&)>;

struct CylinderResult {
  double value = 0.0;
  double imag = 0.0;
  bool in_range = true;  // value in [-1e-8, 1 + 1e-8] and |imag| <= 1e-9
};
CylinderResult cylinder_probability(const KernelFn& k, const CylinderEvent& e);

// Finite weighted lattice of nonintersecting paths. Transition weights are the
// Fourier coefficients of the step symbols read off on |z| = fourier_radius.
struct PathGraphInstance {
  int p = 1;
  std::vector<SymbolExpr> symbols;
  std::vector<int> starts, ends;
  int umin = 0, umax = 0;
  double fourier_radius = 1.0;
  int fourier_nodes = 512;
};

// Paths of the finite ensemble: starts j-1, ends pM+j-1, window [umin, umax].
PathGraphInstance finite_instance(const FiniteEnsemble& e, int umin, int umax);
// The D = -pM top paths of an Aztec preset, D-path coordinates: starts 0..D-1,
// ends -D..-1.
PathGraphInstance aztec_paths(const ModelPreset& m);

using Config = std::vector<int>;
using FamilyVisitor = std::function<void(const std::vector<Config>&, double)>;

// Calls visit(configs at levels 0..N, weight) for every configuration sequence
// of nonzero weight; returns the partition function. Weight = prod of det T_m.
// The budget caps both the determinant evaluations and the number of families.
double for_each_family(const PathGraphInstance& g, const FamilyVisitor& visit,
                       long long budget = 100'000'000);

// Calls visit(step, configuration before, configuration after, probability) for
// every single-step transition of nonzero probability; returns the partition
// function and, through `families`, the number of nonzero families.
using TransitionVisitor = std::function<void(int, const Config&, const Config&, double)>;
double for_each_transition(const PathGraphInstance& g, const TransitionVisitor& visit,
                           long long budget = 100'000'000, double* families = nullptr);

struct CorrelationTable {
  double Z = 0.0;
  long long families = 0;
  std::map<Site, double> rho1;
  std::map<std::pair<Site, Site>, double> rho2;  // keys with first < second
  double density(const Site& s) const;
  double pair(const Site& a, const Site& b) const;
};
CorrelationTable enumerate_measure(const PathGraphInstance& g, bool pairs = false,
                                   long long budget = 100'000'000);

// Aztec tiles in D-path coordinates; the diamond is the strip 0 <= h <= D-1,
// the paths below it tile the corridor and a diamond of order D-1. Odd steps: a path staying at h gives a
// West tile at (m, h), a path dropping from h a South tile. Even steps: a path
// crossing from h to h-1 gives an East tile at (m, h).
enum class TileKind { West, South, East, WestOrSouth };
std::string tile_name(TileKind k);
TileKind tile_from_name(const std::string& s);

// Signed sum of cylinder events.
struct TileEvent {
  std::vector<std::pair<double, CylinderEvent>> terms;
};
TileEvent tile_event(const ModelPreset& m, TileKind kind, int step, int h);
double tile_probability(const KernelFn& k, const TileEvent& e);

// Direct tile frequencies from the path enumeration, keyed by (kind, step, h).
using TileTable = std::map<std::tuple<TileKind, int, int>, double>;
TileTable enumerate_tiles(const ModelPreset& m, long long budget = 100'000'000);

// Kernel of an Aztec preset in D-path coordinates from the finite ensemble with
// n = D/p + corridor_depth paths per residue. The diamond part does not depend
// on the depth; deeper corridors only worsen the conditioning of G at a = 1.
struct AztecFiniteKernel {
  FiniteKernel fk;
  int shift = 0;  // u = u_D + shift
  KernelFn fn() const;
};
AztecFiniteKernel aztec_finite_kernel(const ModelPreset& m, int corridor_depth = 2);

// Top kernel (generic or closed form) in D-path coordinates: u_D = D + u_top.
KernelFn aztec_top_fn(const ContourKernel& k, int D, int level_stride = 1);

// Kernel of a preset. Sites carry m in steps; Aztec presets use D-path
// coordinates. Methods: closed (closed-form contour kernel), generic (top kernel
// for Aztec, bottom kernel otherwise, from the Wiener-Hopf factorization),
// finite (finite-n moment-matrix kernel) and auto (closed when available).
struct ModelKernel {
  KernelFn fn;
  std::string method;
  int level_stride = 1;
  int levels = 0;                        // levels 0..levels, level l is step l * level_stride
  std::function<bool(int, int)> in_range;  // (level, u) inside the region the kernel describes
  nlohmann::json meta;
};
ModelKernel model_kernel(const ModelPreset& m, const std::string& method = "auto",
                         const KernelOptions& opt = {}, int finite_n = 4);
HexagonParams hexagon_params(const nlohmann::json& params);

struct DensityWindow {
  int m0 = 0, m1 = 0, u0 = 0, u1 = 0;
};
struct DensityGrid {
  DensityWindow win;
  std::vector<double> values;  // index (u - u0) * (m1 - m0 + 1) + (m - m0)
  std::vector<bool> flagged;   // outside [0, 1] up to 1e-8, or out of stated range
  nlohmann::json meta;
  double at(int m, int u) const;
};
DensityGrid density_grid(const std::function<double(int, int)>& rho, const DensityWindow& w,
                         const std::function<bool(int, int)>& in_range = nullptr);
void write_csv(const DensityGrid& g, const std::string& path);
DensityGrid read_csv(const std::string& path);
// One pixel per site, row = u (largest u on top), column = m, white = density 1.
void write_pgm(const DensityGrid& g, const std::string& path);

}  // namespace bdpp
