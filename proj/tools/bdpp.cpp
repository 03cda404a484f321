// Command-line front end: factorize, kernel, density, verify.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "blockdpp/acceptance.hpp"
#include "blockdpp/errors.hpp"
#include "blockdpp/models.hpp"

using namespace bdpp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kRuntime = 1, kValidation = 2, kUsage = 3 };

struct Options {
  std::string model, params = "{}", symbol, variant = "plus_minus", window, out, suite = "all",
                     method = "auto";
  int M = 0;
  bool M_set = false;
  double tol = 1e-12;
  int nodes = 1 << 13;
  int finite_n = 4;
  unsigned seed = 1;
};

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

ModelPreset load_model(const Options& o) {
  if (o.model.empty()) throw UsageError("--model is required");
  if (fs::exists(o.model)) return preset_from_json(read_json(o.model));
  json params;
  try {
    params = json::parse(o.params);
  } catch (const json::exception& e) {
    throw UsageError(std::string("--params: ") + e.what());
  }
  return preset(o.model, params);
}

DensityWindow parse_window(const std::string& s) {
  static const std::regex re(R"(\s*(-?\d+):(-?\d+)\s*,\s*(-?\d+):(-?\d+)\s*)");
  std::smatch mt;
  if (!std::regex_match(s, mt, re)) throw UsageError("--window must look like m0:m1,u0:u1");
  DensityWindow w{std::stoi(mt[1]), std::stoi(mt[2]), std::stoi(mt[3]), std::stoi(mt[4])};
  if (w.m1 < w.m0 || w.u1 < w.u0) throw UsageError("empty query window");
  return w;
}

KernelOptions kernel_options(const Options& o) {
  KernelOptions k;
  k.tol = o.tol;
  k.max_nodes = o.nodes;
  return k;
}

fs::path out_dir(const Options& o) {
  const fs::path d = o.out.empty() ? fs::path("out") : fs::path(o.out);
  fs::create_directories(d);
  return d;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
}

// Rewrites a list of identical consecutive blocks as Phi^k so that orbit detection applies.
SymbolExpr as_power(const std::vector<SymbolExpr>& symbols) {
  const int n = static_cast<int>(symbols.size());
  std::vector<json> js;
  for (const auto& s : symbols) js.push_back(to_json(s));
  for (int len = 1; len <= n; ++len) {
    if (n % len) continue;
    bool periodic = true;
    for (int i = len; i < n && periodic; ++i) periodic = js[i] == js[i - len];
    if (!periodic) continue;
    SymbolExpr block = flatten(product({symbols.begin(), symbols.begin() + len}));
    block.exponent = n / len;
    return block;
  }
  return product(symbols);
}

int cmd_factorize(const Options& o) {
  SymbolExpr s;
  int M = o.M;
  if (!o.symbol.empty()) {
    const json j = read_json(o.symbol);
    const json& sj = j.contains("symbol") ? j.at("symbol") : j;
    s = symbol_from_json(sj);
    if (!o.M_set) {
      if (!j.contains("M")) throw UsageError("the symbol file has no \"M\"; pass --M");
      M = j.at("M").get<int>();
    }
  } else {
    const ModelPreset m = load_model(o);
    s = as_power(m.symbols);
    if (!o.M_set) M = m.M;
  }
  const fs::path dir = out_dir(o);
  json report;
  int code = kOk;
  try {
    const WHFactorization f = factorize_orbit(s, M, variant_from_name(o.variant));
    const WHReport r = validate(f, s, std::max(o.tol, 1e-9));
    write_file(dir / "factorization.json", to_json(f).dump(2) + "\n");
    report = to_json(r);
    report["orbit"] = f.orbit ? json{{"q", f.orbit->q}, {"repeats", f.orbit->repeats}} : json();
    report["closed_form"] = to_json(f)["orbit"];
    if (!r.ok) code = kValidation;
  } catch (const AdmissibilityError& e) {
    report = {{"ok", false}, {"error", e.what()}};
    code = kValidation;
  }
  report["M"] = M;
  report["variant"] = o.variant;
  write_file(dir / "report.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return code;
}

int cmd_kernel(const Options& o) {
  const ModelPreset m = load_model(o);
  const DensityWindow w = parse_window(o.window);
  const ModelKernel k = model_kernel(m, o.method, kernel_options(o), o.finite_n);
  const fs::path path = o.out.empty() ? fs::path("kernel.csv") : fs::path(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << "m,u,mp,up,re,im\n";
  f.precision(17);
  for (int mm = w.m0; mm <= w.m1; ++mm)
    for (int u = w.u0; u <= w.u1; ++u)
      for (int mp = w.m0; mp <= w.m1; ++mp)
        for (int up = w.u0; up <= w.u1; ++up) {
          const cplx v = k.fn({mm * k.level_stride, u}, {mp * k.level_stride, up});
          f << mm << ',' << u << ',' << mp << ',' << up << ',' << v.real() << ',' << v.imag()
            << '\n';
        }
  std::cout << "wrote " << path.string() << " (" << k.method << " kernel)\n";
  return kOk;
}

int cmd_density(const Options& o) {
  const ModelPreset m = load_model(o);
  const DensityWindow w = parse_window(o.window);
  const ModelKernel k = model_kernel(m, o.method, kernel_options(o), o.finite_n);
  int failed = 0;
  const auto rho = [&](int l, int u) {
    const Site s{l * k.level_stride, u};
    try {
      return k.fn(s, s).real();
    } catch (const ValidationError&) {
      ++failed;
      return std::nan("");
    } catch (const ContourError&) {
      ++failed;
      return std::nan("");
    }
  };
  DensityGrid g = density_grid(rho, w, k.in_range);
  g.meta["model"] = to_json(m)["model"];
  g.meta["params"] = m.params;
  g.meta["method"] = k.method;
  g.meta["kernel"] = k.meta;
  g.meta["level_stride"] = k.level_stride;
  g.meta["levels"] = k.levels;
  g.meta["not_evaluated"] = failed;
  const fs::path dir = out_dir(o);
  write_csv(g, (dir / "density.csv").string());
  write_pgm(g, (dir / "density.pgm").string());
  write_file(dir / "density.json", g.meta.dump(2) + "\n");
  std::cout << "wrote density.csv, density.pgm, density.json to " << dir.string() << "\n";
  return kOk;
}

int cmd_verify(const Options& o) {
  const auto results = run_suite(o.suite, o.seed, o.out.empty() ? "out" : o.out);
  bool all = true;
  for (const auto& r : results) {
    std::cout << format_line(r) << "\n";
    all = all && r.pass;
  }
  return all ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block Toeplitz determinantal point processes: factorization, kernels, densities"};
  app.set_config("--config", "", "TOML/INI file supplying any flag; flags on the command line win");
  app.require_subcommand(1);
  Options o;

  const auto model_flags = [&](CLI::App* c) {
    c->add_option("--model", o.model, "preset name or preset JSON file");
    c->add_option("--params", o.params, "preset parameters as a JSON object");
  };
  const auto kernel_flags = [&](CLI::App* c) {
    model_flags(c);
    c->add_option("--window", o.window, "m0:m1,u0:u1 (levels, sites)")->required();
    c->add_option("--method", o.method, "auto, closed, generic or finite")
        ->check(CLI::IsMember({"auto", "closed", "generic", "finite"}));
    c->add_option("--tol", o.tol, "quadrature tolerance");
    c->add_option("--nodes", o.nodes, "largest quadrature node count");
    c->add_option("--n", o.finite_n, "paths per residue for the finite kernel of non-Aztec models");
  };

  auto* fac = app.add_subcommand("factorize", "Wiener-Hopf factorization with validation report");
  model_flags(fac);
  fac->add_option("--symbol", o.symbol, "symbol JSON file ({\"symbol\": ..., \"M\": ...} or bare)");
  fac->add_option("--M", o.M, "winding index M")->each([&](const std::string&) { o.M_set = true; });
  fac->add_option("--variant", o.variant, "plus_minus or minus_plus")
      ->check(CLI::IsMember({"plus_minus", "minus_plus"}));
  fac->add_option("--tol", o.tol, "product residual tolerance");
  fac->add_option("--out", o.out, "output directory");

  auto* ker = app.add_subcommand("kernel", "kernel entries over a window, CSV");
  kernel_flags(ker);
  ker->add_option("--out", o.out, "output CSV path");

  auto* den = app.add_subcommand("density", "one-point densities: CSV, PGM heatmap, JSON metadata");
  kernel_flags(den);
  den->add_option("--out", o.out, "output directory");

  auto* ver = app.add_subcommand("verify", "run acceptance suites");
  ver->add_option("--suite", o.suite, "suite name or all");
  ver->add_option("--seed", o.seed, "seed for randomized suites");
  ver->add_option("--out", o.out, "directory for suite reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*fac) return cmd_factorize(o);
    if (*ker) return cmd_kernel(o);
    if (*den) return cmd_density(o);
    return cmd_verify(o);
  } catch (const UsageError& e) {
    std::cerr << json{{"ok", false}, {"kind", "usage"}, {"error", e.what()}}.dump() << "\n";
    return kUsage;
  } catch (const AdmissibilityError& e) {
    std::cerr << json{{"ok", false}, {"kind", "admissibility"}, {"error", e.what()}}.dump() << "\n";
    return kValidation;
  } catch (const ConstraintError& e) {
    std::cerr << json{{"ok", false}, {"kind", "validation"}, {"error", e.what()}}.dump() << "\n";
    return kValidation;
  } catch (const ValidationError& e) {
    std::cerr << json{{"ok", false}, {"kind", "validation"}, {"error", e.what()}}.dump() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << json{{"ok", false}, {"kind", "runtime"}, {"error", e.what()}}.dump() << "\n";
    return kRuntime;
  }
}
