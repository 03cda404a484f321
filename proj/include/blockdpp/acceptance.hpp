#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace bdpp {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double measured = 0.0;   // worst residual of the criterion
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

// switching, factorization, winding, reproducing, finite-oracle, convergence,
// aztec2p-enum, threebytwo, hexagon, quadrature; "all" runs every suite.
std::vector<std::string> suite_names();
// Suites that write reports (threebytwo) put them in out_dir.
std::vector<CriterionResult> run_suite(const std::string& name, unsigned seed = 1,
                                       const std::string& out_dir = ".");
std::string format_line(const CriterionResult& r);
nlohmann::json to_json(const CriterionResult& r);

}  // namespace bdpp
