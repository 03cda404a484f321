// Prints one pass/fail line per acceptance criterion; exit 0 iff all pass.
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "blockdpp/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string suite = "all", out = "out";
  unsigned seed = 1;
  app.add_option("--suite", suite, "suite name or all");
  app.add_option("--seed", seed, "seed for randomized suites");
  app.add_option("--out", out, "directory for suite reports");
  CLI11_PARSE(app, argc, argv);
  try {
    bool all = true;
    for (const auto& r : bdpp::run_suite(suite, seed, out)) {
      std::printf("%s\n", bdpp::format_line(r).c_str());
      all = all && r.pass;
    }
    return all ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  }
}
