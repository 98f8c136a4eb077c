// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria (capped at 1 for ctest).

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nvbath/validation.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  nvbath::ValidationOptions o;
  std::string params;
  app.add_flag("--quick", o.quick, "quick criteria only");
  app.add_option("--only", o.only, "criterion ids")->delimiter(',');
  app.add_option("--seed", o.seed, "seed");
  app.add_option("--threads", o.threads, "worker threads (0 = all cores)");
  app.add_option("--scale", o.scale, "Monte-Carlo count multiplier");
  app.add_option("--params", params, "parameter file")->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto p = params.empty() ? nvbath::Params::defaults() : nvbath::load_params(params);
    int failed = 0;
    const auto results = nvbath::run_validation(o, p, [&](const nvbath::CriterionResult& r) {
      std::printf("%s\n", nvbath::format_result(r).c_str());
      std::fflush(stdout);
      failed += !r.passed;
    });
    std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
    return failed ? 1 : 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
