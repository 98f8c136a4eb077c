#pragma once

// Acceptance suite: one result per criterion, each with measured values,
// its tolerance and wall time.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nvbath/parameters.hpp"

namespace nvbath {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  bool quick = false;
  std::string measured;   // key=value pairs
  std::string tolerance;  // what was required
  double seconds = 0.0;
};

struct ValidationOptions {
  bool quick = false;          // only criteria marked quick
  std::vector<int> only;       // empty: all selected by `quick`
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  double scale = 1.0;          // multiplies Monte-Carlo counts (< 1 for smoke runs)
};

const std::vector<int>& quick_criteria();

using CriterionCallback = std::function<void(const CriterionResult&)>;

std::vector<CriterionResult> run_validation(const ValidationOptions& opts, const Params& params,
                                            const CriterionCallback& on_result = {});

std::string format_result(const CriterionResult& r);

}  // namespace nvbath
