#pragma once

// Versioned parameter file (JSON, schema "nvbath.params/1"). Physical inputs
// that are literature values rather than model outputs live here: constants,
// the NV zero-field splitting, P1 hyperfine tensors and nuclear gyromagnetic
// ratios. The shipped default is data/params/nvbath_default_params.json.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nvbath/spin_model.hpp"

namespace nvbath {

inline constexpr const char* kParamsSchema = "nvbath.params/1";

struct IsotopeData {
  HyperfineTensor tensor;  // rad/ms
  double gamma_n = 0.0;    // rad/ms/G
  // Explicit a(m, axis) table in rad/ms; overrides the tensor when present.
  std::optional<std::vector<std::array<double, 4>>> table;
};

struct Params {
  PhysicalConstants constants;
  CentralSpinParams central;
  HyperfineModel hyperfine_model = HyperfineModel::Exact;
  IsotopeData n15;
  IsotopeData n14;
  double max_expected_spins = 1e6;
  // Spins closer than this to the central spin are not placed; <= 0 selects
  // one carbon bond length.
  double exclusion_radius = 0.0;

  static Params defaults();
  void validate() const;

  const IsotopeData& isotope(Isotope iso) const { return iso == Isotope::N15 ? n15 : n14; }
  double exclusion() const { return exclusion_radius > 0.0 ? exclusion_radius : constants.bond_length(); }
  P1Params p1(Isotope iso, const FieldConfig& field) const;
  ModelContext context(Isotope iso, const FieldConfig& field) const;
};

std::string params_to_json(const Params& p);
Params params_from_json(const std::string& text);
Params load_params(const std::string& path);
void save_params(const std::string& path, const Params& p);

}  // namespace nvbath
