#pragma once

// Random P1 bath configurations in a (001) slab around a central NV spin.

#include <cstdint>
#include <string>
#include <vector>

#include "nvbath/parameters.hpp"
#include "nvbath/spin_model.hpp"

namespace nvbath {

inline constexpr const char* kBathSchema = "nvbath.bath/1";

enum class PlacementMode { Lattice, Continuum };

const char* placement_mode_name(PlacementMode m);
PlacementMode parse_placement_mode(const std::string& s);

struct BathGeometry {
  double density_ppm = 1.0;
  double thickness = 10.0;       // nm, along [001], centered on the NV
  double lateral_radius = 50.0;  // nm
  PlacementMode mode = PlacementMode::Lattice;
  void validate() const;
};

struct BathSpin {
  Vec3 position = Vec3::Zero();
  int jt_axis = 0;
  double nuclear_m = 0.5;
};

struct BathConfiguration {
  Vec3 central_position = Vec3::Zero();
  std::vector<BathSpin> spins;
  BathGeometry geometry;
  std::uint64_t seed = 0;
  Isotope isotope = Isotope::N15;
};

struct BathOptions {
  Isotope isotope = Isotope::N15;
  PhysicalConstants constants = PhysicalConstants::codata();
  double max_expected_spins = 1e6;
  double exclusion_radius = 0.0;  // <= 0: one bond length

  static BathOptions from(const Params& p, Isotope iso);
};

double ppm_to_number_density(double ppm, const PhysicalConstants& c = PhysicalConstants::codata());

// Thickness actually sampled by the slab: the lattice holds (001) atomic
// planes every a/4, so a slab |z| <= t/2 contains n planes and represents
// n*a/4 of material. Continuum mode returns t.
double effective_thickness(double thickness, PlacementMode mode, const PhysicalConstants& c = PhysicalConstants::codata());

// Radius holding `factor * converged_spins` expected spins in the slab.
double default_lateral_radius(double density_ppm, double thickness, double converged_spins, double factor = 3.0,
                              PlacementMode mode = PlacementMode::Lattice,
                              const PhysicalConstants& c = PhysicalConstants::codata());

BathConfiguration generate_bath(const BathGeometry& geometry, std::uint64_t seed, const BathOptions& opts = {});

BathConfiguration slice_bath(const BathConfiguration& config, double new_thickness);

double nearest_neighbor_distance(const BathConfiguration& config);

double mean_nn_distance_formula(double density_ppm, const PhysicalConstants& c = PhysicalConstants::codata());

// Secular couplings A_z of every bath spin (rad/ms), in spin order.
std::vector<double> bath_couplings(const BathConfiguration& config, const CentralSpinParams& central,
                                   const PhysicalConstants& constants);

std::string bath_to_text(const BathConfiguration& config);
BathConfiguration bath_from_text(const std::string& text);
void save_bath(const std::string& path, const BathConfiguration& config);
BathConfiguration load_bath(const std::string& path);

}  // namespace nvbath
