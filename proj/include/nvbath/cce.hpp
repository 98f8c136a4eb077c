#pragma once

// Cluster correlation expansion of the NV coherence function for Ramsey and
// Hahn-echo sequences, with bath-state sampling, plus the analytic first-
// order Ramsey route with strong/weak spin partitioning.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nvbath/bath.hpp"
#include "nvbath/spin_model.hpp"

namespace nvbath {

inline constexpr const char* kCurveSchema = "nvbath.curve/1";

enum class SequenceKind { Ramsey, HahnEcho, Custom };

struct PulseSequence {
  SequenceKind kind = SequenceKind::Ramsey;
  // Fractions of the total evolution time at which ideal pi pulses act on
  // the central spin.
  std::vector<double> pi_pulse_fractions;

  static PulseSequence ramsey() { return {}; }
  static PulseSequence hahn_echo() { return {SequenceKind::HahnEcho, {0.5}}; }
  void validate() const;
};

const char* sequence_name(const PulseSequence& s);
PulseSequence parse_sequence(const std::string& name);

enum class BathStateMode {
  // Random product states of the bath spins, averaged (pure-state CCE).
  Sampled,
  // Infinite-temperature bath: contributions are normalized traces.
  Mixed,
};

const char* bath_state_mode_name(BathStateMode m);
BathStateMode parse_bath_state_mode(const std::string& s);

struct CCEConfig {
  int order = 1;
  double dipole_radius = 0.0;  // nm; <= 0 selects default_dipole_radius
  int n_bath_states = 1;
  std::vector<double> time_grid;  // ms, strictly increasing from 0
  CouplingModel model = CouplingModel::Secular;
  BathStateMode state_mode = BathStateMode::Sampled;
  // Use the configuration's own nuclear m and Jahn-Teller axis in every
  // state instead of redrawing them.
  bool frozen_nuclear = false;
  // Sampled mode: static zz field of spins outside each cluster.
  bool mean_field = true;
  double division_floor = 1e-10;
  std::size_t max_clusters = 5'000'000;
  unsigned threads = 1;

  void validate() const;
};

struct CoherenceCurve {
  std::vector<double> times;  // ms
  std::vector<Complex> values;
  std::vector<std::pair<std::string, std::string>> metadata;

  void set_meta(const std::string& key, const std::string& value);
  std::string meta(const std::string& key) const;
};

std::string curve_to_text(const CoherenceCurve& c);
CoherenceCurve curve_from_text(const std::string& text);
void save_curve(const std::string& path, const CoherenceCurve& c);
CoherenceCurve load_curve(const std::string& path);

struct StrongSpin {
  std::size_t index = 0;
  double a_z = 0.0;
};

struct StrongWeakPartition {
  std::vector<StrongSpin> strong;
  std::vector<std::size_t> weak;
  double a_bath = 0.0;   // rad/ms
  double t2_star = 0.0;  // ms; +inf when the weak set is empty
};

// Greedy selection in descending |A_z|: a spin is strong while
// |A_z|/2 >= 2*pi*A_bath(remaining)/sqrt(2).
StrongWeakPartition partition_strong_weak(std::span<const double> a_z);
StrongWeakPartition partition_strong_weak(const BathConfiguration& config, const CentralSpinParams& central,
                                          const PhysicalConstants& constants);

// exp(-(t/T2*)^2) * prod_strong cos(A_z t/2).
CoherenceCurve ramsey_cce1_analytic(const BathConfiguration& config, const CentralSpinParams& central,
                                    const PhysicalConstants& constants, std::span<const double> times);

// prod_j cos(A_z^j t/2) over every bath spin.
std::vector<Complex> ramsey_exact_product(std::span<const double> a_z, std::span<const double> times);

using Cluster = std::vector<std::uint32_t>;

// Connected subsets (size <= order) of the graph joining spins closer than
// dipole_radius. Sorted by size, then lexicographically.
std::vector<Cluster> enumerate_clusters(std::span<const Vec3> positions, int order, double dipole_radius,
                                        std::size_t max_clusters = 5'000'000);

// Static and sampled state of every bath spin.
struct BathState {
  std::vector<int> nuclear_idx;
  std::vector<int> jt_axis;
  std::vector<double> pz;  // +-1/2; unused in mixed mode
};

BathState frozen_bath_state(const BathConfiguration& config);
BathState sample_bath_state(const BathConfiguration& config, std::uint64_t seed, std::uint64_t index,
                            bool frozen_nuclear);

// Coherence of the central spin coupled to one cluster: ideal pulses, central
// spin in (|0>+|1>)/sqrt(2), bath in the product state `pz` (or maximally
// mixed when pz is empty). Central-spin self-energies are removed.
std::vector<Complex> cluster_contribution(std::span<const ClusterSpin> cluster, std::span<const double> pz,
                                          const PulseSequence& sequence, const ModelContext& ctx,
                                          std::span<const double> times, CouplingModel model,
                                          std::span<const double> extra_shift = {});

struct CCEStats {
  std::size_t n_clusters = 0;
  std::size_t floored = 0;       // (cluster, state) pairs hitting the division floor
  std::size_t contributions = 0;  // (cluster, state) pairs evaluated
};

CoherenceCurve cce_coherence(const BathConfiguration& config, const CCEConfig& cce, const PulseSequence& sequence,
                             const ModelContext& ctx, std::uint64_t seed, CCEStats* stats = nullptr);

// Full Hilbert-space propagation of the central spin with every bath spin
// (dimension 3 * 2^N), averaged over the same bath states cce_coherence
// would use. Independent of the cluster machinery; meant for small baths.
CoherenceCurve exact_coherence(const BathConfiguration& config, const CCEConfig& cce, const PulseSequence& sequence,
                               const ModelContext& ctx, std::uint64_t seed);

double default_dipole_radius(double density_ppm, const PhysicalConstants& c = PhysicalConstants::codata());

// 0 .. 5*sqrt(2)/A_bath, 200 points (1 ms span for an empty bath).
std::vector<double> default_ramsey_grid(double a_bath);
// t = 0 followed by `points` log-spaced times over three decades ending at
// ten times the expected Hahn-echo T2 for this density.
std::vector<double> default_hahn_grid(double density_ppm, int points = 60);

}  // namespace nvbath
