#pragma once

// Physical constants, spin species, dipolar couplings and cluster Hamiltonians.
//
// Internal units: lengths in nm, times in ms, every coupling and field-derived
// energy is an angular frequency in rad/ms. Conversions to MHz and Gauss are
// done only at I/O boundaries (see units below).

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nvbath {

using Vec3 = Eigen::Vector3d;
using Complex = std::complex<double>;

namespace units {
inline constexpr double two_pi = 2.0 * std::numbers::pi;
// 1 MHz = 1e3 cycles per ms.
inline constexpr double mhz_to_rad_per_ms(double f_mhz) { return two_pi * f_mhz * 1e3; }
inline constexpr double rad_per_ms_to_mhz(double w) { return w / (two_pi * 1e3); }
inline constexpr double khz_to_rad_per_ms(double f_khz) { return two_pi * f_khz; }
}  // namespace units

struct PhysicalConstants {
  // Electron gyromagnetic ratio, rad/ms/G. Negative: the electron magnetic
  // moment is antiparallel to its spin, so -gamma_e*B*Sz raises m_s = +1.
  double gamma_e = -17608.59630;
  // (mu0/4pi) * gamma_e^2 * hbar in rad/ms * nm^3 (about 2pi * 52.04 MHz nm^3).
  double dipolar_prefactor = 326983.4;
  double lattice_constant = 0.3567;        // nm
  double atomic_density = 8.0 / (0.3567 * 0.3567 * 0.3567);  // carbon sites per nm^3

  // Values derived from CODATA 2018 mu0, hbar and gamma_e.
  static PhysicalConstants codata();
  void validate() const;
  double bond_length() const { return lattice_constant * std::numbers::sqrt3 / 4.0; }
};

struct CentralSpinParams {
  int spin = 1;
  double zero_field_splitting = units::mhz_to_rad_per_ms(2870.0);  // D, rad/ms
  Vec3 quantization_axis = Vec3(1, 1, 1).normalized();             // NV axis [111]
  std::array<int, 2> qubit_levels{0, -1};                          // (|0>, |1>) as m_s

  void validate() const;
};

enum class Isotope { N15, N14 };

const char* isotope_name(Isotope iso);
Isotope parse_isotope(const std::string& name);
// Nuclear projections ordered +I ... -I.
std::vector<double> nuclear_projections(Isotope iso);
int nuclear_index(Isotope iso, double m);

// Axially symmetric P1 hyperfine tensor about its Jahn-Teller axis.
struct HyperfineTensor {
  double a_parallel = 0.0;       // rad/ms
  double a_perpendicular = 0.0;  // rad/ms
};

// The four <111> Jahn-Teller directions of the P1 center (crystal frame).
std::array<Vec3, 4> default_jt_axes();

struct P1Params {
  Isotope isotope = Isotope::N15;
  std::array<Vec3, 4> jt_axes = default_jt_axes();
  // hyperfine_table[nuclear index][axis]: static shift a(m, axis) of the P1
  // electron Zeeman frequency, rad/ms. Nuclear index follows nuclear_projections.
  std::vector<std::array<double, 4>> hyperfine_table;

  double shift(int nuclear_idx, int axis) const;
  void validate() const;
};

struct FieldConfig {
  double b_z = 50.0;  // Gauss, along the central-spin quantization axis
  void validate() const;
};

enum class HyperfineModel {
  // Electron transition shift from exact diagonalization of the electron-
  // nuclear pair at the working field (includes second-order terms).
  Exact,
  // m * sqrt(A_par^2 cos^2 + A_perp^2 sin^2); field independent.
  FirstOrder,
};

P1Params make_p1_params(Isotope iso, const HyperfineTensor& tensor, double gamma_n, const FieldConfig& field,
                        const CentralSpinParams& central, const PhysicalConstants& constants,
                        HyperfineModel model = HyperfineModel::Exact,
                        const std::array<Vec3, 4>& jt_axes = default_jt_axes());

// Orthonormal frame with z along `axis`; rows are the frame unit vectors in
// crystal coordinates, so frame * r maps a crystal vector into the frame.
Eigen::Matrix3d axis_frame(const Vec3& axis);

// Point-dipole coupling tensor (prefactor/r^3)(delta_ab - 3 r_a r_b) scaled by
// gamma_1*gamma_2/gamma_e^2; symmetric and traceless. Components are in the
// frame of r_vec.
Eigen::Matrix3d dipolar_tensor(const Vec3& r_vec, double gamma_1, double gamma_2, const PhysicalConstants& constants);

// Effective dephasing coupling A_z: change of the bath-spin precession
// frequency between the two qubit levels, (m_1 - m_0) * A_zz with A_zz the
// secular component along the quantization axis.
double secular_azz(const Vec3& central_pos, const Vec3& bath_pos, std::array<int, 2> qubit_levels,
                   const Vec3& quantization_axis, const PhysicalConstants& constants);

inline double secular_azz(const Vec3& central_pos, const Vec3& bath_pos, const CentralSpinParams& central,
                          const PhysicalConstants& constants) {
  return secular_azz(central_pos, bath_pos, central.qubit_levels, central.quantization_axis, constants);
}

enum class CouplingModel {
  // S_z A_zz P_z to the central spin, secular (zz + flip-flop) bath pairs.
  Secular,
  // Central spin kept secular (S_z row of A), bath pairs with full tensors.
  Projected,
  // Every term of S.A.P and P.J.P.
  Full,
};

const char* coupling_model_name(CouplingModel m);
CouplingModel parse_coupling_model(const std::string& name);

// Per-bath-spin static configuration inside a cluster.
struct ClusterSpin {
  Vec3 position;
  int nuclear_idx = 0;
  int jt_axis = 0;
};

struct ClusterHamiltonian {
  std::size_t dimension = 0;
  Eigen::MatrixXcd matrix;
  // Basis ordering: central spin (m_s = +1, 0, -1) is the most significant
  // factor, followed by cluster members in this order (m = +1/2, -1/2 each).
  std::vector<std::size_t> spin_index_map;
};

struct ModelContext {
  PhysicalConstants constants;
  CentralSpinParams central;
  P1Params p1;
  FieldConfig field;
  Vec3 central_position = Vec3::Zero();
};

// Full central-spin (x) cluster Hamiltonian in the NV frame.
ClusterHamiltonian build_cluster_hamiltonian(std::span<const ClusterSpin> cluster, std::span<const std::size_t> ids,
                                             const ModelContext& ctx, CouplingModel model);

// Bath-space Hamiltonian seen while the central spin sits in level m_s, with
// the central spin's own energy dropped (rotating frame). `extra_shift`
// adds a static P_z term per cluster member (mean field of spins outside the
// cluster); may be empty. With remove_zeeman the common bath Zeeman term is
// dropped, which is exact for the Secular model since total P_z is conserved.
Eigen::MatrixXcd central_level_block(std::span<const ClusterSpin> cluster, int m_s, const ModelContext& ctx,
                                     CouplingModel model, std::span<const double> extra_shift, bool remove_zeeman);

// Secular zz coupling between two bath spins in the NV frame (rad/ms).
double bath_pair_jzz(const Vec3& a, const Vec3& b, const ModelContext& ctx);

struct P1Line {
  double frequency_mhz = 0.0;
  double nuclear_m = 0.0;
  int axis = 0;
  // Fraction of the bath resonant at this frequency (nuclear state and
  // orientation multiplicity combined, e.g. 3/8 and 1/8 for 15N m=+1/2).
  double degeneracy_fraction = 0.0;
};

// Electron-flip transitions of an isolated P1 for every (m, axis), sorted by
// frequency.
std::vector<P1Line> p1_transition_frequencies(const FieldConfig& field, const P1Params& params,
                                              const PhysicalConstants& constants);

bool is_hermitian(const Eigen::MatrixXcd& m, double rel_tol = 1e-12);

// Spin operators (x, y, z) for multiplicity 2S+1, basis ordered m = S ... -S.
std::array<Eigen::MatrixXcd, 3> spin_operators(int multiplicity);

}  // namespace nvbath
