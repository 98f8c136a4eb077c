#include "nvbath/spin_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "nvbath/error.hpp"

namespace nvbath {

namespace {

// CODATA 2018.
constexpr double kGammaESI = 1.76085963023e11;  // rad s^-1 T^-1
constexpr double kHbar = 1.054571817e-34;        // J s
constexpr double kMu0Over4Pi = 1.00000000055e-7;  // N A^-2

// Mixed-radix product space, site 0 most significant.
struct ProductSpace {
  std::vector<int> dims;
  std::vector<std::size_t> strides;
  std::size_t total = 1;

  explicit ProductSpace(std::vector<int> d) : dims(std::move(d)), strides(dims.size()) {
    for (std::size_t s = dims.size(); s-- > 0;) {
      strides[s] = total;
      total *= static_cast<std::size_t>(dims[s]);
    }
  }
  int local(std::size_t b, std::size_t site) const { return static_cast<int>((b / strides[site]) % dims[site]); }
};

void add_one(Eigen::MatrixXcd& h, const ProductSpace& ps, std::size_t s, const Eigen::MatrixXcd& op, Complex c) {
  if (c == Complex(0.0)) return;
  const auto st = static_cast<std::ptrdiff_t>(ps.strides[s]);
  for (std::size_t b = 0; b < ps.total; ++b) {
    const int in = ps.local(b, s);
    for (int out = 0; out < ps.dims[s]; ++out) {
      const Complex v = op(out, in);
      if (v == Complex(0.0)) continue;
      h(static_cast<std::ptrdiff_t>(b) + (out - in) * st, static_cast<std::ptrdiff_t>(b)) += c * v;
    }
  }
}

void add_two(Eigen::MatrixXcd& h, const ProductSpace& ps, std::size_t s1, const Eigen::MatrixXcd& o1, std::size_t s2,
             const Eigen::MatrixXcd& o2, Complex c) {
  if (c == Complex(0.0)) return;
  const auto st1 = static_cast<std::ptrdiff_t>(ps.strides[s1]);
  const auto st2 = static_cast<std::ptrdiff_t>(ps.strides[s2]);
  for (std::size_t b = 0; b < ps.total; ++b) {
    const int in1 = ps.local(b, s1);
    const int in2 = ps.local(b, s2);
    for (int out1 = 0; out1 < ps.dims[s1]; ++out1) {
      const Complex v1 = o1(out1, in1);
      if (v1 == Complex(0.0)) continue;
      for (int out2 = 0; out2 < ps.dims[s2]; ++out2) {
        const Complex v2 = o2(out2, in2);
        if (v2 == Complex(0.0)) continue;
        const auto row = static_cast<std::ptrdiff_t>(b) + (out1 - in1) * st1 + (out2 - in2) * st2;
        h(row, static_cast<std::ptrdiff_t>(b)) += c * v1 * v2;
      }
    }
  }
}

// Central spin (site 0) to bath spin (site) coupling S.T.P with model filtering.
void add_central_bath(Eigen::MatrixXcd& h, const ProductSpace& ps, std::size_t site, const Eigen::Matrix3d& t,
                      const std::array<Eigen::MatrixXcd, 3>& s_ops, const std::array<Eigen::MatrixXcd, 3>& p_ops,
                      CouplingModel model) {
  for (int a = 0; a < 3; ++a) {
    if (model != CouplingModel::Full && a != 2) continue;
    for (int b = 0; b < 3; ++b) {
      if (model == CouplingModel::Secular && b != 2) continue;
      add_two(h, ps, 0, s_ops[a], site, p_ops[b], t(a, b));
    }
  }
}

void add_bath_pair(Eigen::MatrixXcd& h, const ProductSpace& ps, std::size_t i, std::size_t j, const Eigen::Matrix3d& t,
                   const std::array<Eigen::MatrixXcd, 3>& p_ops, CouplingModel model) {
  if (model == CouplingModel::Secular) {
    add_two(h, ps, i, p_ops[2], j, p_ops[2], t(2, 2));
    const double ff = 0.5 * (t(0, 0) + t(1, 1));
    add_two(h, ps, i, p_ops[0], j, p_ops[0], ff);
    add_two(h, ps, i, p_ops[1], j, p_ops[1], ff);
    return;
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) add_two(h, ps, i, p_ops[a], j, p_ops[b], t(a, b));
}

double bath_zeeman(const ModelContext& ctx) { return -ctx.constants.gamma_e * ctx.field.b_z; }

void check_cluster(std::span<const ClusterSpin> cluster, const P1Params& p1) {
  const auto n_nuc = static_cast<int>(p1.hyperfine_table.size());
  for (const auto& s : cluster) {
    if (s.jt_axis < 0 || s.jt_axis > 3 || s.nuclear_idx < 0 || s.nuclear_idx >= n_nuc)
      fail(ErrorCode::InvalidArgument, "missing hyperfine entry for cluster member");
  }
}

}  // namespace

PhysicalConstants PhysicalConstants::codata() {
  PhysicalConstants c;
  c.gamma_e = -kGammaESI * 1e-3 * 1e-4;
  // m^3 rad/s -> nm^3 rad/ms
  c.dipolar_prefactor = kMu0Over4Pi * kGammaESI * kGammaESI * kHbar * 1e27 * 1e-3;
  c.lattice_constant = 0.3567;
  c.atomic_density = 8.0 / std::pow(c.lattice_constant, 3);
  return c;
}

void PhysicalConstants::validate() const {
  require(std::isfinite(gamma_e) && gamma_e != 0.0, "gamma_e must be finite and nonzero");
  require(std::isfinite(dipolar_prefactor) && dipolar_prefactor > 0.0, "dipolar prefactor must be positive");
  require(lattice_constant > 0.0, "lattice constant must be positive");
  const double expected = 8.0 / std::pow(lattice_constant, 3);
  require(std::abs(atomic_density / expected - 1.0) < 1e-3, "atomic density inconsistent with lattice constant");
}

void CentralSpinParams::validate() const {
  require(spin == 1, "central spin must be S = 1");
  require(std::isfinite(zero_field_splitting), "zero-field splitting must be finite");
  require(std::abs(quantization_axis.norm() - 1.0) < 1e-9, "quantization axis must have unit norm");
  for (int m : qubit_levels) require(m >= -1 && m <= 1, "qubit level must be -1, 0 or +1");
  require(qubit_levels[0] != qubit_levels[1], "qubit levels must be distinct");
}

const char* isotope_name(Isotope iso) { return iso == Isotope::N15 ? "n15" : "n14"; }

Isotope parse_isotope(const std::string& name) {
  if (name == "n15" || name == "N15" || name == "15N") return Isotope::N15;
  if (name == "n14" || name == "N14" || name == "14N") return Isotope::N14;
  fail(ErrorCode::InvalidArgument, "unknown isotope '" + name + "' (expected n14 or n15)");
}

std::vector<double> nuclear_projections(Isotope iso) {
  if (iso == Isotope::N15) return {0.5, -0.5};
  return {1.0, 0.0, -1.0};
}

int nuclear_index(Isotope iso, double m) {
  const auto p = nuclear_projections(iso);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (std::abs(p[i] - m) < 1e-9) return static_cast<int>(i);
  fail(ErrorCode::InvalidArgument, "invalid nuclear projection for " + std::string(isotope_name(iso)));
}

std::array<Vec3, 4> default_jt_axes() {
  const double k = 1.0 / std::sqrt(3.0);
  return {Vec3(k, k, k), Vec3(k, -k, -k), Vec3(-k, k, -k), Vec3(-k, -k, k)};
}

double P1Params::shift(int nuclear_idx, int axis) const {
  if (nuclear_idx < 0 || static_cast<std::size_t>(nuclear_idx) >= hyperfine_table.size() || axis < 0 || axis > 3)
    fail(ErrorCode::InvalidArgument, "missing hyperfine entry");
  return hyperfine_table[static_cast<std::size_t>(nuclear_idx)][static_cast<std::size_t>(axis)];
}

void P1Params::validate() const {
  require(hyperfine_table.size() == nuclear_projections(isotope).size(),
          "hyperfine table must cover every nuclear projection");
  for (const auto& row : hyperfine_table)
    for (double v : row) require(std::isfinite(v), "hyperfine table entries must be finite");
  const double k = 1.0 / std::sqrt(3.0);
  for (const auto& ax : jt_axes) {
    require(std::abs(ax.norm() - 1.0) < 1e-9, "Jahn-Teller axes must be unit vectors");
    for (int c = 0; c < 3; ++c) require(std::abs(std::abs(ax[c]) - k) < 1e-9, "Jahn-Teller axes must lie along <111>");
  }
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      require(std::abs(std::abs(jt_axes[i].dot(jt_axes[j])) - 1.0) > 1e-6, "Jahn-Teller axes must be distinct");
}

void FieldConfig::validate() const { require(std::isfinite(b_z) && b_z >= 0.0, "field must be non-negative"); }

std::array<Eigen::MatrixXcd, 3> spin_operators(int multiplicity) {
  require(multiplicity >= 1, "multiplicity must be positive");
  const double s = 0.5 * (multiplicity - 1);
  Eigen::MatrixXcd sp = Eigen::MatrixXcd::Zero(multiplicity, multiplicity);
  Eigen::MatrixXcd sz = Eigen::MatrixXcd::Zero(multiplicity, multiplicity);
  for (int k = 0; k < multiplicity; ++k) {
    const double m = s - k;
    sz(k, k) = m;
    if (k > 0) sp(k - 1, k) = std::sqrt(s * (s + 1) - m * (m + 1));
  }
  const Eigen::MatrixXcd sm = sp.adjoint();
  Eigen::MatrixXcd sx = 0.5 * (sp + sm);
  Eigen::MatrixXcd sy = (sp - sm) / Complex(0.0, 2.0);
  return {sx, sy, sz};
}

Eigen::Matrix3d axis_frame(const Vec3& axis) {
  const Vec3 z = axis.normalized();
  Vec3 ref = std::abs(z.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 x = (ref - ref.dot(z) * z).normalized();
  Vec3 y = z.cross(x);
  Eigen::Matrix3d f;
  f.row(0) = x;
  f.row(1) = y;
  f.row(2) = z;
  return f;
}

Eigen::Matrix3d dipolar_tensor(const Vec3& r_vec, double gamma_1, double gamma_2, const PhysicalConstants& constants) {
  const double r = r_vec.norm();
  if (!(r > 0.0)) fail(ErrorCode::Domain, "coincident spins");
  const Vec3 u = r_vec / r;
  const double scale =
      constants.dipolar_prefactor * (gamma_1 * gamma_2) / (constants.gamma_e * constants.gamma_e) / (r * r * r);
  return scale * (Eigen::Matrix3d::Identity() - 3.0 * u * u.transpose());
}

double secular_azz(const Vec3& central_pos, const Vec3& bath_pos, std::array<int, 2> qubit_levels,
                   const Vec3& quantization_axis, const PhysicalConstants& constants) {
  const Vec3 d = bath_pos - central_pos;
  const double r = d.norm();
  if (!(r > 0.0)) fail(ErrorCode::Domain, "coincident spins");
  const double c = d.dot(quantization_axis.normalized()) / r;
  const double azz = constants.dipolar_prefactor * (1.0 - 3.0 * c * c) / (r * r * r);
  return (qubit_levels[1] - qubit_levels[0]) * azz;
}

P1Params make_p1_params(Isotope iso, const HyperfineTensor& tensor, double gamma_n, const FieldConfig& field,
                        const CentralSpinParams& central, const PhysicalConstants& constants, HyperfineModel model,
                        const std::array<Vec3, 4>& jt_axes) {
  P1Params p;
  p.isotope = iso;
  p.jt_axes = jt_axes;
  const auto proj = nuclear_projections(iso);
  const int mult_n = static_cast<int>(proj.size());
  p.hyperfine_table.assign(proj.size(), {0, 0, 0, 0});
  const Eigen::Matrix3d frame = axis_frame(central.quantization_axis);
  const double b = field.b_z;

  for (int ax = 0; ax < 4; ++ax) {
    const Vec3 n = frame * jt_axes[static_cast<std::size_t>(ax)].normalized();
    const double cos_t = n.z();
    const double a_eff = std::copysign(
        std::sqrt(tensor.a_parallel * tensor.a_parallel * cos_t * cos_t +
                  tensor.a_perpendicular * tensor.a_perpendicular * (1.0 - cos_t * cos_t)),
        tensor.a_parallel);
    if (model == HyperfineModel::FirstOrder || b == 0.0) {
      for (int k = 0; k < mult_n; ++k) p.hyperfine_table[static_cast<std::size_t>(k)][static_cast<std::size_t>(ax)] =
          proj[static_cast<std::size_t>(k)] * a_eff;
      continue;
    }
    // Electron (x) nucleus, electron most significant.
    const Eigen::Matrix3d a_tensor = tensor.a_perpendicular * Eigen::Matrix3d::Identity() +
                                     (tensor.a_parallel - tensor.a_perpendicular) * n * n.transpose();
    ProductSpace ps({2, mult_n});
    const auto s_ops = spin_operators(2);
    const auto i_ops = spin_operators(mult_n);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(ps.total), static_cast<Eigen::Index>(ps.total));
    add_one(h, ps, 0, s_ops[2], -constants.gamma_e * b);
    add_one(h, ps, 1, i_ops[2], -gamma_n * b);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) add_two(h, ps, 0, s_ops[i], 1, i_ops[j], a_tensor(i, j));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success) fail(ErrorCode::Numerical, "hyperfine diagonalization failed");
    // Label each eigenvector by its largest-overlap product state, greedily.
    const Eigen::Index dim = h.rows();
    std::vector<Eigen::Index> label_of_basis(static_cast<std::size_t>(dim), -1);
    std::vector<bool> used(static_cast<std::size_t>(dim), false);
    std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> cand;
    for (Eigen::Index e = 0; e < dim; ++e)
      for (Eigen::Index bb = 0; bb < dim; ++bb) cand.emplace_back(std::norm(es.eigenvectors()(bb, e)), e, bb);
    std::sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) { return std::get<0>(x) > std::get<0>(y); });
    for (const auto& [w, e, bb] : cand) {
      if (used[static_cast<std::size_t>(e)] || label_of_basis[static_cast<std::size_t>(bb)] >= 0) continue;
      used[static_cast<std::size_t>(e)] = true;
      label_of_basis[static_cast<std::size_t>(bb)] = e;
    }
    for (int k = 0; k < mult_n; ++k) {
      const double e_up = es.eigenvalues()(label_of_basis[static_cast<std::size_t>(k)]);
      const double e_dn = es.eigenvalues()(label_of_basis[static_cast<std::size_t>(mult_n + k)]);
      p.hyperfine_table[static_cast<std::size_t>(k)][static_cast<std::size_t>(ax)] =
          (e_up - e_dn) - (-constants.gamma_e * b);
    }
  }
  return p;
}

const char* coupling_model_name(CouplingModel m) {
  switch (m) {
    case CouplingModel::Secular: return "secular";
    case CouplingModel::Projected: return "projected";
    case CouplingModel::Full: return "full";
  }
  return "secular";
}

CouplingModel parse_coupling_model(const std::string& name) {
  if (name == "secular") return CouplingModel::Secular;
  if (name == "projected") return CouplingModel::Projected;
  if (name == "full") return CouplingModel::Full;
  fail(ErrorCode::InvalidArgument, "unknown coupling model '" + name + "'");
}

ClusterHamiltonian build_cluster_hamiltonian(std::span<const ClusterSpin> cluster, std::span<const std::size_t> ids,
                                             const ModelContext& ctx, CouplingModel model) {
  check_cluster(cluster, ctx.p1);
  std::vector<int> dims{2 * ctx.central.spin + 1};
  dims.insert(dims.end(), cluster.size(), 2);
  ProductSpace ps(dims);
  const auto s_ops = spin_operators(dims[0]);
  const auto p_ops = spin_operators(2);
  const auto dim = static_cast<Eigen::Index>(ps.total);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  const Eigen::Matrix3d frame = axis_frame(ctx.central.quantization_axis);
  const double ge = ctx.constants.gamma_e;

  const Eigen::MatrixXcd sz2 = s_ops[2] * s_ops[2];
  add_one(h, ps, 0, sz2, ctx.central.zero_field_splitting);
  add_one(h, ps, 0, s_ops[2], -ge * ctx.field.b_z);

  for (std::size_t i = 0; i < cluster.size(); ++i) {
    const auto& s = cluster[i];
    add_one(h, ps, i + 1, p_ops[2], bath_zeeman(ctx) + ctx.p1.shift(s.nuclear_idx, s.jt_axis));
    const Eigen::Matrix3d t = dipolar_tensor(frame * (s.position - ctx.central_position), ge, ge, ctx.constants);
    add_central_bath(h, ps, i + 1, t, s_ops, p_ops, model);
  }
  for (std::size_t i = 0; i < cluster.size(); ++i)
    for (std::size_t j = i + 1; j < cluster.size(); ++j) {
      const Eigen::Matrix3d t = dipolar_tensor(frame * (cluster[j].position - cluster[i].position), ge, ge, ctx.constants);
      add_bath_pair(h, ps, i + 1, j + 1, t, p_ops, model);
    }

  if (!is_hermitian(h)) fail(ErrorCode::Internal, "assembled cluster Hamiltonian is not Hermitian");
  ClusterHamiltonian out;
  out.dimension = ps.total;
  out.matrix = std::move(h);
  if (ids.empty()) {
    out.spin_index_map.resize(cluster.size());
    for (std::size_t i = 0; i < cluster.size(); ++i) out.spin_index_map[i] = i;
  } else {
    require(ids.size() == cluster.size(), "cluster id list must match cluster size");
    out.spin_index_map.assign(ids.begin(), ids.end());
  }
  return out;
}

Eigen::MatrixXcd central_level_block(std::span<const ClusterSpin> cluster, int m_s, const ModelContext& ctx,
                                     CouplingModel model, std::span<const double> extra_shift, bool remove_zeeman) {
  check_cluster(cluster, ctx.p1);
  require(extra_shift.empty() || extra_shift.size() == cluster.size(), "extra shift must match cluster size");
  ProductSpace ps(std::vector<int>(cluster.size(), 2));
  const auto p_ops = spin_operators(2);
  const auto dim = static_cast<Eigen::Index>(ps.total);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  const Eigen::Matrix3d frame = axis_frame(ctx.central.quantization_axis);
  const double ge = ctx.constants.gamma_e;
  const double zeeman = remove_zeeman ? 0.0 : bath_zeeman(ctx);

  for (std::size_t i = 0; i < cluster.size(); ++i) {
    const auto& s = cluster[i];
    double w = zeeman + ctx.p1.shift(s.nuclear_idx, s.jt_axis);
    if (!extra_shift.empty()) w += extra_shift[i];
    const Eigen::Matrix3d t = dipolar_tensor(frame * (s.position - ctx.central_position), ge, ge, ctx.constants);
    if (model == CouplingModel::Secular) {
      w += m_s * t(2, 2);
    } else {
      add_one(h, ps, i, p_ops[0], m_s * t(2, 0));
      add_one(h, ps, i, p_ops[1], m_s * t(2, 1));
      w += m_s * t(2, 2);
    }
    add_one(h, ps, i, p_ops[2], w);
  }
  for (std::size_t i = 0; i < cluster.size(); ++i)
    for (std::size_t j = i + 1; j < cluster.size(); ++j) {
      const Eigen::Matrix3d t = dipolar_tensor(frame * (cluster[j].position - cluster[i].position), ge, ge, ctx.constants);
      add_bath_pair(h, ps, i, j, t, p_ops, model);
    }
  return h;
}

double bath_pair_jzz(const Vec3& a, const Vec3& b, const ModelContext& ctx) {
  const Vec3 d = b - a;
  const double r = d.norm();
  if (!(r > 0.0)) fail(ErrorCode::Domain, "coincident spins");
  const double c = d.dot(ctx.central.quantization_axis.normalized()) / r;
  return ctx.constants.dipolar_prefactor * (1.0 - 3.0 * c * c) / (r * r * r);
}

std::vector<P1Line> p1_transition_frequencies(const FieldConfig& field, const P1Params& params,
                                              const PhysicalConstants& constants) {
  params.validate();
  const auto proj = nuclear_projections(params.isotope);
  const double total = 4.0 * static_cast<double>(proj.size());
  std::vector<P1Line> lines;
  for (std::size_t k = 0; k < proj.size(); ++k)
    for (int ax = 0; ax < 4; ++ax) {
      const double w = std::abs(-constants.gamma_e * field.b_z + params.shift(static_cast<int>(k), ax));
      lines.push_back({units::rad_per_ms_to_mhz(w), proj[k], ax, 0.0});
    }
  for (auto& l : lines) {
    int same = 0;
    for (const auto& o : lines)
      if (std::abs(o.frequency_mhz - l.frequency_mhz) <= 1e-9 * std::max(1.0, std::abs(l.frequency_mhz))) ++same;
    l.degeneracy_fraction = same / total;
  }
  std::stable_sort(lines.begin(), lines.end(),
                   [](const P1Line& a, const P1Line& b) { return a.frequency_mhz < b.frequency_mhz; });
  return lines;
}

bool is_hermitian(const Eigen::MatrixXcd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = m.cwiseAbs().maxCoeff();
  const double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  return dev <= rel_tol * std::max(scale, std::numeric_limits<double>::min());
}

}  // namespace nvbath
