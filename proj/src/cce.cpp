#include "nvbath/cce.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "nvbath/error.hpp"
#include "nvbath/parallel.hpp"
#include "nvbath/rng.hpp"
#include "nvbath/textio.hpp"

namespace nvbath {

namespace {

// exp(-i H tau) through a cached eigendecomposition.
struct Propagator {
  Eigen::VectorXd energies;
  Eigen::MatrixXcd vectors;

  explicit Propagator(const Eigen::MatrixXcd& h) {
    if (h.rows() == 1) {
      energies = Eigen::VectorXd::Constant(1, h(0, 0).real());
      vectors = Eigen::MatrixXcd::Identity(1, 1);
      return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success) fail(ErrorCode::Numerical, "eigendecomposition failed");
    energies = es.eigenvalues();
    vectors = es.eigenvectors();
  }

  Eigen::VectorXcd phases(double tau) const {
    Eigen::VectorXcd p(energies.size());
    for (Eigen::Index i = 0; i < energies.size(); ++i) p[i] = std::polar(1.0, -energies[i] * tau);
    return p;
  }

  template <class M>
  void apply(M& x, double tau) const {
    Eigen::MatrixXcd y = vectors.adjoint() * x;
    y = phases(tau).asDiagonal() * y;
    x = vectors * y;
  }

  Eigen::MatrixXcd matrix(double tau) const { return vectors * phases(tau).asDiagonal() * vectors.adjoint(); }
};

std::vector<double> segment_fractions(const PulseSequence& seq) {
  std::vector<double> out;
  double prev = 0.0;
  for (double f : seq.pi_pulse_fractions) {
    out.push_back(f - prev);
    prev = f;
  }
  out.push_back(1.0 - prev);
  return out;
}

std::size_t product_index(std::span<const double> pz) {
  std::size_t b = 0;
  for (double p : pz) b = 2 * b + (p > 0.0 ? 0 : 1);
  return b;
}

int central_index(int m_s) { return 1 - m_s; }

// Central spin in the full 3 x 2^k space: state columns are propagated
// together, pulses swap the two qubit levels.
std::vector<Complex> dense_coherence(const Eigen::MatrixXcd& h, std::size_t n_bath, const CentralSpinParams& central,
                                     std::span<const double> pz, const PulseSequence& seq,
                                     std::span<const double> times) {
  const auto nb = static_cast<Eigen::Index>(std::size_t{1} << n_bath);
  const Eigen::Index q0 = central_index(central.qubit_levels[0]) * nb;
  const Eigen::Index q1 = central_index(central.qubit_levels[1]) * nb;
  const Propagator prop(h);
  const auto frac = segment_fractions(seq);
  const bool mixed = pz.empty();
  const Eigen::Index cols = mixed ? nb : 1;
  Eigen::MatrixXcd psi0 = Eigen::MatrixXcd::Zero(h.rows(), cols);
  const double amp = 1.0 / std::sqrt(2.0);
  if (mixed) {
    for (Eigen::Index b = 0; b < nb; ++b) {
      psi0(q0 + b, b) = amp;
      psi0(q1 + b, b) = amp;
    }
  } else {
    const auto b = static_cast<Eigen::Index>(product_index(pz));
    psi0(q0 + b, 0) = amp;
    psi0(q1 + b, 0) = amp;
  }
  std::vector<Complex> out(times.size());
  for (std::size_t it = 0; it < times.size(); ++it) {
    Eigen::MatrixXcd psi = psi0;
    for (std::size_t s = 0; s < frac.size(); ++s) {
      if (s > 0) {
        Eigen::MatrixXcd a = psi.middleRows(q0, nb);
        psi.middleRows(q0, nb) = psi.middleRows(q1, nb);
        psi.middleRows(q1, nb) = a;
      }
      prop.apply(psi, frac[s] * times[it]);
    }
    Complex acc = 0.0;
    for (Eigen::Index c = 0; c < cols; ++c)
      acc += (psi.col(c).segment(q1, nb).adjoint() * psi.col(c).segment(q0, nb))(0, 0);
    out[it] = 2.0 * acc / static_cast<double>(cols);
  }
  return out;
}

std::vector<Complex> dense_with_free_phase_removed(std::span<const ClusterSpin> cluster, std::span<const double> pz,
                                                   const PulseSequence& seq, const ModelContext& ctx,
                                                   std::span<const double> times, CouplingModel model) {
  const auto h = build_cluster_hamiltonian(cluster, {}, ctx, model);
  auto l = dense_coherence(h.matrix, cluster.size(), ctx.central, pz, seq, times);
  const auto h0 = build_cluster_hamiltonian({}, {}, ctx, model);
  const auto free = dense_coherence(h0.matrix, 0, ctx.central, {}, seq, times);
  for (std::size_t i = 0; i < l.size(); ++i) l[i] /= free[i];
  return l;
}

struct ClusterHash {
  std::size_t operator()(const Cluster& c) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (auto v : c) h = splitmix64(h ^ v);
    return static_cast<std::size_t>(h);
  }
};

std::vector<ClusterSpin> cluster_spins(const BathConfiguration& config, const BathState& st, const Cluster& c) {
  std::vector<ClusterSpin> out;
  out.reserve(c.size());
  for (auto i : c) out.push_back({config.spins[i].position, st.nuclear_idx[i], st.jt_axis[i]});
  return out;
}

void describe(CoherenceCurve& curve, const BathConfiguration& config, const CCEConfig& cce, const PulseSequence& seq,
              const ModelContext& ctx, std::uint64_t seed, double radius) {
  curve.set_meta("sequence", sequence_name(seq));
  curve.set_meta("order", std::to_string(cce.order));
  curve.set_meta("dipole_radius_nm", fmt_double(radius));
  curve.set_meta("n_bath_states", std::to_string(cce.n_bath_states));
  curve.set_meta("coupling_model", coupling_model_name(cce.model));
  curve.set_meta("bath_state_mode", bath_state_mode_name(cce.state_mode));
  curve.set_meta("frozen_nuclear", cce.frozen_nuclear ? "1" : "0");
  curve.set_meta("mean_field", cce.mean_field ? "1" : "0");
  curve.set_meta("field_gauss", fmt_double(ctx.field.b_z));
  curve.set_meta("isotope", isotope_name(ctx.p1.isotope));
  curve.set_meta("bath_seed", std::to_string(config.seed));
  curve.set_meta("state_seed", std::to_string(seed));
  curve.set_meta("n_spins", std::to_string(config.spins.size()));
}

int effective_states(const CCEConfig& cce) {
  return (cce.state_mode == BathStateMode::Mixed && cce.frozen_nuclear) ? 1 : cce.n_bath_states;
}

BathState state_for(const BathConfiguration& config, const CCEConfig& cce, std::uint64_t seed, int s) {
  return sample_bath_state(config, seed, static_cast<std::uint64_t>(s), cce.frozen_nuclear);
}

}  // namespace

void PulseSequence::validate() const {
  double prev = 0.0;
  for (double f : pi_pulse_fractions) {
    require(f > prev && f < 1.0, "pi pulse fractions must be strictly increasing inside (0, 1)");
    prev = f;
  }
}

const char* sequence_name(const PulseSequence& s) {
  switch (s.kind) {
    case SequenceKind::Ramsey: return "ramsey";
    case SequenceKind::HahnEcho: return "hahn";
    case SequenceKind::Custom: return "custom";
  }
  return "custom";
}

PulseSequence parse_sequence(const std::string& name) {
  if (name == "ramsey") return PulseSequence::ramsey();
  if (name == "hahn" || name == "hahn_echo" || name == "echo") return PulseSequence::hahn_echo();
  fail(ErrorCode::InvalidArgument, "unknown pulse sequence '" + name + "' (expected ramsey or hahn)");
}

const char* bath_state_mode_name(BathStateMode m) { return m == BathStateMode::Sampled ? "sampled" : "mixed"; }

BathStateMode parse_bath_state_mode(const std::string& s) {
  if (s == "sampled") return BathStateMode::Sampled;
  if (s == "mixed") return BathStateMode::Mixed;
  fail(ErrorCode::InvalidArgument, "unknown bath state mode '" + s + "'");
}

void CCEConfig::validate() const {
  require(order >= 1, "CCE order must be at least 1");
  require(n_bath_states >= 1, "number of bath states must be at least 1");
  require(!time_grid.empty(), "time grid must not be empty");
  require(time_grid.front() >= 0.0, "time grid must start at or after 0");
  for (std::size_t i = 1; i < time_grid.size(); ++i)
    require(time_grid[i] > time_grid[i - 1], "time grid must be strictly increasing");
  require(division_floor >= 0.0, "division floor must be non-negative");
  require(max_clusters >= 1, "cluster cap must be positive");
}

void CoherenceCurve::set_meta(const std::string& key, const std::string& value) {
  for (auto& kv : metadata)
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  metadata.emplace_back(key, value);
}

std::string CoherenceCurve::meta(const std::string& key) const {
  for (const auto& kv : metadata)
    if (kv.first == key) return kv.second;
  return {};
}

std::string curve_to_text(const CoherenceCurve& c) {
  std::ostringstream o;
  o << "# schema " << kCurveSchema << "\n";
  o << "# tool nvbath " << kToolVersion << "\n";
  for (const auto& [k, v] : c.metadata) o << "# " << k << " = " << v << "\n";
  o << "time_ms,re_L,im_L\n";
  for (std::size_t i = 0; i < c.times.size(); ++i)
    o << fmt_double(c.times[i]) << "," << fmt_double(c.values[i].real()) << "," << fmt_double(c.values[i].imag())
      << "\n";
  return o.str();
}

CoherenceCurve curve_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CoherenceCurve c;
  bool schema_ok = false;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto tok = split_ws(line);
      if (tok.size() >= 3 && tok[1] == "schema") schema_ok = tok[2] == kCurveSchema;
      const auto eq = line.find(" = ");
      if (eq != std::string::npos && line.size() > 2) c.set_meta(line.substr(2, eq - 2), line.substr(eq + 3));
      continue;
    }
    if (!header) {
      if (line != "time_ms,re_L,im_L") fail(ErrorCode::Io, "curve file missing column header");
      header = true;
      continue;
    }
    std::array<std::string, 3> f;
    std::size_t start = 0;
    for (int k = 0; k < 3; ++k) {
      const auto pos = line.find(',', start);
      if ((k < 2) != (pos != std::string::npos)) fail(ErrorCode::Io, "malformed curve row: " + line);
      f[static_cast<std::size_t>(k)] = line.substr(start, k < 2 ? pos - start : std::string::npos);
      start = pos + 1;
    }
    c.times.push_back(parse_double(f[0]));
    c.values.emplace_back(parse_double(f[1]), parse_double(f[2]));
  }
  if (!schema_ok) fail(ErrorCode::Io, std::string("curve file must declare schema ") + kCurveSchema);
  return c;
}

void save_curve(const std::string& path, const CoherenceCurve& c) { write_file(path, curve_to_text(c)); }

CoherenceCurve load_curve(const std::string& path) { return curve_from_text(read_file(path)); }

StrongWeakPartition partition_strong_weak(std::span<const double> a_z) {
  const std::size_t n = a_z.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return std::abs(a_z[x]) > std::abs(a_z[y]); });
  // rest[i]: A_bath^2 of the spins after position i in the sorted order,
  // summed from the small end so tiny tails are not lost.
  std::vector<double> rest(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) rest[i] = rest[i + 1] + 0.25 * a_z[order[i]] * a_z[order[i]];
  StrongWeakPartition p;
  std::size_t k = 0;
  for (; k < n; ++k) {
    const double a = std::abs(a_z[order[k]]);
    const double bath = std::sqrt(rest[k + 1]);
    if (0.5 * a >= units::two_pi * bath / std::sqrt(2.0))
      p.strong.push_back({order[k], a_z[order[k]]});
    else
      break;
  }
  for (std::size_t i = k; i < n; ++i) p.weak.push_back(order[i]);
  std::sort(p.weak.begin(), p.weak.end());
  p.a_bath = std::sqrt(rest[k]);
  p.t2_star = p.a_bath > 0.0 ? std::sqrt(2.0) / p.a_bath : std::numeric_limits<double>::infinity();
  return p;
}

StrongWeakPartition partition_strong_weak(const BathConfiguration& config, const CentralSpinParams& central,
                                          const PhysicalConstants& constants) {
  const auto a = bath_couplings(config, central, constants);
  return partition_strong_weak(a);
}

CoherenceCurve ramsey_cce1_analytic(const BathConfiguration& config, const CentralSpinParams& central,
                                    const PhysicalConstants& constants, std::span<const double> times) {
  const auto part = partition_strong_weak(config, central, constants);
  CoherenceCurve c;
  c.times.assign(times.begin(), times.end());
  c.values.reserve(times.size());
  for (double t : times) {
    double v = std::isinf(part.t2_star) ? 1.0 : std::exp(-(t / part.t2_star) * (t / part.t2_star));
    for (const auto& s : part.strong) v *= std::cos(0.5 * s.a_z * t);
    c.values.emplace_back(v, 0.0);
  }
  c.set_meta("sequence", "ramsey");
  c.set_meta("route", "cce1_analytic");
  c.set_meta("n_strong", std::to_string(part.strong.size()));
  c.set_meta("a_bath_rad_per_ms", fmt_double(part.a_bath));
  c.set_meta("t2_star_ms", fmt_double(part.t2_star));
  c.set_meta("bath_seed", std::to_string(config.seed));
  return c;
}

std::vector<Complex> ramsey_exact_product(std::span<const double> a_z, std::span<const double> times) {
  std::vector<Complex> out;
  out.reserve(times.size());
  for (double t : times) {
    double v = 1.0;
    for (double a : a_z) v *= std::cos(0.5 * a * t);
    out.emplace_back(v, 0.0);
  }
  return out;
}

std::vector<Cluster> enumerate_clusters(std::span<const Vec3> positions, int order, double dipole_radius,
                                        std::size_t max_clusters) {
  require(order >= 1, "CCE order must be at least 1");
  const std::size_t n = positions.size();
  std::vector<Cluster> out;
  auto push = [&](Cluster c) {
    if (out.size() >= max_clusters) fail(ErrorCode::Domain, "cluster explosion: reduce radius or order");
    out.push_back(std::move(c));
  };
  if (order == 1) {
    for (std::size_t i = 0; i < n; ++i) push({static_cast<std::uint32_t>(i)});
    return out;
  }
  std::vector<std::vector<std::uint32_t>> nbr(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((positions[i] - positions[j]).norm() <= dipole_radius) {
        nbr[i].push_back(static_cast<std::uint32_t>(j));
        nbr[j].push_back(static_cast<std::uint32_t>(i));
      }

  // ESU: every connected vertex set is reached exactly once from its
  // smallest vertex by extending only through exclusive neighbours.
  std::vector<char> in_sub(n, 0), near_sub(n, 0);
  Cluster sub;
  auto extend = [&](auto&& self, std::vector<std::uint32_t> ext, std::uint32_t v) -> void {
    push(sub);
    if (static_cast<int>(sub.size()) == order) return;
    while (!ext.empty()) {
      const std::uint32_t w = ext.back();
      ext.pop_back();
      std::vector<std::uint32_t> ext2 = ext;
      std::vector<std::uint32_t> added;
      for (auto u : nbr[w])
        if (u > v && !in_sub[u] && !near_sub[u]) {
          ext2.push_back(u);
          added.push_back(u);
        }
      // Mark the new vertex and its neighbourhood for deeper levels.
      std::vector<std::uint32_t> marked;
      in_sub[w] = 1;
      for (auto u : nbr[w])
        if (!near_sub[u]) {
          near_sub[u] = 1;
          marked.push_back(u);
        }
      sub.push_back(w);
      self(self, std::move(ext2), v);
      sub.pop_back();
      in_sub[w] = 0;
      for (auto u : marked) near_sub[u] = 0;
    }
  };
  for (std::size_t vi = 0; vi < n; ++vi) {
    const auto v = static_cast<std::uint32_t>(vi);
    std::vector<std::uint32_t> ext;
    for (auto u : nbr[v])
      if (u > v) ext.push_back(u);
    in_sub[v] = 1;
    std::vector<std::uint32_t> marked;
    for (auto u : nbr[v])
      if (!near_sub[u]) {
        near_sub[u] = 1;
        marked.push_back(u);
      }
    sub.assign(1, v);
    extend(extend, std::move(ext), v);
    in_sub[v] = 0;
    for (auto u : marked) near_sub[u] = 0;
  }
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

BathState frozen_bath_state(const BathConfiguration& config) {
  BathState st;
  for (const auto& s : config.spins) {
    st.nuclear_idx.push_back(nuclear_index(config.isotope, s.nuclear_m));
    st.jt_axis.push_back(s.jt_axis);
    st.pz.push_back(0.5);
  }
  return st;
}

BathState sample_bath_state(const BathConfiguration& config, std::uint64_t seed, std::uint64_t index,
                            bool frozen_nuclear) {
  BathState st = frozen_bath_state(config);
  Rng rng(derive_seed(seed, {stream::bath_state, index}));
  const auto mult = nuclear_projections(config.isotope).size();
  for (std::size_t i = 0; i < config.spins.size(); ++i) {
    st.pz[i] = rng.below(2) == 0 ? 0.5 : -0.5;
    const int nuc = static_cast<int>(rng.below(mult));
    const int axis = static_cast<int>(rng.below(4));
    if (!frozen_nuclear) {
      st.nuclear_idx[i] = nuc;
      st.jt_axis[i] = axis;
    }
  }
  return st;
}

std::vector<Complex> cluster_contribution(std::span<const ClusterSpin> cluster, std::span<const double> pz,
                                          const PulseSequence& sequence, const ModelContext& ctx,
                                          std::span<const double> times, CouplingModel model,
                                          std::span<const double> extra_shift) {
  sequence.validate();
  require(pz.empty() || pz.size() == cluster.size(), "bath state must cover every cluster member");
  require(cluster.size() <= 20, "cluster too large for exact propagation");
  if (model == CouplingModel::Full) {
    require(extra_shift.empty(), "mean-field shifts are not supported with the full coupling model");
    return dense_with_free_phase_removed(cluster, pz, sequence, ctx, times, model);
  }
  const bool drop_zeeman = model == CouplingModel::Secular;
  const Propagator p0(central_level_block(cluster, ctx.central.qubit_levels[0], ctx, model, extra_shift, drop_zeeman));
  const Propagator p1(central_level_block(cluster, ctx.central.qubit_levels[1], ctx, model, extra_shift, drop_zeeman));
  const auto frac = segment_fractions(sequence);
  const bool odd = sequence.pi_pulse_fractions.size() % 2 == 1;
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << cluster.size());
  std::vector<Complex> out(times.size());

  if (pz.empty() && frac.size() == 1) {
    // Tr(U1^dag U0)/d = sum_jk |W_jk|^2 exp(i(e1_j - e0_k)t)/d with W = V1^dag V0.
    const Eigen::MatrixXd w2 = (p1.vectors.adjoint() * p0.vectors).cwiseAbs2();
    for (std::size_t it = 0; it < times.size(); ++it) {
      Complex acc = 0.0;
      for (Eigen::Index j = 0; j < dim; ++j)
        for (Eigen::Index k = 0; k < dim; ++k)
          acc += w2(j, k) * std::polar(1.0, (p1.energies[j] - p0.energies[k]) * times[it]);
      out[it] = acc / static_cast<double>(dim);
    }
    return out;
  }

  if (pz.empty()) {
    for (std::size_t it = 0; it < times.size(); ++it) {
      Eigen::MatrixXcd u0 = Eigen::MatrixXcd::Identity(dim, dim);
      Eigen::MatrixXcd u1 = u0;
      for (std::size_t s = 0; s < frac.size(); ++s) {
        const double tau = frac[s] * times[it];
        const bool even = s % 2 == 0;
        u0 = (even ? p0 : p1).matrix(tau) * u0;
        u1 = (even ? p1 : p0).matrix(tau) * u1;
      }
      const Complex tr = odd ? (u0.adjoint() * u1).trace() : (u1.adjoint() * u0).trace();
      out[it] = tr / static_cast<double>(dim);
    }
    return out;
  }

  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(dim);
  b[static_cast<Eigen::Index>(product_index(pz))] = 1.0;
  for (std::size_t it = 0; it < times.size(); ++it) {
    Eigen::VectorXcd v0 = b;
    Eigen::VectorXcd v1 = b;
    for (std::size_t s = 0; s < frac.size(); ++s) {
      const double tau = frac[s] * times[it];
      const bool even = s % 2 == 0;
      (even ? p0 : p1).apply(v0, tau);
      (even ? p1 : p0).apply(v1, tau);
    }
    out[it] = odd ? v0.dot(v1) : v1.dot(v0);
  }
  return out;
}

CoherenceCurve cce_coherence(const BathConfiguration& config, const CCEConfig& cce, const PulseSequence& sequence,
                             const ModelContext& ctx, std::uint64_t seed, CCEStats* stats) {
  cce.validate();
  sequence.validate();
  const std::size_t n = config.spins.size();
  const std::size_t nt = cce.time_grid.size();
  const double radius =
      cce.dipole_radius > 0.0 ? cce.dipole_radius : default_dipole_radius(config.geometry.density_ppm, ctx.constants);
  std::vector<Vec3> pos;
  pos.reserve(n);
  for (const auto& s : config.spins) pos.push_back(s.position);
  const auto clusters = enumerate_clusters(pos, cce.order, radius, cce.max_clusters);

  std::unordered_map<Cluster, std::size_t, ClusterHash> index;
  index.reserve(clusters.size() * 2);
  for (std::size_t c = 0; c < clusters.size(); ++c) index.emplace(clusters[c], c);
  std::vector<std::vector<std::size_t>> subs(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& cl = clusters[c];
    const std::size_t k = cl.size();
    if (k < 2) continue;
    for (std::uint32_t mask = 1; mask + 1 < (1u << k); ++mask) {
      Cluster s;
      for (std::size_t b = 0; b < k; ++b)
        if (mask & (1u << b)) s.push_back(cl[b]);
      auto it = index.find(s);
      if (it != index.end()) subs[c].push_back(it->second);
    }
  }

  const bool mixed = cce.state_mode == BathStateMode::Mixed;
  const bool use_mf = !mixed && cce.mean_field && cce.model != CouplingModel::Full;
  const int n_states = effective_states(cce);
  std::vector<Complex> total(nt, Complex(0.0));
  std::size_t floored = 0;
  std::vector<std::vector<Complex>> vals(clusters.size());

  for (int s = 0; s < n_states; ++s) {
    const BathState st = state_for(config, cce, seed, s);
    std::vector<double> field(use_mf ? n : 0, 0.0);
    if (use_mf)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) field[i] += bath_pair_jzz(pos[i], pos[j], ctx) * st.pz[j];

    parallel_for(clusters.size(), cce.threads, [&](std::size_t c) {
      const auto& cl = clusters[c];
      const auto spins = cluster_spins(config, st, cl);
      std::vector<double> pz, extra;
      if (!mixed)
        for (auto i : cl) pz.push_back(st.pz[i]);
      if (use_mf) {
        for (auto i : cl) {
          double h = field[i];
          for (auto j : cl)
            if (j != i) h -= bath_pair_jzz(pos[i], pos[j], ctx) * st.pz[j];
          extra.push_back(h);
        }
      }
      try {
        vals[c] = cluster_contribution(spins, pz, sequence, ctx, cce.time_grid, cce.model, extra);
      } catch (const Error& e) {
        std::string ids;
        for (auto i : cl) ids += (ids.empty() ? "" : ",") + std::to_string(i);
        fail(e.code(), std::string(e.what()) + " (cluster " + ids + ")");
      }
    });

    // Irreducible contributions in size order, so every subcluster is final.
    std::vector<Complex> prod(nt, Complex(1.0));
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      auto& v = vals[c];
      bool hit = false;
      if (!subs[c].empty()) {
        for (std::size_t t = 0; t < nt; ++t) {
          Complex den = 1.0;
          for (auto sc : subs[c]) den *= vals[sc][t];
          if (std::abs(den) < cce.division_floor) {
            v[t] = 1.0;
            hit = true;
          } else {
            v[t] /= den;
          }
        }
      }
      if (hit) ++floored;
      for (std::size_t t = 0; t < nt; ++t) prod[t] *= v[t];
    }
    for (std::size_t t = 0; t < nt; ++t) total[t] += prod[t];
  }

  CoherenceCurve curve;
  curve.times = cce.time_grid;
  curve.values.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) curve.values[t] = total[t] / static_cast<double>(n_states);
  describe(curve, config, cce, sequence, ctx, seed, radius);
  const std::size_t contributions = clusters.size() * static_cast<std::size_t>(n_states);
  curve.set_meta("route", "cce");
  curve.set_meta("n_clusters", std::to_string(clusters.size()));
  curve.set_meta("floored_contributions", std::to_string(floored));
  if (contributions > 0 && static_cast<double>(floored) > 0.01 * static_cast<double>(contributions))
    curve.set_meta("warning", "more than 1% of cluster contributions hit the division floor");
  if (stats) *stats = {clusters.size(), floored, contributions};
  return curve;
}

CoherenceCurve exact_coherence(const BathConfiguration& config, const CCEConfig& cce, const PulseSequence& sequence,
                               const ModelContext& ctx, std::uint64_t seed) {
  cce.validate();
  sequence.validate();
  require(config.spins.size() <= 10, "exact propagation is limited to 10 bath spins");
  const bool mixed = cce.state_mode == BathStateMode::Mixed;
  const int n_states = effective_states(cce);
  const std::size_t nt = cce.time_grid.size();
  std::vector<Complex> total(nt, Complex(0.0));
  const auto h0 = build_cluster_hamiltonian({}, {}, ctx, cce.model);
  const auto free = dense_coherence(h0.matrix, 0, ctx.central, {}, sequence, cce.time_grid);
  for (int s = 0; s < n_states; ++s) {
    const BathState st = state_for(config, cce, seed, s);
    std::vector<std::size_t> all(config.spins.size());
    std::iota(all.begin(), all.end(), 0);
    Cluster cl(all.begin(), all.end());
    const auto spins = cluster_spins(config, st, cl);
    const auto h = build_cluster_hamiltonian(spins, all, ctx, cce.model);
    std::vector<double> pz = mixed ? std::vector<double>{} : st.pz;
    const auto l = dense_coherence(h.matrix, spins.size(), ctx.central, pz, sequence, cce.time_grid);
    for (std::size_t t = 0; t < nt; ++t) total[t] += l[t] / free[t];
  }
  CoherenceCurve curve;
  curve.times = cce.time_grid;
  curve.values.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) curve.values[t] = total[t] / static_cast<double>(n_states);
  describe(curve, config, cce, sequence, ctx, seed, 0.0);
  curve.set_meta("route", "exact");
  return curve;
}

double default_dipole_radius(double density_ppm, const PhysicalConstants& c) {
  const double rho = ppm_to_number_density(density_ppm, c);
  require(rho > 0.0, "density must be positive");
  return 1.5 * std::cbrt(1.0 / rho);
}

std::vector<double> default_ramsey_grid(double a_bath) {
  const double t_max = a_bath > 0.0 ? 5.0 * std::sqrt(2.0) / a_bath : 1.0;
  std::vector<double> g(200);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = t_max * static_cast<double>(i) / 199.0;
  return g;
}

std::vector<double> default_hahn_grid(double density_ppm, int points) {
  require(density_ppm > 0.0, "density must be positive");
  require(points >= 2, "time grid needs at least two points");
  const double t_hi = 10.0 * 0.16 / density_ppm;
  const double t_lo = t_hi * 1e-3;
  std::vector<double> g{0.0};
  for (int i = 0; i < points; ++i)
    g.push_back(t_lo * std::pow(10.0, 3.0 * static_cast<double>(i) / (points - 1)));
  return g;
}

}  // namespace nvbath
