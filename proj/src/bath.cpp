#include "nvbath/bath.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "nvbath/error.hpp"
#include "nvbath/rng.hpp"
#include "nvbath/textio.hpp"

namespace nvbath {

namespace {

constexpr double kEdgeTol = 1e-9;

// Diamond: FCC lattice plus the same lattice shifted by (1/4, 1/4, 1/4).
constexpr std::array<std::array<double, 3>, 8> kBasis{{{0.0, 0.0, 0.0},
                                                       {0.0, 0.5, 0.5},
                                                       {0.5, 0.0, 0.5},
                                                       {0.5, 0.5, 0.0},
                                                       {0.25, 0.25, 0.25},
                                                       {0.25, 0.75, 0.75},
                                                       {0.75, 0.25, 0.75},
                                                       {0.75, 0.75, 0.25}}};

bool inside(const Vec3& r, double half_t, double radius) {
  return std::abs(r.z()) <= half_t + kEdgeTol && r.x() * r.x() + r.y() * r.y() <= radius * radius;
}

}  // namespace

const char* placement_mode_name(PlacementMode m) { return m == PlacementMode::Lattice ? "lattice" : "continuum"; }

PlacementMode parse_placement_mode(const std::string& s) {
  if (s == "lattice") return PlacementMode::Lattice;
  if (s == "continuum") return PlacementMode::Continuum;
  fail(ErrorCode::InvalidArgument, "unknown placement mode '" + s + "'");
}

void BathGeometry::validate() const {
  require(std::isfinite(density_ppm) && density_ppm > 0.0, "density must be positive");
  require(density_ppm <= 1e6, "density cannot exceed 1e6 ppm");
  require(std::isfinite(thickness) && thickness > 0.0, "thickness must be positive");
  require(std::isfinite(lateral_radius) && lateral_radius > 0.0, "lateral radius must be positive");
}

BathOptions BathOptions::from(const Params& p, Isotope iso) {
  BathOptions o;
  o.isotope = iso;
  o.constants = p.constants;
  o.max_expected_spins = p.max_expected_spins;
  o.exclusion_radius = p.exclusion_radius;
  return o;
}

double ppm_to_number_density(double ppm, const PhysicalConstants& c) {
  require(std::isfinite(ppm) && ppm >= 0.0, "density must be non-negative");
  return ppm * 1e-6 * c.atomic_density;
}

double effective_thickness(double thickness, PlacementMode mode, const PhysicalConstants& c) {
  require(thickness > 0.0, "thickness must be positive");
  if (mode == PlacementMode::Continuum) return thickness;
  const double layer = c.lattice_constant / 4.0;
  const double n_half = std::floor(0.5 * thickness / layer + kEdgeTol / layer);
  return (2.0 * n_half + 1.0) * layer;
}

double default_lateral_radius(double density_ppm, double thickness, double converged_spins, double factor,
                              PlacementMode mode, const PhysicalConstants& c) {
  const double rho = ppm_to_number_density(density_ppm, c);
  require(rho > 0.0, "density must be positive");
  const double t_eff = effective_thickness(thickness, mode, c);
  return std::sqrt(factor * converged_spins / (std::numbers::pi * rho * t_eff));
}

BathConfiguration generate_bath(const BathGeometry& geometry, std::uint64_t seed, const BathOptions& opts) {
  geometry.validate();
  const PhysicalConstants& c = opts.constants;
  const double rho = ppm_to_number_density(geometry.density_ppm, c);
  const double t_eff = effective_thickness(geometry.thickness, geometry.mode, c);
  const double expected = rho * std::numbers::pi * geometry.lateral_radius * geometry.lateral_radius * t_eff;
  if (expected > opts.max_expected_spins)
    fail(ErrorCode::Domain, "bath too large: expected " + fmt_double(expected) + " spins exceeds cap " +
                                fmt_double(opts.max_expected_spins));

  BathConfiguration cfg;
  cfg.geometry = geometry;
  cfg.seed = seed;
  cfg.isotope = opts.isotope;
  const double excl = opts.exclusion_radius > 0.0 ? opts.exclusion_radius : c.bond_length();
  const auto proj = nuclear_projections(opts.isotope);
  const double half_t = 0.5 * geometry.thickness;
  const double radius = geometry.lateral_radius;
  Rng rng(derive_seed(seed, {stream::bath}));

  auto accept = [&](const Vec3& r) {
    if (!inside(r, half_t, radius)) return;
    if (r.norm() <= excl * (1.0 + 1e-9)) return;
    BathSpin s;
    s.position = r;
    s.jt_axis = static_cast<int>(rng.below(4));
    s.nuclear_m = proj[rng.below(proj.size())];
    cfg.spins.push_back(s);
  };

  if (geometry.mode == PlacementMode::Continuum) {
    const std::uint64_t n = rng.poisson(rho * std::numbers::pi * radius * radius * geometry.thickness);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double rr = radius * std::sqrt(rng.uniform());
      const double phi = units::two_pi * rng.uniform();
      const double z = geometry.thickness * (rng.uniform() - 0.5);
      accept(Vec3(rr * std::cos(phi), rr * std::sin(phi), z));
    }
    return cfg;
  }

  const double a = c.lattice_constant;
  const auto lo_xy = static_cast<std::int64_t>(std::floor(-radius / a)) - 1;
  const auto hi_xy = static_cast<std::int64_t>(std::floor(radius / a)) + 1;
  const auto lo_z = static_cast<std::int64_t>(std::floor(-half_t / a)) - 1;
  const auto hi_z = static_cast<std::int64_t>(std::floor(half_t / a)) + 1;
  const auto nxy = static_cast<std::uint64_t>(hi_xy - lo_xy + 1);
  const auto nz = static_cast<std::uint64_t>(hi_z - lo_z + 1);
  const std::uint64_t n_sites = nxy * nxy * nz * kBasis.size();
  const double p = geometry.density_ppm * 1e-6;

  // Independent Bernoulli occupation, visited by geometric gaps between hits.
  const double log_q = std::log1p(-p);
  std::uint64_t idx = 0;
  bool first = true;
  for (;;) {
    std::uint64_t gap = 0;
    if (p < 1.0) {
      const double g = std::floor(std::log(rng.uniform_pos()) / log_q);
      if (g >= static_cast<double>(n_sites)) break;
      gap = static_cast<std::uint64_t>(g);
    }
    if (first) {
      idx = gap;
      first = false;
    } else {
      idx += gap + 1;
    }
    if (idx >= n_sites) break;
    std::uint64_t rem = idx;
    const std::size_t b = rem % kBasis.size();
    rem /= kBasis.size();
    const auto iz = static_cast<std::int64_t>(rem % nz) + lo_z;
    rem /= nz;
    const auto iy = static_cast<std::int64_t>(rem % nxy) + lo_xy;
    const auto ix = static_cast<std::int64_t>(rem / nxy) + lo_xy;
    const Vec3 r(a * (static_cast<double>(ix) + kBasis[b][0]), a * (static_cast<double>(iy) + kBasis[b][1]),
                 a * (static_cast<double>(iz) + kBasis[b][2]));
    accept(r);
  }
  return cfg;
}

BathConfiguration slice_bath(const BathConfiguration& config, double new_thickness) {
  require(std::isfinite(new_thickness) && new_thickness > 0.0, "slice thickness must be positive");
  require(new_thickness <= config.geometry.thickness * (1.0 + 1e-12),
          "slice thickness cannot exceed the bath thickness");
  BathConfiguration out = config;
  out.geometry.thickness = new_thickness;
  out.spins.clear();
  const double half = 0.5 * new_thickness;
  for (const auto& s : config.spins)
    if (std::abs(s.position.z() - config.central_position.z()) <= half + kEdgeTol) out.spins.push_back(s);
  return out;
}

double nearest_neighbor_distance(const BathConfiguration& config) {
  if (config.spins.empty()) fail(ErrorCode::Domain, "no bath spins");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : config.spins) best = std::min(best, (s.position - config.central_position).norm());
  return best;
}

double mean_nn_distance_formula(double density_ppm, const PhysicalConstants& c) {
  const double rho = ppm_to_number_density(density_ppm, c);
  require(rho > 0.0, "density must be positive");
  return 0.554 * std::cbrt(1.0 / rho);
}

std::vector<double> bath_couplings(const BathConfiguration& config, const CentralSpinParams& central,
                                   const PhysicalConstants& constants) {
  std::vector<double> out;
  out.reserve(config.spins.size());
  for (const auto& s : config.spins) out.push_back(secular_azz(config.central_position, s.position, central, constants));
  return out;
}

std::string bath_to_text(const BathConfiguration& config) {
  std::ostringstream o;
  o << "# schema " << kBathSchema << "\n";
  o << "# tool nvbath " << kToolVersion << "\n";
  o << "seed " << config.seed << "\n";
  o << "isotope " << isotope_name(config.isotope) << "\n";
  o << "placement " << placement_mode_name(config.geometry.mode) << "\n";
  o << "density_ppm " << fmt_double(config.geometry.density_ppm) << "\n";
  o << "thickness_nm " << fmt_double(config.geometry.thickness) << "\n";
  o << "lateral_radius_nm " << fmt_double(config.geometry.lateral_radius) << "\n";
  const Vec3& c = config.central_position;
  o << "central " << fmt_double(c.x()) << " " << fmt_double(c.y()) << " " << fmt_double(c.z()) << "\n";
  o << "spins " << config.spins.size() << "\n";
  o << "# x_nm y_nm z_nm jt_axis nuclear_m\n";
  for (const auto& s : config.spins)
    o << fmt_double(s.position.x()) << " " << fmt_double(s.position.y()) << " " << fmt_double(s.position.z()) << " "
      << s.jt_axis << " " << fmt_double(s.nuclear_m) << "\n";
  return o.str();
}

BathConfiguration bath_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  BathConfiguration cfg;
  bool schema_ok = false;
  std::size_t expected = 0;
  bool in_spins = false;
  while (std::getline(in, line)) {
    if (line.rfind("# schema", 0) == 0) {
      schema_ok = split_ws(line).size() == 3 && split_ws(line)[2] == kBathSchema;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (in_spins) {
      if (tok.size() != 5) fail(ErrorCode::Io, "malformed bath spin record: " + line);
      BathSpin s;
      s.position = Vec3(parse_double(tok[0]), parse_double(tok[1]), parse_double(tok[2]));
      s.jt_axis = static_cast<int>(parse_double(tok[3]));
      s.nuclear_m = parse_double(tok[4]);
      if (s.jt_axis < 0 || s.jt_axis > 3) fail(ErrorCode::Io, "jt_axis out of range in bath file");
      nuclear_index(cfg.isotope, s.nuclear_m);
      cfg.spins.push_back(s);
      continue;
    }
    const std::string& key = tok[0];
    auto value = [&](std::size_t i = 1) -> const std::string& {
      if (tok.size() <= i) fail(ErrorCode::Io, "missing value for " + key + " in bath file");
      return tok[i];
    };
    if (key == "seed") cfg.seed = std::stoull(value());
    else if (key == "isotope") cfg.isotope = parse_isotope(value());
    else if (key == "placement") cfg.geometry.mode = parse_placement_mode(value());
    else if (key == "density_ppm") cfg.geometry.density_ppm = parse_double(value());
    else if (key == "thickness_nm") cfg.geometry.thickness = parse_double(value());
    else if (key == "lateral_radius_nm") cfg.geometry.lateral_radius = parse_double(value());
    else if (key == "central")
      cfg.central_position = Vec3(parse_double(value(1)), parse_double(value(2)), parse_double(value(3)));
    else if (key == "spins") {
      expected = std::stoull(value());
      in_spins = true;
    } else
      fail(ErrorCode::Io, "unknown bath file key '" + key + "'");
  }
  if (!schema_ok) fail(ErrorCode::Io, std::string("bath file must declare schema ") + kBathSchema);
  if (!in_spins || cfg.spins.size() != expected) fail(ErrorCode::Io, "bath file spin count mismatch");
  return cfg;
}

void save_bath(const std::string& path, const BathConfiguration& config) { write_file(path, bath_to_text(config)); }

BathConfiguration load_bath(const std::string& path) { return bath_from_text(read_file(path)); }

}  // namespace nvbath
