#include "nvbath/parameters.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "nvbath/error.hpp"

namespace nvbath {

using nlohmann::json;

namespace {

// MHz values are written with 12 significant digits so that a file read and
// written again is unchanged despite the rad/ms round trip.
double to_mhz(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", units::rad_per_ms_to_mhz(w));
  return std::strtod(buf, nullptr);
}

const char* hyperfine_model_name(HyperfineModel m) { return m == HyperfineModel::Exact ? "exact" : "first_order"; }

HyperfineModel parse_hyperfine_model(const std::string& s) {
  if (s == "exact") return HyperfineModel::Exact;
  if (s == "first_order") return HyperfineModel::FirstOrder;
  fail(ErrorCode::InvalidArgument, "unknown hyperfine model '" + s + "'");
}

json isotope_json(const IsotopeData& d) {
  json j;
  j["a_parallel_mhz"] = to_mhz(d.tensor.a_parallel);
  j["a_perpendicular_mhz"] = to_mhz(d.tensor.a_perpendicular);
  j["gamma_n_rad_per_ms_per_gauss"] = d.gamma_n;
  if (d.table) {
    json rows = json::array();
    for (const auto& row : *d.table) {
      json r = json::array();
      for (double v : row) r.push_back(to_mhz(v));
      rows.push_back(r);
    }
    j["table_mhz"] = rows;
  }
  return j;
}

IsotopeData isotope_from_json(const json& j, const IsotopeData& base) {
  IsotopeData d = base;
  if (j.contains("a_parallel_mhz")) d.tensor.a_parallel = units::mhz_to_rad_per_ms(j.at("a_parallel_mhz").get<double>());
  if (j.contains("a_perpendicular_mhz"))
    d.tensor.a_perpendicular = units::mhz_to_rad_per_ms(j.at("a_perpendicular_mhz").get<double>());
  if (j.contains("gamma_n_rad_per_ms_per_gauss")) d.gamma_n = j.at("gamma_n_rad_per_ms_per_gauss").get<double>();
  if (j.contains("table_mhz")) {
    std::vector<std::array<double, 4>> table;
    for (const auto& r : j.at("table_mhz")) {
      require(r.is_array() && r.size() == 4, "hyperfine table rows need one entry per Jahn-Teller axis");
      std::array<double, 4> row{};
      for (std::size_t k = 0; k < 4; ++k) row[k] = units::mhz_to_rad_per_ms(r[k].get<double>());
      table.push_back(row);
    }
    d.table = table;
  }
  return d;
}

}  // namespace

Params Params::defaults() {
  Params p;
  p.constants = PhysicalConstants::codata();
  p.n15.tensor = {units::mhz_to_rad_per_ms(159.7), units::mhz_to_rad_per_ms(113.8)};
  p.n15.gamma_n = -2.7126;
  p.n14.tensor = {units::mhz_to_rad_per_ms(114.0), units::mhz_to_rad_per_ms(81.3)};
  p.n14.gamma_n = 1.9331;
  return p;
}

void Params::validate() const {
  constants.validate();
  central.validate();
  require(max_expected_spins > 0.0, "max_expected_spins must be positive");
  require(std::isfinite(exclusion_radius), "exclusion radius must be finite");
  for (Isotope iso : {Isotope::N15, Isotope::N14}) {
    const auto& d = isotope(iso);
    if (d.table)
      require(d.table->size() == nuclear_projections(iso).size(),
              std::string("hyperfine table for ") + isotope_name(iso) + " must cover every nuclear projection");
  }
}

P1Params Params::p1(Isotope iso, const FieldConfig& field) const {
  field.validate();
  const auto& d = isotope(iso);
  P1Params p = make_p1_params(iso, d.tensor, d.gamma_n, field, central, constants, hyperfine_model);
  if (d.table) p.hyperfine_table = *d.table;
  p.validate();
  return p;
}

ModelContext Params::context(Isotope iso, const FieldConfig& field) const {
  ModelContext ctx;
  ctx.constants = constants;
  ctx.central = central;
  ctx.p1 = p1(iso, field);
  ctx.field = field;
  return ctx;
}

std::string params_to_json(const Params& p) {
  json j;
  j["schema"] = kParamsSchema;
  j["constants"] = {{"gamma_e_rad_per_ms_per_gauss", p.constants.gamma_e},
                    {"dipolar_prefactor_rad_per_ms_nm3", p.constants.dipolar_prefactor},
                    {"lattice_constant_nm", p.constants.lattice_constant}};
  const Vec3& ax = p.central.quantization_axis;
  j["central_spin"] = {{"zero_field_splitting_mhz", to_mhz(p.central.zero_field_splitting)},
                       {"quantization_axis", {ax.x(), ax.y(), ax.z()}},
                       {"qubit_levels", {p.central.qubit_levels[0], p.central.qubit_levels[1]}}};
  j["p1"] = {{"hyperfine_model", hyperfine_model_name(p.hyperfine_model)},
             {"n15", isotope_json(p.n15)},
             {"n14", isotope_json(p.n14)}};
  j["bath"] = {{"max_expected_spins", p.max_expected_spins}, {"exclusion_radius_nm", p.exclusion_radius}};
  return j.dump(2) + "\n";
}

Params params_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Io, std::string("malformed parameter file: ") + e.what());
  }
  try {
    require(j.value("schema", std::string()) == kParamsSchema,
            std::string("parameter file schema must be ") + kParamsSchema);
    Params p = Params::defaults();
    if (j.contains("constants")) {
      const auto& c = j.at("constants");
      p.constants.gamma_e = c.value("gamma_e_rad_per_ms_per_gauss", p.constants.gamma_e);
      p.constants.dipolar_prefactor = c.value("dipolar_prefactor_rad_per_ms_nm3", p.constants.dipolar_prefactor);
      p.constants.lattice_constant = c.value("lattice_constant_nm", p.constants.lattice_constant);
      p.constants.atomic_density = 8.0 / std::pow(p.constants.lattice_constant, 3);
    }
    if (j.contains("central_spin")) {
      const auto& c = j.at("central_spin");
      if (c.contains("zero_field_splitting_mhz"))
        p.central.zero_field_splitting = units::mhz_to_rad_per_ms(c.at("zero_field_splitting_mhz").get<double>());
      if (c.contains("quantization_axis")) {
        auto v = c.at("quantization_axis").get<std::vector<double>>();
        require(v.size() == 3, "quantization_axis needs three components");
        Vec3 axis(v[0], v[1], v[2]);
        require(axis.norm() > 0.0, "quantization_axis must be nonzero");
        p.central.quantization_axis = axis.normalized();
      }
      if (c.contains("qubit_levels")) {
        auto v = c.at("qubit_levels").get<std::vector<int>>();
        require(v.size() == 2, "qubit_levels needs two entries");
        p.central.qubit_levels = {v[0], v[1]};
      }
    }
    if (j.contains("p1")) {
      const auto& c = j.at("p1");
      if (c.contains("hyperfine_model")) p.hyperfine_model = parse_hyperfine_model(c.at("hyperfine_model").get<std::string>());
      if (c.contains("n15")) p.n15 = isotope_from_json(c.at("n15"), p.n15);
      if (c.contains("n14")) p.n14 = isotope_from_json(c.at("n14"), p.n14);
    }
    if (j.contains("bath")) {
      const auto& c = j.at("bath");
      p.max_expected_spins = c.value("max_expected_spins", p.max_expected_spins);
      p.exclusion_radius = c.value("exclusion_radius_nm", p.exclusion_radius);
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("invalid parameter file: ") + e.what());
  }
}

Params load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open parameter file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return params_from_json(ss.str());
}

void save_params(const std::string& path, const Params& p) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write parameter file " + path);
  out << params_to_json(p);
}

}  // namespace nvbath
