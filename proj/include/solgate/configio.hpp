#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "solgate/crystal.hpp"
#include "solgate/errors.hpp"
#include "solgate/trap.hpp"
#include "solgate/units.hpp"

// Experiment configuration: structured key-value text (JSON) with explicit
// unit strings ("700 kHz", "0.5 mK"). Everything is converted to the
// dimensionless internal units exactly once, here. Unknown keys are rejected
// with their full path so typos fail loudly instead of silently using a
// default.

namespace solgate {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace configio_detail {

inline double unit_factor(const std::string& unit, const std::string& dimension,
                          const std::string& path) {
  struct Entry { const char* unit; const char* dim; double factor; };
  // frequencies are ordinary (not angular) frequencies in the file
  static const Entry table[] = {
      {"Hz", "frequency", 1.0},      {"kHz", "frequency", 1e3},
      {"MHz", "frequency", 1e6},     {"GHz", "frequency", 1e9},
      {"m", "length", 1.0},          {"mm", "length", 1e-3},
      {"um", "length", 1e-6},        {"nm", "length", 1e-9},
      {"K", "temperature", 1.0},     {"mK", "temperature", 1e-3},
      {"uK", "temperature", 1e-6},   {"s", "time", 1.0},
      {"ms", "time", 1e-3},          {"us", "time", 1e-6},
      {"ns", "time", 1e-9},          {"amu", "mass", 1.0},
      {"rad", "angle", 1.0},         {"deg", "angle", constants::pi / 180.0},
  };
  for (const Entry& e : table)
    if (unit == e.unit && dimension == e.dim) return e.factor;
  throw ConfigError(path + ": unit '" + unit + "' is not a " + dimension +
                    " unit");
}

}  // namespace configio_detail

// Parse "700 kHz" style quantity strings. Returns SI values (frequencies as
// ordinary Hz; conversion to angular happens in the loader). The special unit
// "l0" denotes the dimensionless length unit and is returned as-is with a
// negative sign convention handled by the caller.
inline double parse_quantity(const nlohmann::json& v,
                             const std::string& dimension,
                             const std::string& path, bool* is_l0 = nullptr) {
  if (is_l0) *is_l0 = false;
  if (!v.is_string())
    throw ConfigError(path + ": physical quantities must be strings with "
                      "explicit units, e.g. \"700 kHz\"");
  static const std::regex re(R"(^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([A-Za-z0-9]+)\s*$)");
  std::smatch m;
  const std::string s = v.get<std::string>();
  if (!std::regex_match(s, m, re))
    throw ConfigError(path + ": cannot parse quantity '" + s + "'");
  const double value = std::stod(m[1].str());
  const std::string unit = m[2].str();
  if (unit == "l0" && dimension == "length") {
    if (!is_l0)
      throw ConfigError(path + ": unit 'l0' is not allowed for this field");
    *is_l0 = true;
    return value;
  }
  return value * configio_detail::unit_factor(unit, dimension, path);
}

// Wrapper over one JSON object level that tracks which keys were consumed and
// reports the leftovers.
class ConfigBlock {
 public:
  ConfigBlock(const nlohmann::json& j, std::string path)
      : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_->contains(key); }

  const nlohmann::json& require(const std::string& key) {
    used_.insert(key);
    auto it = j_->find(key);
    if (it == j_->end()) throw ConfigError(path_ + "." + key + ": missing");
    return *it;
  }

  double number(const std::string& key) {
    const nlohmann::json& v = require(key);
    if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
    return v.get<double>();
  }
  double number_or(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }
  long long integer(const std::string& key) {
    const nlohmann::json& v = require(key);
    if (!v.is_number_integer()) throw ConfigError(path_ + "." + key + ": expected an integer");
    return v.get<long long>();
  }
  long long integer_or(const std::string& key, long long fallback) {
    return has(key) ? integer(key) : fallback;
  }
  bool boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const nlohmann::json& v = require(key);
    if (!v.is_boolean()) throw ConfigError(path_ + "." + key + ": expected a boolean");
    return v.get<bool>();
  }
  std::string text(const std::string& key) {
    const nlohmann::json& v = require(key);
    if (!v.is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }
  std::string text_or(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }
  double quantity(const std::string& key, const std::string& dimension,
                  bool* is_l0 = nullptr) {
    return parse_quantity(require(key), dimension, path_ + "." + key, is_l0);
  }
  double quantity_or(const std::string& key, const std::string& dimension,
                     const std::string& fallback) {
    if (has(key)) return quantity(key, dimension);
    return parse_quantity(nlohmann::json(fallback), dimension, path_ + "." + key);
  }
  ConfigBlock block(const std::string& key) {
    return ConfigBlock(require(key), path_ + "." + key);
  }
  const std::string& path() const { return path_; }

  void done() const {
    std::string leftover;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key()))
        leftover += (leftover.empty() ? "" : ", ") + path_ + "." + it.key();
    if (!leftover.empty())
      throw ConfigError("unknown configuration keys: " + leftover);
  }

 private:
  const nlohmann::json* j_;
  std::string path_;
  std::set<std::string> used_;
};

struct GateConfig {
  double heating_rate = 0.0;       // <n> growth per bus-mode period
  double detuning_factor = 0.004;  // epsilon / omega_1
  int n_fock = 10;
  double dt = 0.25;
  int n_samples = 400;
  bool micromotion_harmonics = false;
  double duration_gates = 1.0;     // propagation window in units of t*
  int ideal_power = 1;             // GHZ (1) or EPR at 2 t* (2) target
};

struct HeatingConfig {
  double bath_temperature_kelvin = 5e-4;
  int ensemble = 200;
  double duration_mode_periods = 100.0;
  double dt = 0.1;
  bool cool_localized = true;  // bus + localized lows held at zero amplitude
};

struct TransportConfig {
  std::string protocol = "radial_decrease";  // or "kink_slide"
  std::string excite_mode = "low_localized"; // or "high_localized" / integer index
  int excite_mode_index = -1;
  double n_phonons = 0.0;
  double phase = 0.0;
  double cooling_friction = 0.0;
  double cooling_temperature_kelvin = 0.0;
  double radial_scale_end = 0.72;
  double duration_mode_periods = 200.0;
  int frame_stride = 200;
};

struct ExperimentConfig {
  nlohmann::json raw;  // validated input, echoed into result documents
  UnitSystem units;
  TrapParameters trap;  // dimensionless
  IonSet ions;
  int n_ions = 0;
  std::string ansatz = "zigzag_kink";
  int restarts = 1;
  unsigned long long crystal_seed = 7;
  double laser_wavelength_m = 729e-9;
  double laser_core_budget = 0.01;
  GateConfig gate;
  HeatingConfig heating;
  TransportConfig transport;
  unsigned long long seed = 1;

  double laser_k() const {
    return (2.0 * constants::pi / laser_wavelength_m) * units.length;
  }
};

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

// --set a.b.c=value override; the value is parsed as JSON when possible and
// kept as a string otherwise (so --set trap.radial_frequency="1400 kHz" works
// without inner quoting).
inline void apply_override(nlohmann::json& doc, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + spec + "' is not of the form key=value");
  const std::string key = spec.substr(0, eq);
  const std::string val = spec.substr(eq + 1);
  nlohmann::json parsed = nlohmann::json::parse(val, nullptr, false);
  if (parsed.is_discarded()) parsed = val;
  nlohmann::json* node = &doc;
  size_t start = 0;
  while (true) {
    const size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("override '" + spec + "': empty key segment");
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

inline ExperimentConfig load_experiment_config(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  cfg.raw = doc;
  ConfigBlock root(doc, "config");

  // species first: the unit system is anchored to the lightest species
  ConfigBlock species = root.block("species");
  std::vector<IonSpecies> listed;
  {
    const nlohmann::json& arr = species.require("list");
    if (!arr.is_array() || arr.empty())
      throw ConfigError("config.species.list: expected a non-empty array");
    for (size_t i = 0; i < arr.size(); ++i) {
      ConfigBlock s(arr[i], "config.species.list[" + std::to_string(i) + "]");
      IonSpecies sp;
      sp.mass = parse_quantity(s.require("mass"), "mass", s.path() + ".mass");
      sp.charge = s.number_or("charge", 1.0);
      sp.label = s.text_or("label", "ion");
      s.done();
      listed.push_back(sp);
    }
  }
  const std::string arrangement = species.text_or("arrangement", "uniform");
  species.done();

  ConfigBlock crystal = root.block("crystal");
  cfg.n_ions = static_cast<int>(crystal.integer("n_ions"));
  if (cfg.n_ions < 1) throw ConfigError("config.crystal.n_ions: must be >= 1");
  cfg.ansatz = crystal.text_or("ansatz", "zigzag_kink");
  cfg.restarts = static_cast<int>(crystal.integer_or("restarts", 1));
  cfg.crystal_seed = static_cast<unsigned long long>(crystal.integer_or("seed", 7));
  crystal.done();

  std::vector<IonSpecies> per_ion;
  if (arrangement == "uniform") {
    per_ion.assign(cfg.n_ions, listed.front());
    if (listed.size() > 1)
      throw ConfigError("config.species: uniform arrangement takes one species");
  } else if (arrangement == "alternating") {
    for (int i = 0; i < cfg.n_ions; ++i) per_ion.push_back(listed[i % listed.size()]);
  } else {
    throw ConfigError("config.species.arrangement: unknown value '" + arrangement + "'");
  }
  cfg.ions = make_ion_set(per_ion);

  ConfigBlock trap = root.block("trap");
  const std::string kind = trap.text("kind");
  const double rf_hz = trap.quantity("rf_frequency", "frequency");
  const double omega_rf = 2.0 * constants::pi * rf_hz;
  cfg.units = UnitSystem::make(omega_rf, cfg.ions.ref_mass_amu * constants::atomic_mass,
                               cfg.ions.ref_charge_e * constants::elementary_charge);
  if (kind == "linear_paul") {
    const double radial_hz = trap.quantity("radial_frequency", "frequency");
    const double q_y = trap.number("q_y");
    const double ratio = trap.number("anisotropy_yx");
    cfg.trap = fit_linear_paul_trap(2.0 * constants::pi * radial_hz, q_y,
                                    omega_rf, ratio).trap;
  } else if (kind == "ring_quadrupole" || kind == "linear_multipole") {
    cfg.trap.geometry = kind == "ring_quadrupole" ? TrapGeometry::RingQuadrupole
                                                  : TrapGeometry::LinearMultipole;
    cfg.trap.rf_frequency = omega_rf;
    cfg.trap.radial_frequency = 2.0 * constants::pi *
        trap.quantity("radial_frequency", "frequency") * cfg.units.time;
    cfg.trap.axial_frequency = 2.0 * constants::pi *
        trap.quantity("axial_frequency", "frequency") * cfg.units.time;
    bool is_l0 = false;
    const double r = parse_quantity(trap.require("ring_radius"), "length",
                                    "config.trap.ring_radius", &is_l0);
    cfg.trap.ring_radius_scale = is_l0 ? r : r / cfg.units.length;
    if (kind == "linear_multipole")
      cfg.trap.pole_order = static_cast<int>(trap.integer_or("pole_order", 2));
  } else {
    throw ConfigError("config.trap.kind: unknown value '" + kind + "'");
  }
  trap.done();
  cfg.trap.validate();

  if (root.has("laser")) {
    ConfigBlock laser = root.block("laser");
    cfg.laser_wavelength_m = laser.quantity_or("wavelength", "length", "729 nm");
    cfg.laser_core_budget = laser.number_or("core_budget", 0.01);
    laser.done();
  }

  if (root.has("gate")) {
    ConfigBlock gate = root.block("gate");
    cfg.gate.heating_rate = gate.number_or("heating_rate", 0.0);
    cfg.gate.detuning_factor = gate.number_or("detuning_factor", 0.004);
    cfg.gate.n_fock = static_cast<int>(gate.integer_or("n_fock", 10));
    cfg.gate.dt = gate.number_or("dt", 0.25);
    cfg.gate.n_samples = static_cast<int>(gate.integer_or("n_samples", 400));
    cfg.gate.micromotion_harmonics = gate.boolean_or("micromotion_harmonics", false);
    cfg.gate.duration_gates = gate.number_or("duration_gates", 1.0);
    cfg.gate.ideal_power = static_cast<int>(gate.integer_or("ideal_power", 1));
    gate.done();
  }

  if (root.has("heating")) {
    ConfigBlock h = root.block("heating");
    cfg.heating.bath_temperature_kelvin =
        h.quantity_or("bath_temperature", "temperature", "0.5 mK");
    cfg.heating.ensemble = static_cast<int>(h.integer_or("ensemble", 200));
    cfg.heating.duration_mode_periods = h.number_or("duration_mode_periods", 100.0);
    cfg.heating.dt = h.number_or("dt", 0.1);
    cfg.heating.cool_localized = h.boolean_or("cool_localized", true);
    h.done();
  }

  if (root.has("transport")) {
    ConfigBlock t = root.block("transport");
    cfg.transport.protocol = t.text_or("protocol", "radial_decrease");
    if (cfg.transport.protocol != "radial_decrease" &&
        cfg.transport.protocol != "kink_slide")
      throw ConfigError("config.transport.protocol: unknown value '" +
                        cfg.transport.protocol + "'");
    cfg.transport.excite_mode = t.text_or("excite_mode", "low_localized");
    if (cfg.transport.excite_mode != "low_localized" &&
        cfg.transport.excite_mode != "high_localized") {
      try {
        cfg.transport.excite_mode_index = std::stoi(cfg.transport.excite_mode);
      } catch (const std::exception&) {
        throw ConfigError("config.transport.excite_mode: expected "
                          "'low_localized', 'high_localized', or an index");
      }
    }
    cfg.transport.n_phonons = t.number_or("n_phonons", 0.0);
    cfg.transport.phase = t.number_or("phase", 0.0);
    cfg.transport.cooling_friction = t.number_or("cooling_friction", 0.0);
    cfg.transport.cooling_temperature_kelvin =
        t.quantity_or("cooling_temperature", "temperature", "0 K");
    cfg.transport.radial_scale_end = t.number_or("radial_scale_end", 0.72);
    cfg.transport.duration_mode_periods = t.number_or("duration_mode_periods", 200.0);
    cfg.transport.frame_stride = static_cast<int>(t.integer_or("frame_stride", 200));
    t.done();
  }

  cfg.seed = static_cast<unsigned long long>(root.integer_or("seed", 1));
  root.done();
  return cfg;
}

}  // namespace solgate
