#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "solgate/configio.hpp"
#include "solgate/crystal.hpp"
#include "solgate/floquet.hpp"
#include "solgate/orbit.hpp"

// Content-hash-addressed artifact cache. The expensive pipeline stages
// (equilibrium configuration, periodic orbit, Floquet spectrum) are keyed by
// a hash of the configuration subset they depend on, so downstream commands
// reuse them instead of recomputing the mode solve.

namespace solgate {

inline constexpr const char* kCodeVersion = "solgate 1.0.0";

inline std::string content_hash(const nlohmann::json& j) {
  // FNV-1a 64-bit over the canonical dump
  const std::string s = j.dump();
  unsigned long long h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", h);
  return buf;
}

// Configuration subset that determines crystal/orbit/modes artifacts.
inline nlohmann::json pipeline_key(const ExperimentConfig& cfg) {
  nlohmann::json key;
  key["version"] = kCodeVersion;
  for (const char* k : {"trap", "species", "crystal"})
    if (cfg.raw.contains(k)) key[k] = cfg.raw.at(k);
  return key;
}

namespace artifact_detail {

inline nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Eigen::VectorXd vec_from_json(const nlohmann::json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

inline nlohmann::json cvec_to_json(const Eigen::VectorXcd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) {
    a.push_back(v[i].real());
    a.push_back(v[i].imag());
  }
  return a;
}

inline Eigen::VectorXcd cvec_from_json(const nlohmann::json& a) {
  Eigen::VectorXcd v(a.size() / 2);
  for (int i = 0; i < v.size(); ++i)
    v[i] = {a[2 * i].get<double>(), a[2 * i + 1].get<double>()};
  return v;
}

}  // namespace artifact_detail

class ArtifactCache {
 public:
  explicit ArtifactCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path path_for(const std::string& stage,
                                 const std::string& hash) const {
    return dir_ / (stage + "-" + hash + ".json");
  }

  std::optional<nlohmann::json> load(const std::string& stage,
                                     const std::string& hash) const {
    const auto p = path_for(stage, hash);
    std::ifstream in(p);
    if (!in) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
  }

  void store(const std::string& stage, const std::string& hash,
             const nlohmann::json& body) const {
    const auto p = path_for(stage, hash);
    std::ofstream out(p);
    out << body.dump();
  }

 private:
  std::filesystem::path dir_;
};

inline nlohmann::json serialize_crystal(const CrystalConfiguration& c) {
  nlohmann::json j;
  j["positions"] = artifact_detail::vec_to_json(c.positions);
  j["energy"] = c.energy;
  j["gradient_norm"] = c.gradient_norm;
  return j;
}

// Trap and ions are rebuilt from the config, only the solved data is stored.
inline CrystalConfiguration deserialize_crystal(const nlohmann::json& j,
                                                const ExperimentConfig& cfg) {
  CrystalConfiguration c;
  c.trap = cfg.trap;
  c.ions = cfg.ions;
  c.positions = artifact_detail::vec_from_json(j.at("positions"));
  c.energy = j.at("energy").get<double>();
  c.gradient_norm = j.at("gradient_norm").get<double>();
  return c;
}

inline nlohmann::json serialize_orbit(const PeriodicOrbit& o) {
  nlohmann::json j;
  j["n_max"] = o.n_max;
  j["residual"] = o.residual;
  nlohmann::json f = nlohmann::json::array();
  for (const auto& h : o.fourier) f.push_back(artifact_detail::cvec_to_json(h));
  j["fourier"] = f;
  return j;
}

inline PeriodicOrbit deserialize_orbit(const nlohmann::json& j,
                                       const ExperimentConfig& cfg) {
  PeriodicOrbit o;
  o.trap = cfg.trap;
  o.ions = cfg.ions;
  o.n_max = j.at("n_max").get<int>();
  o.residual = j.at("residual").get<double>();
  for (const auto& h : j.at("fourier"))
    o.fourier.push_back(artifact_detail::cvec_from_json(h));
  return o;
}

inline nlohmann::json serialize_modes(const ModeSpectrum& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const FloquetMode& m : s.modes) {
    nlohmann::json jm;
    jm["frequency"] = m.frequency;
    jm["n_max"] = m.n_max;
    nlohmann::json h = nlohmann::json::array();
    for (const auto& u : m.harmonics) h.push_back(artifact_detail::cvec_to_json(u));
    jm["harmonics"] = h;
    arr.push_back(jm);
  }
  return nlohmann::json{{"modes", arr}};
}

inline ModeSpectrum deserialize_modes(const nlohmann::json& j) {
  ModeSpectrum s;
  for (const auto& jm : j.at("modes")) {
    FloquetMode m;
    m.frequency = jm.at("frequency").get<double>();
    m.n_max = jm.at("n_max").get<int>();
    for (const auto& u : jm.at("harmonics"))
      m.harmonics.push_back(artifact_detail::cvec_from_json(u));
    s.modes.push_back(std::move(m));
  }
  return s;
}

// Result document: validated config echo, code version, hashes of cached
// inputs, named scalars, and the CSV files the run emitted. Rerunning with
// the same config and seed reproduces the scalars bit-identically.
class ResultDocument {
 public:
  explicit ResultDocument(const ExperimentConfig& cfg) {
    doc_["version"] = kCodeVersion;
    doc_["config"] = cfg.raw;
    doc_["artifacts"] = nlohmann::json::object();
    doc_["scalars"] = nlohmann::json::object();
    doc_["csv"] = nlohmann::json::array();
  }

  void add_artifact(const std::string& stage, const std::string& hash) {
    doc_["artifacts"][stage] = hash;
  }
  void set_scalar(const std::string& name, double value) {
    doc_["scalars"][name] = value;
  }
  void set_text(const std::string& name, const std::string& value) {
    doc_["scalars"][name] = value;
  }
  void add_csv(const std::string& path) { doc_["csv"].push_back(path); }

  double scalar(const std::string& name) const {
    return doc_.at("scalars").at(name).get<double>();
  }
  const nlohmann::json& json() const { return doc_; }

  void write(const std::filesystem::path& path) const {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out << doc_.dump(2) << "\n";
  }

 private:
  nlohmann::json doc_;
};

inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  out.precision(17);
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

}  // namespace solgate
