#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lcslab/build_id.hpp"
#include "lcslab/common.hpp"
#include "lcslab/hard_pair.hpp"
#include "lcslab/rng.hpp"

namespace lcslab::io {

// RFC-4180 field quoting: fields containing separators, quotes, or line
// breaks are wrapped in double quotes with embedded quotes doubled.
inline std::string csv_field(std::string_view raw) {
  const bool needs_quotes = raw.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(raw);
  std::string out;
  out.reserve(raw.size() + 2);
  out.push_back('"');
  for (char c : raw) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += csv_field(fields[i]);
  }
  out += "\r\n";
  return out;
}

// Round-trip exact decimal form; integers print without an exponent.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string output_path;
  std::string format = "csv";  // csv | json | svg
};

inline nlohmann::json config_json(const ExperimentConfig& config) {
  return nlohmann::json{{"experiment", config.experiment},
                        {"params", config.params},
                        {"seed", config.seed},
                        {"output", config.output_path},
                        {"format", config.format}};
}

// Hash of the canonical (sorted-key, no-whitespace) dump, so logically equal
// configs hash equal regardless of field order in the source file.
inline std::uint64_t config_hash(const ExperimentConfig& config) {
  return rng::fnv1a(config_json(config).dump());
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Provenance block every artifact carries: build, config hash, seed, and the
// full resolved config. Comment syntax per format keeps the payload parseable.
inline std::string artifact_header(const ExperimentConfig& config) {
  const std::string hash = hash_hex(config_hash(config));
  const std::string dump = config_json(config).dump();
  if (config.format == "json") return "";  // merged into the document instead
  std::string out;
  const char* lead = config.format == "svg" ? "<!-- " : "# ";
  const char* tail = config.format == "svg" ? " -->\n" : "\n";
  out += lead + std::string("build_id=") + LCSLAB_BUILD_ID + tail;
  out += lead + std::string("config_hash=") + hash + tail;
  out += lead + std::string("seed=") + std::to_string(config.seed) + tail;
  out += lead + std::string("config=") + dump + tail;
  return out;
}

inline nlohmann::json json_meta(const ExperimentConfig& config) {
  return nlohmann::json{{"build_id", LCSLAB_BUILD_ID},
                        {"config_hash", hash_hex(config_hash(config))},
                        {"seed", config.seed},
                        {"config", config_json(config)}};
}

// Atomic publish: write next to the target, then rename over it. Readers see
// either the old file or the complete new one, never a partial write.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  LCSLAB_REQUIRE(!path.empty(), "atomic write: empty path");
  const std::filesystem::path dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    LCSLAB_CHECK_NUMERIC(out.good(), "atomic write: cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    LCSLAB_CHECK_NUMERIC(out.good(), "atomic write: short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline nlohmann::json vector_json(const Eigen::VectorXi& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline nlohmann::json hard_pair_json(const hard_pair::HardPair& hp) {
  return nlohmann::json{{"degree", hp.degree},
                        {"kappa", hp.kappa},
                        {"dim", hp.dim},
                        {"c1", hp.c1},
                        {"lp_value", hp.lp_value},
                        {"trace_gap", hp.trace_gap},
                        {"nodes", vector_json(hp.lambda)},
                        {"x", vector_json(hp.x)},
                        {"x_prime", vector_json(hp.x_prime)},
                        {"multiplicities", vector_json(hp.n)},
                        {"multiplicities_prime", vector_json(hp.n_prime)}};
}

}  // namespace lcslab::io
