#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace impact {

/// Pipeline configuration. Files are `key = value` lines; `#` starts a comment.
struct RunConfig {
  std::string instrument;
  std::filesystem::path input;       // classified events CSV
  std::filesystem::path book_input;  // raw book updates CSV for `classify`
  std::filesystem::path out_dir = "impact_out";

  std::size_t ell_max = 256;
  /// Diffusion lags; 0 means ell_max.
  std::size_t diffusion_ell_max = 0;
  double theta = 0.0;
  double tick_size = 1.0;

  double D0 = 0.0;
  double D_hf = 0.0;
  bool noise_price_changing_only = true;

  double scale_lower = 0.1;
  double scale_upper = 10.0;
  double scale_tolerance = 1e-4;

  /// Events dropped at the start and end of every session before estimation.
  std::size_t trim_head = 0;
  std::size_t trim_tail = 0;

  double ridge = 0.0;
  double max_condition = 1e12;
  bool allow_absent_types = false;
  double identity_tolerance = 1e-9;
  double validation_tolerance = 1e-9;

  std::uint64_t seed = 1;
  std::size_t burn_in = 0;

  // synthetic generator (`generate`)
  std::size_t gen_events = 100000;
  std::size_t gen_sessions = 1;
  std::string gen_sign_law = "iid";
  double gen_gamma = 0.5;
  double gen_rho = 0.0;
  double gen_gap = 0.5;
  std::string gen_type_probs = "0.3,0.05,0.25,0.05,0.3,0.05";

  /// Applies one key/value pair; throws Error on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Canonical key/value form, sorted by key.
  [[nodiscard]] std::map<std::string, std::string> entries() const;
  [[nodiscard]] std::size_t diffusion_lags() const { return diffusion_ell_max == 0 ? ell_max : diffusion_ell_max; }
  void validate() const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "IMPACT_CONFIG";

/// SHA-256 hex digest of a byte string.
std::string sha256_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);
/// Digest of the canonical configuration entries.
std::string config_digest(const RunConfig& config);

}  // namespace impact
