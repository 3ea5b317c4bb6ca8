#include "impact/config.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "impact/errors.hpp"
#include "impact/io.hpp"

namespace impact {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_integer(std::string_view key, std::string_view v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw Error("config key " + std::string(key) + ": invalid integer '" + std::string(v) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  try {
    return parse_double(v);
  } catch (const Error&) {
    throw Error("config key " + std::string(key) + ": invalid number '" + std::string(v) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config key " + std::string(key) + ": invalid boolean '" + std::string(v) + "'");
}

struct Field {
  std::function<void(RunConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class M>
Field text_field(M RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view, std::string_view v) { c.*m = std::string(v); },
          [m](const RunConfig& c) { return std::string(c.*m); }};
}
Field path_field(std::filesystem::path RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view, std::string_view v) { c.*m = std::filesystem::path(std::string(v)); },
          [m](const RunConfig& c) { return (c.*m).generic_string(); }};
}
template <class T>
Field int_field(T RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view k, std::string_view v) { c.*m = parse_integer<T>(k, v); },
          [m](const RunConfig& c) { return std::to_string(c.*m); }};
}
Field real_field(double RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view k, std::string_view v) { c.*m = parse_real(k, v); },
          [m](const RunConfig& c) { return format_double(c.*m); }};
}
Field bool_field(bool RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view k, std::string_view v) { c.*m = parse_bool(k, v); },
          [m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"instrument", text_field(&RunConfig::instrument)},
      {"input", path_field(&RunConfig::input)},
      {"book_input", path_field(&RunConfig::book_input)},
      {"out_dir", path_field(&RunConfig::out_dir)},
      {"ell_max", int_field(&RunConfig::ell_max)},
      {"diffusion_ell_max", int_field(&RunConfig::diffusion_ell_max)},
      {"theta", real_field(&RunConfig::theta)},
      {"tick_size", real_field(&RunConfig::tick_size)},
      {"D0", real_field(&RunConfig::D0)},
      {"D_hf", real_field(&RunConfig::D_hf)},
      {"noise_price_changing_only", bool_field(&RunConfig::noise_price_changing_only)},
      {"scale_lower", real_field(&RunConfig::scale_lower)},
      {"scale_upper", real_field(&RunConfig::scale_upper)},
      {"scale_tolerance", real_field(&RunConfig::scale_tolerance)},
      {"trim_head", int_field(&RunConfig::trim_head)},
      {"trim_tail", int_field(&RunConfig::trim_tail)},
      {"ridge", real_field(&RunConfig::ridge)},
      {"max_condition", real_field(&RunConfig::max_condition)},
      {"allow_absent_types", bool_field(&RunConfig::allow_absent_types)},
      {"identity_tolerance", real_field(&RunConfig::identity_tolerance)},
      {"validation_tolerance", real_field(&RunConfig::validation_tolerance)},
      {"seed", int_field(&RunConfig::seed)},
      {"burn_in", int_field(&RunConfig::burn_in)},
      {"gen_events", int_field(&RunConfig::gen_events)},
      {"gen_sessions", int_field(&RunConfig::gen_sessions)},
      {"gen_sign_law", text_field(&RunConfig::gen_sign_law)},
      {"gen_gamma", real_field(&RunConfig::gen_gamma)},
      {"gen_rho", real_field(&RunConfig::gen_rho)},
      {"gen_gap", real_field(&RunConfig::gen_gap)},
      {"gen_type_probs", text_field(&RunConfig::gen_type_probs)},
  };
  return table;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw Error("unknown config key '" + std::string(key) + "'");
  it->second.set(*this, key, value);
}

std::map<std::string, std::string> RunConfig::entries() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : fields()) out[key] = field.get(*this);
  return out;
}

void RunConfig::validate() const {
  if (ell_max == 0) throw Error("ell_max must be at least 1");
  if (!(D0 >= 0.0) || !(D_hf >= 0.0)) throw Error("D0 and D_hf must be nonnegative");
  if (!(scale_lower > 0.0) || !(scale_upper > scale_lower)) throw Error("scale bounds must satisfy 0 < lower < upper");
  if (!(tick_size > 0.0)) throw Error("tick_size must be positive");
  if (!(ridge >= 0.0)) throw Error("ridge must be nonnegative");
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    config.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return os.str();
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string config_digest(const RunConfig& config) {
  std::string canonical;
  for (const auto& [k, v] : config.entries()) canonical += k + "=" + v + "\n";
  return sha256_hex(canonical);
}

}  // namespace impact
