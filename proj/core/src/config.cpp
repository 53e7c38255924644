#include "olu/config.hpp"

#include "olu/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace olu {

namespace {

constexpr std::array kExperimentKeys = {
    "seed", "probe_count", "lambda_z", "phase_policy", "window_restart", "interventions",
    "contraction_trials", "contraction_radius", "epsilon", "delta"};
constexpr std::array kStreamKeys = {
    "regime", "dimension", "length", "kappa", "mu", "drift_amplitude", "drift_period",
    "drift_noise", "curvature_drift", "curvature_period", "ridge", "label_drift", "label_period",
    "beta0_scale", "deletion_mode", "deletion_size", "deletion_time", "horizon"};
constexpr std::array kOptimizerKeys = {"eta", "curvature_eps", "gamma_mode", "gamma0", "tau"};

template <std::size_t N>
bool listed(const std::array<const char*, N>& keys, const std::string& k) {
  return std::any_of(keys.begin(), keys.end(), [&](const char* c) { return k == c; });
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

LoadedConfig parse_config(const std::string& text, const ExperimentConfig& base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::ParseError, "config line " + std::to_string(e.line()) + ": " + e.message());
  }

  LoadedConfig out{base, {}};
  for (const auto& [section, body] : tree) {
    if (!body.data().empty())
      throw Error(Errc::InvalidConfig, "key '" + section + "' outside of a section");
    for (const auto& [key, node] : body) {
      const std::string value = trim(node.data());
      const std::string where = "[" + section + "] " + key;
      if (section == "grid") {
        auto values = split_list(value);
        if (values.empty()) throw Error(Errc::InvalidAxis, where + " has no values");
        out.axes.emplace_back(key, std::move(values));
        continue;
      }
      bool ok = false;
      if (section == "experiment") ok = listed(kExperimentKeys, key);
      else if (section == "stream") ok = listed(kStreamKeys, key);
      else if (section == "optimizer") ok = listed(kOptimizerKeys, key);
      else throw Error(Errc::InvalidConfig, "unknown section [" + section + "]");
      if (!ok) throw Error(Errc::InvalidConfig, "unknown key " + where);
      try {
        if (key == "interventions") out.experiment.interventions = split_list(value);
        else apply_axis(out.experiment, key, value);
      } catch (const Error& e) {
        throw Error(Errc::InvalidConfig, where + ": " + e.what());
      }
    }
  }
  // Validate axis names and values up front.
  for (const auto& [name, values] : out.axes)
    for (const auto& v : values) {
      ExperimentConfig probe = out.experiment;
      apply_axis(probe, name, v);
    }
  return out;
}

LoadedConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::InvalidConfig, "cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), base);
}

}  // namespace olu
