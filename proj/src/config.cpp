// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "gelforce/error.hpp"

namespace gelforce {

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ValidationError("config key '" + key + "': '" + v + "' is not a number");
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError("config key '" + key + "': '" + v + "' is not an integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ValidationError("config key '" + key + "': '" + v + "' is not true or false");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <typename F>
Setter real(F field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = to_double(k, v); };
}
template <typename F>
Setter integer(F field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) {
    field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(to_integer(k, v));
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"unet.input_height", integer([](RunConfig& c) -> int& { return c.unet.input_height; })},
      {"unet.input_width", integer([](RunConfig& c) -> int& { return c.unet.input_width; })},
      {"unet.input_channels", integer([](RunConfig& c) -> int& { return c.unet.input_channels; })},
      {"unet.depth", integer([](RunConfig& c) -> int& { return c.unet.depth; })},
      {"unet.width", integer([](RunConfig& c) -> int& { return c.unet.width; })},
      {"unet.output",
       [](RunConfig& c, const std::string&, const std::string& v) { c.unet.output = parse_resolution(v); }},
      {"unet.upsample", [](RunConfig& c, const std::string&, const std::string& v) { c.unet.upsample = v; }},
      {"train.learning_rate", real([](RunConfig& c) -> double& { return c.train.learning_rate; })},
      {"train.batch_size", integer([](RunConfig& c) -> int& { return c.train.batch_size; })},
      {"train.epochs", integer([](RunConfig& c) -> int& { return c.train.epochs; })},
      {"train.beta1", real([](RunConfig& c) -> double& { return c.train.beta1; })},
      {"train.beta2", real([](RunConfig& c) -> double& { return c.train.beta2; })},
      {"train.epsilon", real([](RunConfig& c) -> double& { return c.train.epsilon; })},
      {"train.plateau_factor", real([](RunConfig& c) -> double& { return c.train.plateau_factor; })},
      {"train.plateau_patience", integer([](RunConfig& c) -> int& { return c.train.plateau_patience; })},
      {"train.min_learning_rate", real([](RunConfig& c) -> double& { return c.train.min_learning_rate; })},
      {"train.plateau_monitor",
       [](RunConfig& c, const std::string&, const std::string& v) { c.train.plateau_monitor = v; }},
      {"train.augment",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.train.augment = to_bool(k, v); }},
      {"train.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const long long s = to_integer(k, v);
         if (s < 0) throw ValidationError("config key '" + k + "' must be non-negative");
         c.train.seed = static_cast<std::uint64_t>(s);
       }},
      {"train.threads", integer([](RunConfig& c) -> int& { return c.train.threads; })},
      {"train.max_steps", integer([](RunConfig& c) -> int& { return c.train.max_steps; })},
      {"train.target_loss", real([](RunConfig& c) -> double& { return c.train.target_loss; })},
      {"augment.noise_max", real([](RunConfig& c) -> double& { return c.train.augmentation.noise_max; })},
      {"augment.brightness", real([](RunConfig& c) -> double& { return c.train.augmentation.brightness; })},
      {"augment.contrast", real([](RunConfig& c) -> double& { return c.train.augmentation.contrast; })},
      {"augment.saturation", real([](RunConfig& c) -> double& { return c.train.augmentation.saturation; })},
      {"augment.hue", real([](RunConfig& c) -> double& { return c.train.augmentation.hue; })},
  };
  return table;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ValidationError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

std::string number(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

RunConfig parse_run_config(std::istream& in, const std::string& source) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ParseError(source + ": " + e.what(), 0, 0);
  }
  RunConfig cfg;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    const std::string key = item.fullname();
    if (item.inputs.size() != 1) throw ValidationError(source + ": config key '" + key + "' needs a single value");
    set_key(cfg, key, item.inputs.front());
  }
  cfg.unet.check();
  cfg.train.check();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path + "'");
  return parse_run_config(in, path);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ValidationError("override '" + assignment + "' is not key=value");
  set_key(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
  cfg.unet.check();
  cfg.train.check();
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& t = c.train;
  const auto& a = t.augmentation;
  return {{"unet", c.unet},
          {"train",
           {{"learning_rate", t.learning_rate},
            {"batch_size", t.batch_size},
            {"epochs", t.epochs},
            {"beta1", t.beta1},
            {"beta2", t.beta2},
            {"epsilon", t.epsilon},
            {"plateau_factor", t.plateau_factor},
            {"plateau_patience", t.plateau_patience},
            {"min_learning_rate", t.min_learning_rate},
            {"plateau_monitor", t.plateau_monitor},
            {"augment", t.augment},
            {"seed", t.seed},
            {"threads", t.threads},
            {"max_steps", t.max_steps},
            {"target_loss", t.target_loss}}},
          {"augment",
           {{"noise_max", a.noise_max},
            {"brightness", a.brightness},
            {"contrast", a.contrast},
            {"saturation", a.saturation},
            {"hue", a.hue}}}};
}

std::string to_toml(const RunConfig& cfg) {
  const nlohmann::json j = to_json(cfg);
  std::ostringstream out;
  for (const char* section : {"unet", "train", "augment"}) {
    out << "[" << section << "]\n";
    for (const auto& [k, v] : j.at(section).items()) {
      out << k << " = ";
      if (v.is_string()) {
        out << '"' << v.get<std::string>() << '"';
      } else if (v.is_boolean()) {
        out << (v.get<bool>() ? "true" : "false");
      } else if (v.is_number_float()) {
        out << number(v.get<double>());
      } else {
        out << v.dump();
      }
      out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return s.str();
}

std::string config_digest(const RunConfig& cfg) {
  nlohmann::json j = to_json(cfg);
  j["train"].erase("threads");  // results do not depend on it
  return sha256_hex(j.dump());
}

}  // namespace gelforce
