#include "nrp/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nrp {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw std::invalid_argument("config: invalid value for " + key + ": '" + value + "' (" +
                              expected + ")");
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  uint64_t out = 0;
  const char* end = value.data() + value.size();
  auto [p, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || p != end) bad_value(key, value, "expected a non-negative integer");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  auto [p, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || p != end) bad_value(key, value, "expected a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "expected true or false");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ConfigKey string_key(const char* name, std::string ExperimentConfig::* field) {
  return {name, [field](ExperimentConfig& c, const std::string& v) { c.*field = v; },
          [field](const ExperimentConfig& c) { return c.*field; }};
}

ConfigKey size_key(const char* name, std::size_t ExperimentConfig::* field) {
  return {name,
          [name, field](ExperimentConfig& c, const std::string& v) {
            c.*field = static_cast<std::size_t>(parse_u64(name, v));
          },
          [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

ConfigKey u32_key(const char* name, uint32_t ExperimentConfig::* field) {
  return {name,
          [name, field](ExperimentConfig& c, const std::string& v) {
            const uint64_t x = parse_u64(name, v);
            if (x > UINT32_MAX) bad_value(name, v, "value too large");
            c.*field = static_cast<uint32_t>(x);
          },
          [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

ConfigKey u64_key(const char* name, uint64_t ExperimentConfig::* field) {
  return {name,
          [name, field](ExperimentConfig& c, const std::string& v) {
            c.*field = parse_u64(name, v);
          },
          [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

ConfigKey double_key(const char* name, double ExperimentConfig::* field) {
  return {name,
          [name, field](ExperimentConfig& c, const std::string& v) {
            c.*field = parse_double(name, v);
          },
          [field](const ExperimentConfig& c) { return fmt_double(c.*field); }};
}

ConfigKey bool_key(const char* name, bool ExperimentConfig::* field) {
  return {name,
          [name, field](ExperimentConfig& c, const std::string& v) {
            c.*field = parse_bool(name, v);
          },
          [field](const ExperimentConfig& c) { return c.*field ? "true" : "false"; }};
}

ConfigKey choice_key(const char* name, std::string ExperimentConfig::* field,
                     std::vector<std::string> choices) {
  return {name,
          [name, field, choices](ExperimentConfig& c, const std::string& v) {
            for (const auto& choice : choices)
              if (v == choice) {
                c.*field = v;
                return;
              }
            std::string expected = "expected one of";
            for (const auto& choice : choices) expected += " " + choice;
            bad_value(name, v, expected.c_str());
          },
          [field](const ExperimentConfig& c) { return c.*field; }};
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      choice_key("model", &ExperimentConfig::model, {"baseline", "nrp"}),
      string_key("train_path", &ExperimentConfig::train_path),
      string_key("valid_path", &ExperimentConfig::valid_path),
      string_key("test_path", &ExperimentConfig::test_path),
      string_key("out_dir", &ExperimentConfig::out_dir),
      size_key("vocab_cap", &ExperimentConfig::vocab_cap),
      size_key("n", &ExperimentConfig::n),
      size_key("m", &ExperimentConfig::m),
      size_key("h", &ExperimentConfig::h),
      u32_key("k", &ExperimentConfig::k),
      u32_key("s", &ExperimentConfig::s),
      choice_key("ri_mode", &ExperimentConfig::ri_mode, {"ternary", "binary"}),
      choice_key("activation", &ExperimentConfig::activation,
                 {"relu", "tanh", "elu", "sigmoid"}),
      double_key("dropout", &ExperimentConfig::dropout),
      bool_key("dropout_output", &ExperimentConfig::dropout_output),
      bool_key("pad_start", &ExperimentConfig::pad_start),
      double_key("lr", &ExperimentConfig::lr),
      double_key("lr_decay", &ExperimentConfig::lr_decay),
      double_key("clip", &ExperimentConfig::clip),
      size_key("patience", &ExperimentConfig::patience),
      size_key("batch", &ExperimentConfig::batch),
      size_key("max_epochs", &ExperimentConfig::max_epochs),
      u64_key("seed", &ExperimentConfig::seed),
      choice_key("precision", &ExperimentConfig::precision, {"f32", "f64"}),
      string_key("kind_list", &ExperimentConfig::kind_list),
      string_key("k_list", &ExperimentConfig::k_list),
      string_key("s_list", &ExperimentConfig::s_list),
      string_key("m_list", &ExperimentConfig::m_list),
      string_key("h_list", &ExperimentConfig::h_list),
      string_key("dropout_list", &ExperimentConfig::dropout_list),
      string_key("mode_list", &ExperimentConfig::mode_list),
      size_key("repetitions", &ExperimentConfig::repetitions),
      size_key("jobs", &ExperimentConfig::jobs),
  };
  return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& def : config_keys())
    if (key == def.name) {
      def.set(cfg, value);
      return;
    }
  throw std::invalid_argument("config: unknown key '" + key + "'");
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text,
                       const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(source_name + ":" + std::to_string(line_no) +
                                  ": expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(source_name + ":" + std::to_string(line_no) + ": empty key");
    try {
      set_config_value(cfg, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(source_name + ":" + std::to_string(line_no) + ": " +
                                  e.what());
    }
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig cfg;
  apply_config_text(cfg, text.str(), path);
  return cfg;
}

std::string render_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& def : config_keys()) out += std::string(def.name) + " = " + def.get(cfg) + "\n";
  return out;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.n < 2) throw std::invalid_argument("config: n must be >= 2");
  if (cfg.m < 1 || cfg.h < 1) throw std::invalid_argument("config: m and h must be >= 1");
  if (cfg.vocab_cap < 1) throw std::invalid_argument("config: vocab_cap must be >= 1");
  if (cfg.model == "nrp") {
    if (cfg.k < 1) throw std::invalid_argument("config: k must be >= 1");
    if (cfg.s < 1) throw std::invalid_argument("config: s must be >= 1");
    if (cfg.s > cfg.k)
      throw std::invalid_argument("config: s (" + std::to_string(cfg.s) + ") exceeds k (" +
                                  std::to_string(cfg.k) + ")");
  }
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw std::invalid_argument("config: dropout must be in [0, 1)");
  validate(train_config_from(cfg));
}

TrainConfig train_config_from(const ExperimentConfig& cfg) {
  TrainConfig tc;
  tc.initial_lr = cfg.lr;
  tc.lr_decay = cfg.lr_decay;
  tc.clip_threshold = cfg.clip;
  tc.patience = cfg.patience;
  tc.batch_size = cfg.batch;
  tc.max_epochs = cfg.max_epochs;
  tc.dropout_p = cfg.dropout;
  tc.dropout_output = cfg.dropout_output;
  tc.seed = cfg.seed;
  return tc;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

SweepSpec sweep_spec_from_config(const ExperimentConfig& cfg) {
  SweepSpec spec;
  for (const auto& kind : split_list(cfg.kind_list))
    spec.kinds.push_back(model_kind_from_string(kind));
  for (const auto& v : split_list(cfg.k_list))
    spec.k_values.push_back(static_cast<uint32_t>(parse_u64("k_list", v)));
  for (const auto& v : split_list(cfg.s_list))
    spec.s_values.push_back(static_cast<uint32_t>(parse_u64("s_list", v)));
  for (const auto& v : split_list(cfg.mode_list)) spec.modes.push_back(ri_mode_from_string(v));
  for (const auto& v : split_list(cfg.m_list))
    spec.m_values.push_back(static_cast<std::size_t>(parse_u64("m_list", v)));
  for (const auto& v : split_list(cfg.h_list))
    spec.h_values.push_back(static_cast<std::size_t>(parse_u64("h_list", v)));
  for (const auto& v : split_list(cfg.dropout_list))
    spec.dropout_values.push_back(parse_double("dropout_list", v));
  if (spec.m_values.empty()) spec.m_values.push_back(cfg.m);
  if (spec.h_values.empty()) spec.h_values.push_back(cfg.h);
  if (spec.dropout_values.empty()) spec.dropout_values.push_back(cfg.dropout);
  spec.repetitions = cfg.repetitions;
  spec.base_seed = cfg.seed;
  spec.n = cfg.n;
  spec.activation = cfg.activation_kind();
  spec.train = train_config_from(cfg);
  spec.jobs = cfg.jobs;
  return spec;
}

}  // namespace nrp
