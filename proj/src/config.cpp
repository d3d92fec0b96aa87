#include "ecgsynth/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "ecgsynth/error.hpp"
#include "ecgsynth/record_io.hpp"

namespace ecgsynth {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidConfig,
              "bad value '" + std::string(value) + "' for " + std::string(key));
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) bad_value(key, text);
  return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) bad_value(key, text);
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  bad_value(key, text);
}

struct Option {
  std::string key;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename Getter>
Option real(std::string key, Getter field) {
  return {key,
          [key, field](PipelineConfig& c, std::string_view v) { field(c) = parse_double(key, v); },
          [field](const PipelineConfig& c) { return format_double(field(c)); }};
}

template <typename Getter>
Option count(std::string key, Getter field) {
  return {key,
          [key, field](PipelineConfig& c, std::string_view v) {
            field(c) = static_cast<std::size_t>(parse_unsigned(key, v));
          },
          [field](const PipelineConfig& c) {
            return std::to_string(field(c));
          }};
}

template <typename Getter>
Option flag(std::string key, Getter field) {
  return {key,
          [key, field](PipelineConfig& c, std::string_view v) { field(c) = parse_bool(key, v); },
          [field](const PipelineConfig& c) {
            return std::string(field(c) ? "true" : "false");
          }};
}

const std::vector<Option>& options() {
  static const std::vector<Option> table = [] {
    std::vector<Option> t;
    t.push_back(real("preprocess.low_hz", [](auto& c) -> auto& { return c.synthesis.preprocess.low_hz; }));
    t.push_back(real("preprocess.high_hz", [](auto& c) -> auto& { return c.synthesis.preprocess.high_hz; }));
    t.push_back(real("preprocess.baseline_window1_s",
                     [](auto& c) -> auto& { return c.synthesis.preprocess.baseline_window1_s; }));
    t.push_back(real("preprocess.baseline_window2_s",
                     [](auto& c) -> auto& { return c.synthesis.preprocess.baseline_window2_s; }));
    t.push_back(flag("preprocess.remove_baseline",
                     [](auto& c) -> auto& { return c.synthesis.preprocess.remove_baseline; }));
    t.push_back(flag("preprocess.bandpass", [](auto& c) -> auto& { return c.synthesis.preprocess.bandpass; }));
    t.push_back(real("dtw.window_fraction", [](auto& c) -> auto& { return c.synthesis.dtw.window_fraction; }));
    t.push_back(flag("dtw.normalize", [](auto& c) -> auto& { return c.synthesis.dtw.normalize; }));
    t.push_back(count("forest.trees", [](auto& c) -> auto& { return c.synthesis.forest.trees; }));
    t.push_back(count("forest.features_per_split",
                      [](auto& c) -> auto& { return c.synthesis.forest.features_per_split; }));
    t.push_back(count("forest.min_leaf", [](auto& c) -> auto& { return c.synthesis.forest.min_leaf; }));
    t.push_back(count("forest.max_depth", [](auto& c) -> auto& { return c.synthesis.forest.max_depth; }));
    t.push_back(flag("forest.bootstrap", [](auto& c) -> auto& { return c.synthesis.forest.bootstrap; }));
    t.push_back(real("synthesis.train_window_s", [](auto& c) -> auto& { return c.synthesis.train_window_s; }));
    t.push_back(real("synthesis.drift_clamp_ms", [](auto& c) -> auto& { return c.synthesis.drift_clamp_ms; }));
    t.push_back(flag("synthesis.lag_correction", [](auto& c) -> auto& { return c.synthesis.lag_correction; }));
    t.push_back(flag("synthesis.detrend_lag", [](auto& c) -> auto& { return c.synthesis.detrend_lag; }));
    t.push_back(real("synthesis.match_rate_hz", [](auto& c) -> auto& { return c.synthesis.match_rate_hz; }));
    t.push_back(real("pipeline.eval_window_s", [](auto& c) -> auto& { return c.eval_window_s; }));
    t.push_back({"pipeline.out_dir",
                 [](PipelineConfig& c, std::string_view v) { c.out_dir = std::string(v); },
                 [](const PipelineConfig& c) { return c.out_dir.string(); }});
    t.push_back({"pipeline.seed",
                 [](PipelineConfig& c, std::string_view v) { c.seed = parse_unsigned("pipeline.seed", v); },
                 [](const PipelineConfig& c) { return std::to_string(c.seed); }});
    return t;
  }();
  return table;
}

const Option& find_option(std::string_view key) {
  for (const auto& o : options()) {
    if (o.key == key) return o;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

ProtocolConfig PipelineConfig::protocol() const {
  ProtocolConfig p;
  p.synthesis = synthesis;
  p.synthesis.forest.seed = seed;
  p.eval_window_s = eval_window_s;
  return p;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& o : options()) k.push_back(o.key);
    return k;
  }();
  return keys;
}

void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value) {
  find_option(key).set(config, trim(value));
}

std::string get_config_value(const PipelineConfig& config, std::string_view key) {
  return find_option(key).get(config);
}

void apply_config_text(PipelineConfig& config, std::string_view text) {
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": bad section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto name = trim(line.substr(0, eq));
    const std::string key = section.empty() ? std::string(name) : section + "." + std::string(name);
    try {
      set_config_value(config, key, line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  PipelineConfig config;
  apply_config_text(config, read_text_file(path));
  return config;
}

std::string config_text(const PipelineConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& o : options()) {
    const auto dot = o.key.find('.');
    const auto sec = o.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << o.key.substr(dot + 1) << " = " << o.get(config) << '\n';
  }
  return out.str();
}

void validate_pipeline_config(const PipelineConfig& config) {
  const auto& s = config.synthesis;
  if (!(s.train_window_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "train_window_s must be positive");
  if (config.eval_window_s < 0.0) throw Error(ErrorCode::InvalidConfig, "eval_window_s must not be negative");
  if (!(s.drift_clamp_ms >= 0.0)) throw Error(ErrorCode::InvalidConfig, "drift_clamp_ms must not be negative");
  if (!(s.match_rate_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "match_rate_hz must be positive");
  validate_dtw_config(s.dtw);
  validate_forest_config(s.forest, kFeatureCount);
}

}  // namespace ecgsynth
