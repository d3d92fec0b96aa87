#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ecgsynth/metrics.hpp"
#include "ecgsynth/synth.hpp"

namespace ecgsynth {

struct PipelineConfig {
  SynthesisConfig synthesis;
  double eval_window_s{0.0};  // 0: the rest of the record
  std::filesystem::path out_dir{"out"};
  std::uint64_t seed{42};

  ProtocolConfig protocol() const;
};

// Every settable key as "section.key", in a fixed order.
const std::vector<std::string>& config_keys();

// Sets one key from its text value. Throws InvalidConfig for unknown keys or
// unparsable values.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const PipelineConfig& config, std::string_view key);

// Flat "key = value" lines under "[section]" headers; '#' and ';' start
// comments. Throws InvalidConfig with the offending line number.
void apply_config_text(PipelineConfig& config, std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_text(const PipelineConfig& config);

// Range and consistency checks on the whole configuration. Throws InvalidConfig.
void validate_pipeline_config(const PipelineConfig& config);

}  // namespace ecgsynth
