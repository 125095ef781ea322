#pragma once

#include "mhgs/trainer.hpp"

#include <filesystem>
#include <string>

namespace mhgs {

/// Applies one key=value pair onto the config; unknown keys are hard errors.
void apply_config_entry(TrainConfig& config, const std::string& key,
                        const std::string& value);

/// Flat key=value file, '#' comments and blank lines allowed.
TrainConfig parse_config_file(const std::filesystem::path& path,
                              TrainConfig base = TrainConfig{});

/// Serializes every documented key (a valid input for parse_config_file).
void write_config_file(const TrainConfig& config, const std::filesystem::path& path);

}  // namespace mhgs
