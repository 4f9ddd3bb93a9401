// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: presets, a small "[section] key = value" file format and
// the canonical text echoed into checkpoints.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gpgait/eval.hpp"
#include "gpgait/hot.hpp"
#include "gpgait/pagcn.hpp"
#include "gpgait/train.hpp"

namespace gpgait {

class NotImplementedError : public Error {
public:
    using Error::Error;
};

struct RunConfig {
    std::string preset = "casiab";
    std::uint64_t seed = 0;
    int threads = 1;
    bool use_hot = true;
    std::string normalization = "hot";  // hot | spine_unit | dataset_independent
    HotConfig hot;
    NetworkConfig net;
    TrainConfig train;
    Protocol protocol = Protocol::CasiaB;
    DistanceMetric metric = DistanceMetric::Euclidean;
    int heatmap_channels = 17;
    std::size_t min_frames = 1;

    /// Throws ConfigError for invalid values and NotImplementedError for the
    /// normalisation alternatives that exist only as switches.
    void validate() const;
    EncodeOptions encode() const { return {use_hot, hot}; }
};

const std::vector<std::string>& preset_names();
/// Defaults of a named preset (casiab | oumvlp | gait3d | grew | toy).
RunConfig preset_config(const std::string& name);

/// Sets "section.key". `scheme.<name>` keys define or override partition
/// schemes ("0,1,2|5,7,9|..."). Throws ConfigError naming unknown keys and
/// unparsable values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Applies every assignment of a config text. Comments start with '#' or ';'.
void apply_config_text(RunConfig& config, const std::string& text, const std::string& where = "config");
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Canonical text listing every key; config_from_text(config_to_text(c))
/// reproduces c.
std::string config_to_text(const RunConfig& config);
RunConfig config_from_text(const std::string& text);

}  // namespace gpgait
