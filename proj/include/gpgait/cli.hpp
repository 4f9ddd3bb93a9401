// SPDX-License-Identifier: Apache-2.0
//
// The subcommands behind the `gpgait` executable, callable in-process.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gpgait/config.hpp"
#include "gpgait/synth.hpp"

namespace gpgait {

/// Command-line layers applied on top of a preset, in this order: preset,
/// config file, `--set key=value` assignments, then the dedicated flags.
struct ConfigOverrides {
    std::string preset = "casiab";
    std::filesystem::path config_file;
    std::vector<std::string> assignments;  // "section.key=value"
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;  // falls back to GPGAIT_THREADS
    bool no_hot = false;
    std::optional<std::string> descriptors;  // "joint,angle,bone"
    bool single_branch = false;
    bool no_partition = false;
    std::optional<std::string> normalization;
    std::optional<std::string> protocol;
    std::optional<std::string> metric;
};

RunConfig resolve_config(const ConfigOverrides& overrides);

/// Maps the exception hierarchy to process exit codes: 2 config, 3 data,
/// 4 numeric, 1 anything else.
int exit_code_for(const std::exception& e);

SynthDataset cmd_synth(const SynthOptions& options, const std::filesystem::path& out_dir);

struct PreprocessSummary {
    std::size_t sequences = 0;
    std::size_t written = 0;
    std::size_t flagged = 0;  // sequences with validation issues
};

/// Writes `unified.jsonl`, `descriptors.gpgw` (tensors `<seq_id>.joint`,
/// `.angle`, `.bone`, each (T*17) x C) and `validation.tsv` into `out_dir`.
/// Sequences that cannot be unified are reported and skipped.
PreprocessSummary cmd_preprocess(const RunConfig& config, const std::filesystem::path& manifest,
                                 const std::filesystem::path& out_dir);

struct TrainSummary {
    std::filesystem::path checkpoint;
    std::int64_t iterations = 0;
    int classes = 0;
    std::size_t sequences = 0;
};

/// Trains on the manifest's train entries (gallery entries when there are
/// none). Writes `checkpoint.gpgw`, `metrics.tsv` and `config.txt` to
/// `out_dir`. With `resume`, continues from that checkpoint.
TrainSummary cmd_train(const RunConfig& config, const std::filesystem::path& manifest,
                       const std::filesystem::path& out_dir, const std::filesystem::path& resume = {},
                       std::function<void(const IterationRecord&)> on_log = {});

struct EvalOptions {
    std::optional<Protocol> protocol;  // default: the manifest's directive
    std::optional<DistanceMetric> metric;
    int threads = 1;
};

/// Loads the model and its encoding settings from the checkpoint and scores
/// the manifest. Writes the results table when `results` is non-empty.
EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                    const EvalOptions& options, const std::filesystem::path& results = {});

struct InspectOptions {
    std::string branch = "joint";
    int channels = 17;
    bool compare_unmasked = false;
};

/// Writes the keypoint x channel heatmap of the first sequence in
/// `sequence_file`. With compare_unmasked, writes `<stem>_masked<ext>` and
/// `<stem>_unmasked<ext>` instead, the latter from the same weights run with
/// every mask replaced by the global one. Returns the files written.
std::vector<std::filesystem::path> cmd_inspect(const std::filesystem::path& checkpoint,
                                               const std::filesystem::path& sequence_file,
                                               const std::filesystem::path& out, const InspectOptions& options);

}  // namespace gpgait
