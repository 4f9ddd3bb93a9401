// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic walkers. Each identity is a rigid upright template
// with its own limb proportions and swing parameters; sequences vary phase,
// cadence and amplitude slightly and are then seen through a camera
// (rotation about the neck, scale, translation, jitter).
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gpgait/pose_io.hpp"

namespace gpgait {

struct GaitIdentitySpec {
    int id = 0;
    // Lengths as multiples of the torso (neck to hip centre).
    double shoulder_width = 0.8;
    double hip_width = 0.55;
    double upper_arm = 0.6;
    double forearm = 0.55;
    double thigh = 0.9;
    double shin = 0.85;
    double head = 0.32;
    double period = 32.0;      // frames per stride
    double stride_amp = 0.35;  // thigh swing, radians
    double arm_amp = 0.3;      // upper-arm swing, radians
    double knee_flex = 0.4;    // radians
    double elbow_flex = 0.3;   // radians
    double arm_phase = 0.0;    // extra arm/leg phase offset, radians

    /// Limb ratios used for the spacing rule.
    std::vector<double> ratios() const;
};

struct CameraSpec {
    double scale = 1.0;
    Point2 translation;
    double slant = 0.0;  // rotation about the neck, radians
    double jitter = 0.0;  // per-coordinate Gaussian sigma, output pixels
};

/// Draws `n` identities whose limb ratios pairwise differ by at least
/// `min_spacing` (relative) in at least one ratio.
std::vector<GaitIdentitySpec> sample_identities(int n, std::uint64_t seed, double min_spacing = 0.05);

/// Template torso length in pixels before the camera scale.
inline constexpr double kTemplateTorso = 100.0;

/// Upright walker pose at (fractional) time t, neck at the origin.
Coords walker_pose(const GaitIdentitySpec& id, double t, double phase, double cadence, double amplitude);

/// Rotate by `slant` about the origin (the template neck), scale, translate.
Coords apply_camera(const Coords& frame, const CameraSpec& camera);

/// `seed` drives the per-sequence phase, cadence and amplitude; `jitter_seed`
/// drives the camera jitter.
PoseSequence generate_sequence(const GaitIdentitySpec& id, const CameraSpec& camera, int frames, std::uint64_t seed,
                               std::uint64_t jitter_seed = 0);

struct CameraRange {
    double scale_min = 1.0;
    double scale_max = 1.0;
    double translate = 0.0;            // |t_x|, |t_y| <= translate
    std::vector<double> slants{0.0};  // one is picked per sequence
    double jitter = 0.0;
};

enum class SynthLayout { Simple, CasiaB };

struct SynthOptions {
    int identities = 20;
    int sequences_per_identity = 6;
    int frames = 60;
    std::uint64_t seed = 7;
    int train_identities = 0;  // extra identities with the train role
    int train_sequences_per_identity = 6;
    CameraRange camera;
    std::uint64_t camera_seed = 0;  // 0: derive from `seed`
    double min_spacing = 0.05;
    SynthLayout layout = SynthLayout::Simple;
    std::vector<std::string> views{"000", "090"};  // casiab layout only
};

struct SynthDataset {
    DatasetManifest manifest;
    std::filesystem::path manifest_path;
    std::vector<GaitIdentitySpec> identities;  // evaluation identities first
};

/// Writes one sequence file per sequence under `out_dir/sequences` and
/// `out_dir/manifest.tsv`. Simple layout: each evaluation identity's first
/// sequence is the probe, the rest are gallery. CasiaB layout: NM#01-06,
/// BG#01-02 and CL#01-02 per view, roles left to the protocol.
SynthDataset generate_dataset(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace gpgait
