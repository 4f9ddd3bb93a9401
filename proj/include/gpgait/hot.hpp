// SPDX-License-Identifier: Apache-2.0
//
// Human-oriented transformation: de-slant each frame about the virtual neck,
// rescale it to a fixed body height and move the neck to the origin.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gpgait/common.hpp"
#include "gpgait/pose_io.hpp"

namespace gpgait {

struct HotConfig {
    double h_unif = 225.0;
    double phi = 0.1;  // radians
    double epsilon_extent = 1e-6 * 225.0;

    void validate() const;
};

struct VirtualJoints {
    Point2 neck;
    Point2 hip;
};

struct UnifiedPoseSequence {
    std::string seq_id;
    std::string subject;
    Condition condition = Condition::NM;
    std::string view;
    std::vector<Coords> frames;
    std::vector<std::size_t> kept_frame_indices;
};

class DegenerateSpineError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateFrameError : public NumericError {
public:
    using NumericError::NumericError;
};

Coords coords_of(const PoseFrame& frame);
Point2 midpoint(Point2 a, Point2 b);

VirtualJoints compute_virtual_joints(const Coords& frame);
VirtualJoints compute_virtual_joints(const PoseFrame& frame);

/// Spine slant theta = atan((neck.x - hip.x) / (neck.y - hip.y)) in (-pi/2, pi/2].
/// Throws DegenerateSpineError for a horizontal spine or coincident neck/hip.
double compute_rotation_angle(const VirtualJoints& vj);

/// Rotates every point by theta about the neck when |theta| >= phi, otherwise
/// returns the input untouched.
Coords affine_transform(const Coords& frame, const VirtualJoints& vj, double theta, double phi);

/// Scales the frame by h_unif / (max y - min y). Throws DegenerateFrameError
/// when the vertical extent is below epsilon_extent.
Coords body_rescale(const Coords& frame, double h_unif, double epsilon_extent);

/// Translates so that `neck` lands on the origin. When `neck` is the shoulder
/// midpoint the shoulders are written as +/- half the shoulder vector, which
/// keeps the recomputed neck exactly at 0.
Coords body_align(const Coords& frame, Point2 neck);

/// Full per-frame pipeline. Degenerate frames are dropped; throws DataError if
/// nothing survives.
UnifiedPoseSequence apply_hot(const PoseSequence& seq, const HotConfig& cfg);

/// Identity "transformation" used by the --no-hot ablation: raw coordinates,
/// every frame kept.
UnifiedPoseSequence raw_unified(const PoseSequence& seq);

// Unified sequences share the pose_io record layout with "unified": true and
// [x, y] pairs instead of [x, y, confidence].
std::string serialize_unified(const UnifiedPoseSequence& seq);
UnifiedPoseSequence parse_unified_record(const std::string& line, const std::string& where);
void write_unified_file(const std::filesystem::path& path, const std::vector<UnifiedPoseSequence>& seqs);
std::vector<UnifiedPoseSequence> read_unified_file(const std::filesystem::path& path);

}  // namespace gpgait
