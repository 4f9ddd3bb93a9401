// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpgait/common.hpp"

namespace gpgait {

enum class Condition { NM, BG, CL, WILD };
enum class Role { Train, Gallery, Probe };
enum class Protocol { CasiaB, Oumvlp, Gait3d, Grew, Simple };

std::string_view to_string(Condition c);
std::string_view to_string(Role r);
std::string_view to_string(Protocol p);
Condition parse_condition(std::string_view s);
Role parse_role(std::string_view s);
Protocol parse_protocol(std::string_view s);

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double confidence = 0.0;

    friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

using PoseFrame = std::array<Keypoint, kNumJoints>;

struct PoseSequence {
    std::string seq_id;
    std::string subject;
    Condition condition = Condition::NM;
    std::string view;
    std::vector<PoseFrame> frames;
};

struct ManifestEntry {
    std::filesystem::path path;
    Role role = Role::Train;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    Protocol protocol = Protocol::Simple;
};

/// A loaded sequence together with the role its manifest entry assigned.
struct DatasetItem {
    PoseSequence sequence;
    Role role = Role::Train;
};

// Manifest file: optional "#protocol<TAB>name" directive, then one
// "path<TAB>role" per line. Relative paths resolve against the manifest's
// directory; other lines starting with '#' are comments.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Sequence files hold one JSON record per line:
// {"seq_id":..,"subject":..,"condition":"NM","view":..,"frames":[[[x,y,c],...],...]}
PoseSequence parse_sequence_record(std::string_view line, const std::string& where);
std::string serialize_sequence(const PoseSequence& seq);
std::vector<PoseSequence> read_sequence_file(const std::filesystem::path& path);
void write_sequence_file(const std::filesystem::path& path, const std::vector<PoseSequence>& seqs);

std::vector<PoseSequence> load_sequences(const DatasetManifest& manifest);
std::vector<DatasetItem> load_dataset(const DatasetManifest& manifest);

/// Source index (AlphaPose/OpenPose 18-keypoint layout) for each COCO17 slot.
/// The 18-point layout is: nose, neck, r-shoulder, r-elbow, r-wrist,
/// l-shoulder, l-elbow, l-wrist, r-hip, r-knee, r-ankle, l-hip, l-knee,
/// l-ankle, r-eye, l-eye, r-ear, l-ear. Index 1 (neck) is dropped.
inline constexpr std::array<int, kNumJoints> kAlphaPose18ToCoco17 = {0, 15, 14, 17, 16, 5, 2, 6, 3,
                                                                     7, 4,  11, 8,  12, 9, 13, 10};
inline constexpr int kAlphaPose18Neck = 1;

PoseFrame convert_alphapose18_to_coco17(const std::vector<Keypoint>& frame18);

enum class FrameIssueKind { NonFinite, DegenerateExtent, LowConfidence };

struct FrameIssue {
    std::size_t frame = 0;
    FrameIssueKind kind = FrameIssueKind::NonFinite;
};

struct ValidationReport {
    std::string seq_id;
    bool too_short = false;
    std::size_t frame_count = 0;
    std::vector<FrameIssue> issues;

    bool clean() const { return !too_short && issues.empty(); }
};

struct ValidationOptions {
    std::size_t min_frames = 1;
    double epsilon_extent = 225e-6;
    // Frames whose mean confidence is below this are flagged. 0 disables.
    double min_mean_confidence = 0.0;
};

ValidationReport validate_sequence(const PoseSequence& seq, const ValidationOptions& options);
std::string_view to_string(FrameIssueKind kind);

}  // namespace gpgait
