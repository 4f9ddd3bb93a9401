// SPDX-License-Identifier: Apache-2.0
#include "gpgait/hot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace gpgait {

using json = nlohmann::ordered_json;

void HotConfig::validate() const {
    if (!(h_unif > 0.0)) throw ConfigError("hot.h_unif must be > 0");
    if (!(phi >= 0.0)) throw ConfigError("hot.phi must be >= 0");
    if (!(epsilon_extent > 0.0)) throw ConfigError("hot.epsilon_extent must be > 0");
}

Coords coords_of(const PoseFrame& frame) {
    Coords c;
    for (int i = 0; i < kNumJoints; ++i) c[i] = {frame[i].x, frame[i].y};
    return c;
}

Point2 midpoint(Point2 a, Point2 b) { return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; }

VirtualJoints compute_virtual_joints(const Coords& frame) {
    for (const auto& p : frame) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw NumericError("non-finite keypoint");
    }
    return {midpoint(frame[coco::kLeftShoulder], frame[coco::kRightShoulder]),
            midpoint(frame[coco::kLeftHip], frame[coco::kRightHip])};
}

VirtualJoints compute_virtual_joints(const PoseFrame& frame) { return compute_virtual_joints(coords_of(frame)); }

double compute_rotation_angle(const VirtualJoints& vj) {
    const double num = vj.neck.x - vj.hip.x;
    const double den = vj.neck.y - vj.hip.y;
    if (den == 0.0) {
        throw DegenerateSpineError(num == 0.0 ? "neck and hip coincide" : "horizontal spine");
    }
    if (num == 0.0) return 0.0;
    return std::atan(num / den);
}

Coords affine_transform(const Coords& frame, const VirtualJoints& vj, double theta, double phi) {
    if (std::abs(theta) < phi) return frame;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Point2 n = vj.neck;
    Coords out;
    for (int i = 0; i < kNumJoints; ++i) {
        const Point2 p = frame[i];
        out[i] = {c * p.x - s * p.y + (1.0 - c) * n.x + s * n.y, s * p.x + c * p.y - s * n.x + (1.0 - c) * n.y};
    }
    return out;
}

Coords body_rescale(const Coords& frame, double h_unif, double epsilon_extent) {
    auto [lo, hi] = std::minmax_element(frame.begin(), frame.end(),
                                        [](const Point2& a, const Point2& b) { return a.y < b.y; });
    const double extent = hi->y - lo->y;
    if (!(extent >= epsilon_extent)) throw DegenerateFrameError("vertical extent below epsilon");
    const double scale = h_unif / extent;
    Coords out;
    for (int i = 0; i < kNumJoints; ++i) out[i] = scale * frame[i];
    return out;
}

Coords body_align(const Coords& frame, Point2 neck) {
    Coords out;
    for (int i = 0; i < kNumJoints; ++i) out[i] = frame[i] - neck;
    if (!(neck == midpoint(frame[coco::kLeftShoulder], frame[coco::kRightShoulder]))) return out;
    const Point2 half = 0.5 * (frame[coco::kLeftShoulder] - frame[coco::kRightShoulder]);
    out[coco::kLeftShoulder] = half;
    out[coco::kRightShoulder] = {-half.x, -half.y};
    return out;
}

UnifiedPoseSequence apply_hot(const PoseSequence& seq, const HotConfig& cfg) {
    cfg.validate();
    UnifiedPoseSequence out{seq.seq_id, seq.subject, seq.condition, seq.view, {}, {}};
    out.frames.reserve(seq.frames.size());
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        const Coords raw = coords_of(seq.frames[f]);
        try {
            const VirtualJoints vj = compute_virtual_joints(raw);
            double theta = 0.0;
            try {
                theta = compute_rotation_angle(vj);
            } catch (const DegenerateSpineError&) {
                // Coincident neck and hip: keep the frame, skip de-slanting.
                if (!(vj.neck == vj.hip)) throw;
            }
            const Coords slanted = affine_transform(raw, vj, theta, cfg.phi);
            const Coords scaled = body_rescale(slanted, cfg.h_unif, cfg.epsilon_extent);
            const Point2 neck = midpoint(scaled[coco::kLeftShoulder], scaled[coco::kRightShoulder]);
            out.frames.push_back(body_align(scaled, neck));
            out.kept_frame_indices.push_back(f);
        } catch (const NumericError&) {
            continue;
        }
    }
    if (out.frames.empty()) throw DataError("sequence " + seq.seq_id + ": every frame is degenerate");
    return out;
}

UnifiedPoseSequence raw_unified(const PoseSequence& seq) {
    UnifiedPoseSequence out{seq.seq_id, seq.subject, seq.condition, seq.view, {}, {}};
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        out.frames.push_back(coords_of(seq.frames[f]));
        out.kept_frame_indices.push_back(f);
    }
    return out;
}

std::string serialize_unified(const UnifiedPoseSequence& seq) {
    json j;
    j["seq_id"] = seq.seq_id;
    j["subject"] = seq.subject;
    j["condition"] = std::string(to_string(seq.condition));
    j["view"] = seq.view;
    j["unified"] = true;
    j["kept_frame_indices"] = seq.kept_frame_indices;
    json frames = json::array();
    for (const auto& frame : seq.frames) {
        json jf = json::array();
        for (const auto& p : frame) jf.push_back(json::array({p.x, p.y}));
        frames.push_back(std::move(jf));
    }
    j["frames"] = std::move(frames);
    return j.dump();
}

UnifiedPoseSequence parse_unified_record(const std::string& line, const std::string& where) {
    try {
        const json j = json::parse(line);
        if (!j.value("unified", false)) throw DataError("record is not unified");
        UnifiedPoseSequence seq;
        seq.seq_id = j.at("seq_id").get<std::string>();
        seq.subject = j.at("subject").get<std::string>();
        seq.condition = parse_condition(j.at("condition").get<std::string>());
        seq.view = j.at("view").get<std::string>();
        seq.kept_frame_indices = j.at("kept_frame_indices").get<std::vector<std::size_t>>();
        for (const auto& jf : j.at("frames")) {
            if (jf.size() != kNumJoints) throw DataError("frame does not have 17 keypoints");
            Coords c;
            for (int k = 0; k < kNumJoints; ++k) c[k] = {jf[k].at(0).get<double>(), jf[k].at(1).get<double>()};
            seq.frames.push_back(c);
        }
        if (seq.frames.size() != seq.kept_frame_indices.size()) throw DataError("kept_frame_indices length mismatch");
        return seq;
    } catch (const json::exception& e) {
        throw DataError(where + ": malformed unified record: " + e.what());
    } catch (const DataError& e) {
        throw DataError(where + ": malformed unified record: " + e.what());
    }
}

void write_unified_file(const std::filesystem::path& path, const std::vector<UnifiedPoseSequence>& seqs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& s : seqs) out << serialize_unified(s) << '\n';
}

std::vector<UnifiedPoseSequence> read_unified_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing unified file " + path.string());
    std::vector<UnifiedPoseSequence> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty()) out.push_back(parse_unified_record(line, path.string() + ":" + std::to_string(lineno)));
    }
    return out;
}

}  // namespace gpgait
