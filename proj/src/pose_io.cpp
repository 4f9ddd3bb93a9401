// SPDX-License-Identifier: Apache-2.0
#include "gpgait/pose_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gpgait {

using json = nlohmann::ordered_json;

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view what) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    throw DataError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, Condition>, 4> kConditions{
    {{"NM", Condition::NM}, {"BG", Condition::BG}, {"CL", Condition::CL}, {"WILD", Condition::WILD}}};
constexpr std::array<std::pair<std::string_view, Role>, 3> kRoles{
    {{"train", Role::Train}, {"gallery", Role::Gallery}, {"probe", Role::Probe}}};
constexpr std::array<std::pair<std::string_view, Protocol>, 5> kProtocols{{{"casiab", Protocol::CasiaB},
                                                                           {"oumvlp", Protocol::Oumvlp},
                                                                           {"gait3d", Protocol::Gait3d},
                                                                           {"grew", Protocol::Grew},
                                                                           {"simple", Protocol::Simple}}};

template <typename Enum, std::size_t N>
std::string_view enum_name(Enum v, const std::array<std::pair<std::string_view, Enum>, N>& table) {
    for (const auto& [name, value] : table) {
        if (value == v) return name;
    }
    return "?";
}

bool valid_keypoint(const Keypoint& k) {
    return std::isfinite(k.x) && std::isfinite(k.y) && k.confidence >= 0.0 && k.confidence <= 1.0;
}

}  // namespace

std::string_view to_string(Condition c) { return enum_name(c, kConditions); }
std::string_view to_string(Role r) { return enum_name(r, kRoles); }
std::string_view to_string(Protocol p) { return enum_name(p, kProtocols); }
Condition parse_condition(std::string_view s) { return parse_enum(s, kConditions, "condition"); }
Role parse_role(std::string_view s) { return parse_enum(s, kRoles, "role"); }
Protocol parse_protocol(std::string_view s) { return parse_enum(s, kProtocols, "protocol"); }

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    DatasetManifest manifest;
    const auto base = path.parent_path();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (line.rfind("#protocol", 0) == 0) {
            if (tab == std::string::npos) throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad directive");
            manifest.protocol = parse_protocol(std::string_view(line).substr(tab + 1));
            continue;
        }
        if (line.front() == '#') continue;
        if (tab == std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected path<TAB>role");
        }
        ManifestEntry entry;
        entry.path = line.substr(0, tab);
        if (entry.path.is_relative()) entry.path = base / entry.path;
        try {
            entry.role = parse_role(std::string_view(line).substr(tab + 1));
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << "#protocol\t" << to_string(manifest.protocol) << '\n';
    const auto base = path.parent_path();
    for (const auto& e : manifest.entries) {
        auto p = e.path;
        if (!base.empty() && p.is_absolute()) p = std::filesystem::relative(p, base);
        out << p.generic_string() << '\t' << to_string(e.role) << '\n';
    }
}

PoseSequence parse_sequence_record(std::string_view line, const std::string& where) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(where + ": malformed record: " + e.what());
    }
    PoseSequence seq;
    try {
        seq.seq_id = j.at("seq_id").get<std::string>();
        seq.subject = j.at("subject").get<std::string>();
        seq.condition = parse_condition(j.at("condition").get<std::string>());
        seq.view = j.at("view").get<std::string>();
        const auto& frames = j.at("frames");
        if (!frames.is_array() || frames.empty()) throw DataError("frames must be a non-empty array");
        seq.frames.reserve(frames.size());
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const auto& jf = frames[f];
            if (!jf.is_array() || jf.size() != kNumJoints) {
                throw DataError("frame " + std::to_string(f) + " has " + std::to_string(jf.size()) +
                                " keypoints, expected 17");
            }
            PoseFrame frame;
            for (int k = 0; k < kNumJoints; ++k) {
                const auto& kp = jf[k];
                if (!kp.is_array() || kp.size() != 3) {
                    throw DataError("frame " + std::to_string(f) + " keypoint " + std::to_string(k) +
                                    " must be [x, y, confidence]");
                }
                frame[k] = {kp[0].get<double>(), kp[1].get<double>(), kp[2].get<double>()};
                if (frame[k].confidence < 0.0 || frame[k].confidence > 1.0) {
                    throw DataError("frame " + std::to_string(f) + " keypoint " + std::to_string(k) +
                                    " confidence outside [0,1]");
                }
            }
            seq.frames.push_back(frame);
        }
    } catch (const json::exception& e) {
        throw DataError(where + ": malformed record: " + e.what());
    } catch (const DataError& e) {
        throw DataError(where + ": malformed record: " + e.what());
    }
    return seq;
}

std::string serialize_sequence(const PoseSequence& seq) {
    json j;
    j["seq_id"] = seq.seq_id;
    j["subject"] = seq.subject;
    j["condition"] = std::string(to_string(seq.condition));
    j["view"] = seq.view;
    json frames = json::array();
    for (const auto& frame : seq.frames) {
        json jf = json::array();
        for (const auto& k : frame) jf.push_back(json::array({k.x, k.y, k.confidence}));
        frames.push_back(std::move(jf));
    }
    j["frames"] = std::move(frames);
    return j.dump();
}

std::vector<PoseSequence> read_sequence_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing sequence file " + path.string());
    std::vector<PoseSequence> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        out.push_back(parse_sequence_record(line, path.string() + ":" + std::to_string(lineno)));
    }
    return out;
}

void write_sequence_file(const std::filesystem::path& path, const std::vector<PoseSequence>& seqs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& s : seqs) out << serialize_sequence(s) << '\n';
}

std::vector<DatasetItem> load_dataset(const DatasetManifest& manifest) {
    std::vector<DatasetItem> items;
    for (const auto& entry : manifest.entries) {
        for (auto& seq : read_sequence_file(entry.path)) items.push_back({std::move(seq), entry.role});
    }
    return items;
}

std::vector<PoseSequence> load_sequences(const DatasetManifest& manifest) {
    std::vector<PoseSequence> out;
    for (auto& item : load_dataset(manifest)) out.push_back(std::move(item.sequence));
    return out;
}

PoseFrame convert_alphapose18_to_coco17(const std::vector<Keypoint>& frame18) {
    if (frame18.size() != 18) {
        throw DataError("expected 18 keypoints, got " + std::to_string(frame18.size()));
    }
    PoseFrame out;
    for (int i = 0; i < kNumJoints; ++i) out[i] = frame18[kAlphaPose18ToCoco17[i]];
    return out;
}

std::string_view to_string(FrameIssueKind kind) {
    switch (kind) {
        case FrameIssueKind::NonFinite: return "non_finite";
        case FrameIssueKind::DegenerateExtent: return "degenerate_extent";
        case FrameIssueKind::LowConfidence: return "low_confidence";
    }
    return "?";
}

ValidationReport validate_sequence(const PoseSequence& seq, const ValidationOptions& options) {
    ValidationReport report;
    report.seq_id = seq.seq_id;
    report.frame_count = seq.frames.size();
    report.too_short = seq.frames.size() < options.min_frames;
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        const auto& frame = seq.frames[f];
        if (!std::all_of(frame.begin(), frame.end(), valid_keypoint)) {
            report.issues.push_back({f, FrameIssueKind::NonFinite});
            continue;
        }
        auto [lo, hi] = std::minmax_element(frame.begin(), frame.end(),
                                            [](const Keypoint& a, const Keypoint& b) { return a.y < b.y; });
        if (hi->y - lo->y < options.epsilon_extent) report.issues.push_back({f, FrameIssueKind::DegenerateExtent});
        if (options.min_mean_confidence > 0.0) {
            double sum = 0.0;
            for (const auto& k : frame) sum += k.confidence;
            if (sum / kNumJoints < options.min_mean_confidence) {
                report.issues.push_back({f, FrameIssueKind::LowConfidence});
            }
        }
    }
    return report;
}

}  // namespace gpgait
