// SPDX-License-Identifier: Apache-2.0
#include "gpgait/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace gpgait {

namespace {

using Engine = std::mt19937_64;

Engine stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(b),
                      static_cast<std::uint32_t>(salt)};
    return Engine(seq);
}

double uniform(Engine& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Point2 polar(Point2 origin, double length, double angle) {
    return {origin.x + length * std::sin(angle), origin.y + length * std::cos(angle)};
}

std::string padded(int value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*d", width, value);
    return buf;
}

}  // namespace

std::vector<double> GaitIdentitySpec::ratios() const {
    return {shoulder_width, hip_width, upper_arm, forearm, thigh, shin, head};
}

std::vector<GaitIdentitySpec> sample_identities(int n, std::uint64_t seed, double min_spacing) {
    if (n < 0) throw ConfigError("identity count must be >= 0");
    Engine rng = stream(seed, 0x1d, 0, 11);
    std::vector<GaitIdentitySpec> out;
    int attempts = 0;
    while (static_cast<int>(out.size()) < n) {
        if (++attempts > 100000) throw ConfigError("cannot place identities with the requested spacing");
        GaitIdentitySpec s;
        s.id = static_cast<int>(out.size());
        s.shoulder_width = uniform(rng, 0.6, 1.0);
        s.hip_width = uniform(rng, 0.4, 0.7);
        s.upper_arm = uniform(rng, 0.5, 0.75);
        s.forearm = uniform(rng, 0.45, 0.7);
        s.thigh = uniform(rng, 0.75, 1.05);
        s.shin = uniform(rng, 0.7, 1.0);
        s.head = uniform(rng, 0.25, 0.4);
        s.period = uniform(rng, 24.0, 40.0);
        s.stride_amp = uniform(rng, 0.25, 0.5);
        s.arm_amp = uniform(rng, 0.15, 0.45);
        s.knee_flex = uniform(rng, 0.2, 0.6);
        s.elbow_flex = uniform(rng, 0.1, 0.5);
        s.arm_phase = uniform(rng, -0.4, 0.4);
        const auto r = s.ratios();
        const bool spaced = std::all_of(out.begin(), out.end(), [&](const GaitIdentitySpec& o) {
            const auto q = o.ratios();
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (std::abs(r[i] - q[i]) >= min_spacing * std::max(r[i], q[i])) return true;
            }
            return false;
        });
        if (spaced) out.push_back(s);
    }
    return out;
}

Coords walker_pose(const GaitIdentitySpec& id, double t, double phase, double cadence, double amplitude) {
    const double torso = kTemplateTorso;
    const double s = 2.0 * std::numbers::pi * cadence * t / id.period + phase;
    Coords p;
    const double head = id.head * torso;
    p[coco::kNose] = {0.0, -head};
    p[coco::kLeftEye] = {0.25 * head, -1.2 * head};
    p[coco::kRightEye] = {-0.25 * head, -1.2 * head};
    p[coco::kLeftEar] = {0.5 * head, -1.0 * head};
    p[coco::kRightEar] = {-0.5 * head, -1.0 * head};

    const double half_sw = 0.5 * id.shoulder_width * torso;
    const double half_hw = 0.5 * id.hip_width * torso;
    p[coco::kLeftShoulder] = {half_sw, 0.0};
    p[coco::kRightShoulder] = {-half_sw, 0.0};
    p[coco::kLeftHip] = {half_hw, torso};
    p[coco::kRightHip] = {-half_hw, torso};

    for (int side = 0; side < 2; ++side) {
        const double offset = side == 0 ? 0.0 : std::numbers::pi;
        const double sign = side == 0 ? 1.0 : -1.0;
        const int hip = side == 0 ? coco::kLeftHip : coco::kRightHip;
        const int knee = side == 0 ? coco::kLeftKnee : coco::kRightKnee;
        const int ankle = side == 0 ? coco::kLeftAnkle : coco::kRightAnkle;
        const double thigh_angle = amplitude * id.stride_amp * std::sin(s + offset);
        const double shin_angle = thigh_angle - id.knee_flex * (0.5 + 0.5 * std::sin(s + offset - 0.5 * std::numbers::pi));
        p[knee] = polar(p[hip], id.thigh * torso, sign * 0.05 + thigh_angle);
        p[ankle] = polar(p[knee], id.shin * torso, sign * 0.03 + shin_angle);

        const int shoulder = side == 0 ? coco::kLeftShoulder : coco::kRightShoulder;
        const int elbow = side == 0 ? coco::kLeftElbow : coco::kRightElbow;
        const int wrist = side == 0 ? coco::kLeftWrist : coco::kRightWrist;
        const double arm_angle = -amplitude * id.arm_amp * std::sin(s + offset + id.arm_phase);
        const double fore_angle = arm_angle - id.elbow_flex * (0.5 + 0.5 * std::sin(s + offset + id.arm_phase));
        p[elbow] = polar(p[shoulder], id.upper_arm * torso, sign * 0.12 + arm_angle);
        p[wrist] = polar(p[elbow], id.forearm * torso, sign * 0.08 + fore_angle);
    }
    return p;
}

Coords apply_camera(const Coords& frame, const CameraSpec& camera) {
    const double c = std::cos(camera.slant);
    const double sn = std::sin(camera.slant);
    Coords out;
    for (int i = 0; i < kNumJoints; ++i) {
        const Point2 q = frame[i];
        out[i] = {camera.scale * (c * q.x - sn * q.y) + camera.translation.x,
                  camera.scale * (sn * q.x + c * q.y) + camera.translation.y};
    }
    return out;
}

PoseSequence generate_sequence(const GaitIdentitySpec& id, const CameraSpec& camera, int frames, std::uint64_t seed,
                               std::uint64_t jitter_seed) {
    if (frames < 1) throw ConfigError("synthetic sequences need at least one frame");
    if (!(camera.scale > 0.0)) throw ConfigError("camera scale must be positive");
    Engine motion = stream(seed, static_cast<std::uint64_t>(id.id), 0, 21);
    const double phase = uniform(motion, 0.0, 2.0 * std::numbers::pi);
    const double cadence = uniform(motion, 0.95, 1.05);
    const double amplitude = uniform(motion, 0.92, 1.08);
    Engine jitter = stream(jitter_seed, static_cast<std::uint64_t>(id.id), 0, 31);
    std::normal_distribution<double> noise(0.0, camera.jitter > 0.0 ? camera.jitter : 1.0);

    PoseSequence seq;
    seq.subject = "s" + padded(id.id, 3);
    seq.frames.reserve(frames);
    for (int t = 0; t < frames; ++t) {
        const Coords c = apply_camera(walker_pose(id, t, phase, cadence, amplitude), camera);
        PoseFrame f;
        for (int i = 0; i < kNumJoints; ++i) {
            f[i] = {c[i].x, c[i].y, 1.0};
            if (camera.jitter > 0.0) {
                f[i].x += noise(jitter);
                f[i].y += noise(jitter);
            }
        }
        seq.frames.push_back(f);
    }
    return seq;
}

SynthDataset generate_dataset(const SynthOptions& o, const std::filesystem::path& out_dir) {
    if (o.identities < 2) throw ConfigError("synth.identities must be >= 2");
    if (o.sequences_per_identity < 1) throw ConfigError("synth.sequences_per_identity must be >= 1");
    SynthDataset ds;
    ds.identities = sample_identities(o.identities + o.train_identities, o.seed, o.min_spacing);
    const std::uint64_t camera_seed = o.camera_seed ? o.camera_seed : o.seed ^ 0x9e3779b97f4a7c15ULL;
    const auto seq_dir = out_dir / "sequences";
    std::filesystem::create_directories(seq_dir);
    ds.manifest.protocol = o.layout == SynthLayout::CasiaB ? Protocol::CasiaB : Protocol::Simple;

    auto camera_for = [&](int identity, int serial) {
        Engine rng = stream(camera_seed, static_cast<std::uint64_t>(identity), static_cast<std::uint64_t>(serial), 41);
        CameraSpec cam;
        cam.scale = o.camera.scale_min == o.camera.scale_max ? o.camera.scale_min
                                                             : uniform(rng, o.camera.scale_min, o.camera.scale_max);
        if (o.camera.translate > 0.0) {
            cam.translation = {uniform(rng, -o.camera.translate, o.camera.translate),
                               uniform(rng, -o.camera.translate, o.camera.translate)};
        }
        if (!o.camera.slants.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, o.camera.slants.size() - 1);
            cam.slant = o.camera.slants[pick(rng)];
        }
        cam.jitter = o.camera.jitter;
        return cam;
    };
    auto emit = [&](PoseSequence seq, Role role) {
        const auto path = seq_dir / (seq.seq_id + ".jsonl");
        write_sequence_file(path, {seq});
        ds.manifest.entries.push_back({std::filesystem::path("sequences") / (seq.seq_id + ".jsonl"), role});
    };
    auto motion_seed = [&](int identity, int serial) {
        return o.seed * 1000003ULL + static_cast<std::uint64_t>(identity) * 7919ULL + static_cast<std::uint64_t>(serial);
    };

    for (int i = 0; i < o.identities + o.train_identities; ++i) {
        const bool train = i >= o.identities;
        const GaitIdentitySpec& id = ds.identities[i];
        if (o.layout == SynthLayout::CasiaB && !train) {
            struct Variant {
                Condition cond;
                int count;
            };
            int serial = 0;
            for (std::size_t v = 0; v < o.views.size(); ++v) {
                for (const Variant var : {Variant{Condition::NM, 6}, Variant{Condition::BG, 2}, Variant{Condition::CL, 2}}) {
                    for (int k = 1; k <= var.count; ++k, ++serial) {
                        GaitIdentitySpec look = id;
                        if (var.cond == Condition::BG) look.arm_amp *= 0.6;
                        if (var.cond == Condition::CL) look.shoulder_width *= 1.08;
                        CameraSpec cam = camera_for(i, serial);
                        PoseSequence seq = generate_sequence(look, cam, o.frames, motion_seed(i, serial),
                                                             camera_seed + static_cast<std::uint64_t>(serial));
                        seq.condition = var.cond;
                        seq.view = o.views[v];
                        std::string cond(to_string(var.cond));
                        std::transform(cond.begin(), cond.end(), cond.begin(), ::tolower);
                        seq.seq_id = seq.subject + "-" + cond + "-" + padded(k, 2) + "-" + seq.view;
                        emit(std::move(seq), Role::Gallery);
                    }
                }
            }
            continue;
        }
        const int count = train ? o.train_sequences_per_identity : o.sequences_per_identity;
        for (int k = 0; k < count; ++k) {
            PoseSequence seq = generate_sequence(id, camera_for(i, k), o.frames, motion_seed(i, k),
                                                 camera_seed + static_cast<std::uint64_t>(k));
            seq.condition = Condition::NM;
            seq.view = "000";
            seq.seq_id = seq.subject + "-nm-" + padded(k + 1, 2) + "-" + seq.view;
            emit(std::move(seq), train ? Role::Train : (k == 0 ? Role::Probe : Role::Gallery));
        }
    }
    ds.manifest_path = out_dir / "manifest.tsv";
    write_manifest(ds.manifest, ds.manifest_path);
    return ds;
}

}  // namespace gpgait
