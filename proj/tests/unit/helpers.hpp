// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "gpgait/pose_io.hpp"
#include "gpgait/synth.hpp"

namespace gpgait::testing {

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("gpgait_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline PoseFrame to_frame(const Coords& c, double confidence = 1.0) {
    PoseFrame f;
    for (int i = 0; i < kNumJoints; ++i) f[i] = {c[i].x, c[i].y, confidence};
    return f;
}

/// A plausible upright pose with a few random limb angles.
inline Coords random_upright_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GaitIdentitySpec id;
    id.shoulder_width = 0.6 + 0.4 * u(rng);
    id.hip_width = 0.4 + 0.3 * u(rng);
    id.thigh = 0.75 + 0.3 * u(rng);
    id.shin = 0.7 + 0.3 * u(rng);
    id.stride_amp = 0.2 + 0.3 * u(rng);
    return walker_pose(id, 40.0 * u(rng), 6.28 * u(rng), 1.0, 1.0);
}

inline PoseSequence sequence_of(const std::vector<Coords>& frames, const std::string& id = "s000-nm-01-000") {
    PoseSequence seq;
    seq.seq_id = id;
    seq.subject = id.substr(0, 4);
    seq.view = "000";
    for (const auto& c : frames) seq.frames.push_back(to_frame(c));
    return seq;
}

}  // namespace gpgait::testing
