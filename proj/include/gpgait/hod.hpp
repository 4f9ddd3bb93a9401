// SPDX-License-Identifier: Apache-2.0
//
// Human-oriented descriptors: joints, bone vectors and joint angles computed
// from unified poses.
#pragma once

#include <array>
#include <vector>

#include "gpgait/common.hpp"
#include "gpgait/graph.hpp"
#include "gpgait/hot.hpp"

namespace gpgait {

struct AngleRole {
    enum class Kind { Inner, Peripheral };
    Kind kind = Kind::Peripheral;
    int left = -1;   // inner: first neighbour of the triangle
    int right = -1;  // inner: second neighbour
    int adj = -1;    // peripheral: reference joint, -1 means the virtual neck
};

using AngleRoles = std::array<AngleRole, kNumJoints>;

/// Elbows, shoulders, hips and knees are inner angles; head and extremities
/// are peripheral angles against their parent joint.
AngleRoles default_angle_roles();

Coords compute_bones(const Coords& frame, const std::array<int, kNumJoints>& parent);

/// atan(dx / dy) mapped into (-pi/2, pi/2]; 0 when dx == dy == 0.
double slant_angle(double dx, double dy);

/// Angle at each joint. Inner joints with a zero-length adjacent side get 0
/// and are appended to `zero_side_joints` when given.
std::array<double, kNumJoints> compute_angles(const Coords& frame, const AngleRoles& roles,
                                              std::vector<int>* zero_side_joints = nullptr);

struct DescriptorWarning {
    std::size_t frame = 0;
    int joint = 0;
};

/// Per-sequence descriptor tensors in (T, 17, C) row-major layout.
struct DescriptorSet {
    std::size_t frames = 0;
    std::vector<double> joint;  // T*17*2
    std::vector<double> bone;   // T*17*2
    std::vector<double> angle;  // T*17*1
    std::vector<DescriptorWarning> warnings;
};

DescriptorSet build_descriptors(const UnifiedPoseSequence& useq, const SkeletonTopology& topology,
                                const AngleRoles& roles = default_angle_roles());
DescriptorSet build_descriptors(const std::vector<Coords>& frames, const SkeletonTopology& topology,
                                const AngleRoles& roles = default_angle_roles());

}  // namespace gpgait
