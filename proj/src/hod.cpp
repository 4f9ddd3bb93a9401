// SPDX-License-Identifier: Apache-2.0
#include "gpgait/hod.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gpgait {

AngleRoles default_angle_roles() {
    AngleRoles roles;
    auto inner = [&](int self, int l, int r) { roles[self] = {AngleRole::Kind::Inner, l, r, -1}; };
    inner(5, 7, 11);
    inner(6, 8, 12);
    inner(7, 5, 9);
    inner(8, 6, 10);
    inner(11, 5, 13);
    inner(12, 6, 14);
    inner(13, 11, 15);
    inner(14, 12, 16);
    for (int j : {0, 1, 2, 3, 4, 9, 10, 15, 16}) roles[j] = {AngleRole::Kind::Peripheral, -1, -1, kCocoParent[j]};
    return roles;
}

Coords compute_bones(const Coords& frame, const std::array<int, kNumJoints>& parent) {
    Coords bones;
    for (int i = 0; i < kNumJoints; ++i) bones[i] = parent[i] < 0 ? Point2{} : frame[i] - frame[parent[i]];
    return bones;
}

double slant_angle(double dx, double dy) {
    if (dy == 0.0) return dx == 0.0 ? 0.0 : std::numbers::pi / 2.0;
    if (dx == 0.0) return 0.0;
    return std::atan(dx / dy);
}

std::array<double, kNumJoints> compute_angles(const Coords& frame, const AngleRoles& roles,
                                              std::vector<int>* zero_side_joints) {
    std::array<double, kNumJoints> out{};
    for (int i = 0; i < kNumJoints; ++i) {
        const AngleRole& role = roles[i];
        if (role.kind == AngleRole::Kind::Inner) {
            const Point2 l = frame[role.left] - frame[i];
            const Point2 r = frame[role.right] - frame[i];
            const Point2 o = frame[role.left] - frame[role.right];
            const double sl = std::hypot(l.x, l.y);
            const double sr = std::hypot(r.x, r.y);
            if (sl == 0.0 || sr == 0.0) {
                out[i] = 0.0;
                if (zero_side_joints) zero_side_joints->push_back(i);
                continue;
            }
            const double so2 = o.x * o.x + o.y * o.y;
            const double cosine = (sl * sl + sr * sr - so2) / (2.0 * sl * sr);
            out[i] = std::acos(std::clamp(cosine, -1.0, 1.0));
        } else {
            const Point2 ref = role.adj < 0 ? Point2{} : frame[role.adj];
            out[i] = slant_angle(frame[i].x - ref.x, frame[i].y - ref.y);
        }
    }
    return out;
}

DescriptorSet build_descriptors(const std::vector<Coords>& frames, const SkeletonTopology& topology,
                                const AngleRoles& roles) {
    DescriptorSet d;
    d.frames = frames.size();
    d.joint.reserve(frames.size() * kNumJoints * 2);
    d.bone.reserve(frames.size() * kNumJoints * 2);
    d.angle.reserve(frames.size() * kNumJoints);
    std::vector<int> zero_sides;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const Coords& frame = frames[f];
        const Coords bones = compute_bones(frame, topology.parent);
        zero_sides.clear();
        const auto angles = compute_angles(frame, roles, &zero_sides);
        for (int j : zero_sides) d.warnings.push_back({f, j});
        for (int i = 0; i < kNumJoints; ++i) {
            d.joint.push_back(frame[i].x);
            d.joint.push_back(frame[i].y);
            d.bone.push_back(bones[i].x);
            d.bone.push_back(bones[i].y);
            d.angle.push_back(angles[i]);
        }
    }
    return d;
}

DescriptorSet build_descriptors(const UnifiedPoseSequence& useq, const SkeletonTopology& topology,
                                const AngleRoles& roles) {
    return build_descriptors(useq.frames, topology, roles);
}

}  // namespace gpgait
