// SPDX-License-Identifier: Apache-2.0
#include "gpgait/graph.hpp"

#include <cmath>
#include <sstream>

namespace gpgait {

JointMatrix SkeletonTopology::adjacency() const {
    JointMatrix a = JointMatrix::Zero();
    for (auto [i, j] : edges) {
        a(i, j) = 1.0;
        a(j, i) = 1.0;
    }
    return a;
}

bool SkeletonTopology::connected() const {
    const JointMatrix a = adjacency();
    std::array<bool, kNumJoints> seen{};
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w = 0; w < kNumJoints; ++w) {
            if (a(v, w) != 0.0 && !seen[w]) {
                seen[w] = true;
                stack.push_back(w);
            }
        }
    }
    for (bool s : seen) {
        if (!s) return false;
    }
    return true;
}

SkeletonTopology SkeletonTopology::coco17() {
    SkeletonTopology t;
    t.edges = {{15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12}, {5, 6}, {5, 7}, {6, 8},
               {7, 9},   {8, 10},  {1, 2},   {0, 1},   {0, 2},   {1, 3},  {2, 4},  {3, 5}, {4, 6}};
    // Facing the camera: the subject's left side has larger x.
    t.reference_pose = {{{0, -22},
                         {5, -26},
                         {-5, -26},
                         {10, -24},
                         {-10, -24},
                         {20, 0},
                         {-20, 0},
                         {50, 0},
                         {-50, 0},
                         {80, 0},
                         {-80, 0},
                         {12, 55},
                         {-12, 55},
                         {12, 100},
                         {-12, 100},
                         {12, 145},
                         {-12, 145}}};
    return t;
}

JointMatrix column_normalize(const JointMatrix& m) {
    JointMatrix out = m;
    for (int c = 0; c < kNumJoints; ++c) {
        const double sum = m.col(c).sum();
        if (sum != 0.0) out.col(c) /= sum;
    }
    return out;
}

AdjacencySubsets build_adjacency_subsets(const SkeletonTopology& topology) {
    Point2 center;
    for (const auto& p : topology.reference_pose) center = center + p;
    center = (1.0 / kNumJoints) * center;
    std::array<double, kNumJoints> dist{};
    for (int i = 0; i < kNumJoints; ++i) {
        const Point2 d = topology.reference_pose[i] - center;
        dist[i] = std::hypot(d.x, d.y);
    }

    const JointMatrix a = topology.adjacency();
    AdjacencySubsets subsets;
    subsets.raw.assign(3, JointMatrix::Zero());
    subsets.raw[0] = JointMatrix::Identity();
    for (int v = 0; v < kNumJoints; ++v) {
        for (int w = 0; w < kNumJoints; ++w) {
            if (a(v, w) == 0.0) continue;
            // w receives from v; classify v relative to w.
            subsets.raw[dist[v] <= dist[w] ? 1 : 2](v, w) = 1.0;
        }
    }
    for (const auto& r : subsets.raw) subsets.normalized.push_back(column_normalize(r));
    return subsets;
}

PartitionScheme scheme_parts5() {
    return {"parts5", {{0, 1, 2, 3, 4}, {5, 7, 9}, {6, 8, 10}, {11, 13, 15}, {12, 14, 16}}};
}

PartitionScheme scheme_upper_lower() {
    return {"upper_lower", {{0, 1, 2, 3, 4, 5, 7, 9, 6, 8, 10}, {11, 13, 15, 12, 14, 16}}};
}

PartitionScheme scheme_three_groups() {
    return {"three_groups", {{0, 1, 2, 3, 4}, {5, 7, 9, 6, 8, 10}, {11, 13, 15, 12, 14, 16}}};
}

PartitionScheme scheme_left_right() {
    return {"left_right", {{0, 1, 2, 3, 4}, {5, 7, 9, 11, 13, 15}, {6, 8, 10, 12, 14, 16}}};
}

PartitionScheme scheme_global() {
    PartitionScheme s{"global", {{}}};
    for (int i = 0; i < kNumJoints; ++i) s.groups[0].push_back(i);
    return s;
}

const std::vector<std::string>& scheme_names() {
    static const std::vector<std::string> names{"parts5", "upper_lower", "three_groups", "left_right", "global"};
    return names;
}

PartitionScheme scheme_by_name(const std::string& name) {
    if (name == "parts5") return scheme_parts5();
    if (name == "upper_lower") return scheme_upper_lower();
    if (name == "three_groups") return scheme_three_groups();
    if (name == "left_right") return scheme_left_right();
    if (name == "global") return scheme_global();
    throw ConfigError("unknown partition scheme '" + name + "'");
}

PartitionScheme parse_scheme(const std::string& name, const std::string& text) {
    PartitionScheme scheme{name, {}};
    std::stringstream groups(text);
    std::string group;
    while (std::getline(groups, group, '|')) {
        std::vector<int> joints;
        std::stringstream items(group);
        std::string item;
        while (std::getline(items, item, ',')) {
            try {
                std::size_t used = 0;
                joints.push_back(std::stoi(item, &used));
                if (item.find_first_not_of(' ', used) != std::string::npos) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw ConfigError("scheme '" + name + "': bad joint index '" + item + "'");
            }
        }
        scheme.groups.push_back(std::move(joints));
    }
    validate_scheme(scheme);
    return scheme;
}

std::string format_scheme(const PartitionScheme& scheme) {
    std::string out;
    for (std::size_t g = 0; g < scheme.groups.size(); ++g) {
        if (g) out += '|';
        for (std::size_t i = 0; i < scheme.groups[g].size(); ++i) {
            if (i) out += ',';
            out += std::to_string(scheme.groups[g][i]);
        }
    }
    return out;
}

void validate_scheme(const PartitionScheme& scheme) {
    std::array<int, kNumJoints> owner;
    owner.fill(-1);
    for (std::size_t g = 0; g < scheme.groups.size(); ++g) {
        if (scheme.groups[g].empty()) throw ConfigError("scheme '" + scheme.name + "': empty group");
        for (int j : scheme.groups[g]) {
            if (j < 0 || j >= kNumJoints) {
                throw ConfigError("scheme '" + scheme.name + "': joint " + std::to_string(j) + " out of range");
            }
            if (owner[j] != -1) {
                throw ConfigError("scheme '" + scheme.name + "': joint " + std::to_string(j) + " in two groups");
            }
            owner[j] = static_cast<int>(g);
        }
    }
    for (int j = 0; j < kNumJoints; ++j) {
        if (owner[j] == -1) throw ConfigError("scheme '" + scheme.name + "': joint " + std::to_string(j) + " not covered");
    }
}

JointMatrix build_partition_mask(const PartitionScheme& scheme) {
    validate_scheme(scheme);
    JointMatrix m = JointMatrix::Zero();
    for (const auto& group : scheme.groups) {
        for (int i : group) {
            for (int j : group) m(i, j) = 1.0;
        }
    }
    return m;
}

}  // namespace gpgait
