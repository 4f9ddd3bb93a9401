// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gpgait/common.hpp"

namespace gpgait {

using JointMatrix = Eigen::Matrix<double, kNumJoints, kNumJoints, Eigen::RowMajor>;

// Parent of each joint in the bone tree rooted at the nose (-1 for the root).
inline constexpr std::array<int, kNumJoints> kCocoParent = {-1, 0, 0, 1, 2, 0, 0, 5, 6, 7, 8, 5, 6, 11, 12, 13, 14};

struct SkeletonTopology {
    std::vector<std::pair<int, int>> edges;
    std::array<int, kNumJoints> parent = kCocoParent;
    // Canonical T-pose used to rank neighbours by distance to the barycenter.
    Coords reference_pose;

    /// Symmetric 0/1 skeleton adjacency without self-loops.
    JointMatrix adjacency() const;
    bool connected() const;

    static SkeletonTopology coco17();
};

/// K_v = 3 spatial-configuration subsets. A[k](v, w) is the weight with which
/// joint v feeds joint w: k=0 self-loops, k=1 neighbours at most as far from
/// the barycenter as w, k=2 neighbours farther away.
struct AdjacencySubsets {
    std::vector<JointMatrix> raw;         // 0/1 before normalisation
    std::vector<JointMatrix> normalized;  // columns of each subset sum to 1 (or 0)
};

AdjacencySubsets build_adjacency_subsets(const SkeletonTopology& topology);
JointMatrix column_normalize(const JointMatrix& m);

struct PartitionScheme {
    std::string name;
    std::vector<std::vector<int>> groups;
};

// Named schemes. parts5 is head / left arm / right arm / left leg / right leg;
// the larger schemes merge those five parts.
PartitionScheme scheme_parts5();
PartitionScheme scheme_upper_lower();
PartitionScheme scheme_three_groups();
PartitionScheme scheme_left_right();
PartitionScheme scheme_global();
PartitionScheme scheme_by_name(const std::string& name);
const std::vector<std::string>& scheme_names();

/// Parses "0,1,2|5,7,9|..." into groups.
PartitionScheme parse_scheme(const std::string& name, const std::string& text);
std::string format_scheme(const PartitionScheme& scheme);

/// Throws ConfigError when groups overlap, miss a joint or reference an
/// invalid index.
void validate_scheme(const PartitionScheme& scheme);

/// M(i, j) = 1 iff i and j share a group.
JointMatrix build_partition_mask(const PartitionScheme& scheme);

}  // namespace gpgait
