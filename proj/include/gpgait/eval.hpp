// SPDX-License-Identifier: Apache-2.0
//
// Retrieval evaluation: embeddings, distances, rank-1 protocols, results
// files and the keypoint heatmap dump.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gpgait/hod.hpp"
#include "gpgait/hot.hpp"
#include "gpgait/pagcn.hpp"
#include "gpgait/pose_io.hpp"

namespace gpgait {

enum class DistanceMetric { Euclidean, Cosine };
std::string_view to_string(DistanceMetric m);
DistanceMetric parse_distance_metric(std::string_view s);

struct EncodeOptions {
    bool use_hot = true;
    HotConfig hot;
};

/// Pose sequence -> HOT (or raw coordinates) -> descriptors.
DescriptorSet encode_sequence(const PoseSequence& seq, const EncodeOptions& options);

/// Inference-mode embedding (all 18 metric features concatenated) of each
/// set. Sets in one call must share a frame count.
std::vector<Eigen::VectorXd> embed_batch(const Network& net, const std::vector<const DescriptorSet*>& batch);

/// One full-length forward pass per sequence. `threads` > 1 spreads sequences
/// over worker threads; results do not depend on it.
std::vector<Eigen::VectorXd> embed_dataset(const Network& net, const std::vector<DescriptorSet>& sets,
                                           int threads = 1);

/// probe x gallery distances.
RowMatrix pairwise_distances(const std::vector<Eigen::VectorXd>& probe, const std::vector<Eigen::VectorXd>& gallery,
                             DistanceMetric metric = DistanceMetric::Euclidean);

/// Index of the smallest entry of row `p`; ties go to the lowest index.
Eigen::Index nearest_gallery(const RowMatrix& distances, Eigen::Index p);

/// Fraction of probes whose nearest gallery entry carries the same label.
double rank1_simple(const RowMatrix& distances, const std::vector<std::string>& probe_labels,
                    const std::vector<std::string>& gallery_labels);

// --------------------------------------------------------- cross-view cells

/// Labels needed by the view-aware protocols.
struct ProtocolItem {
    std::string subject;
    Condition condition = Condition::NM;
    int index = 0;  // sequence number within (subject, condition)
    std::string view;
};

/// Parses the sequence number out of seq_id: "<subject>-<cond>-<idx>-<view>"
/// for casiab and "<subject>-<idx>-<view>" for oumvlp.
ProtocolItem protocol_item(const PoseSequence& seq, Protocol protocol);

enum class CellStatus { Evaluated, IdenticalView, Missing };
std::string_view to_string(CellStatus s);

struct CrossViewCell {
    Condition condition = Condition::NM;
    std::string probe_view;
    std::string gallery_view;
    CellStatus status = CellStatus::Missing;
    double accuracy = 0.0;
    int probes = 0;
};

struct ConditionSummary {
    Condition condition = Condition::NM;
    double accuracy = 0.0;
    int cells = 0;
};

struct CrossViewResult {
    std::vector<CrossViewCell> cells;  // every (condition, probe view, gallery view)
    std::vector<ConditionSummary> per_condition;
    double mean = 0.0;
    std::vector<std::string> warnings;

    /// True exactly for the cells that entered an average.
    std::vector<bool> averaged_mask() const;
};

/// Gallery NM#1-4; probes NM#5-6, BG#1-2, CL#1-2. Every probe/gallery view
/// pair forms a cell scored against the gallery restricted to that view;
/// identical-view cells are never averaged. Cells count equally.
CrossViewResult rank1_casiab(const std::vector<ProtocolItem>& items, const std::vector<Eigen::VectorXd>& embeddings,
                             DistanceMetric metric = DistanceMetric::Euclidean);

/// Same cell structure with gallery #01 and probe #00 under one condition.
CrossViewResult rank1_oumvlp(const std::vector<ProtocolItem>& items, const std::vector<Eigen::VectorXd>& embeddings,
                             DistanceMetric metric = DistanceMetric::Euclidean);

// ------------------------------------------------------------------ reports

struct ResultRecord {
    std::string kind;  // cell | summary | warning
    std::string condition;
    std::string probe_view;
    std::string gallery_view;
    std::string status;
    double accuracy = 0.0;
    int count = 0;
    std::string message;
};

struct EvalReport {
    Protocol protocol = Protocol::Simple;
    double rank1 = 0.0;  // headline number: simple accuracy or cross-view mean
    int probes = 0;
    int gallery = 0;
    std::vector<ResultRecord> records;
};

/// Gallery/probe assignment for the manifest-driven protocols. simple and
/// gait3d use manifest roles; grew takes each subject's first two sequences
/// (by seq_id) as gallery and the next two as probe.
std::vector<Role> assign_roles(const std::vector<DatasetItem>& items, Protocol protocol);

/// Encodes, embeds and scores `items` under `protocol`.
EvalReport evaluate_dataset(const Network& net, const std::vector<DatasetItem>& items, Protocol protocol,
                            const EncodeOptions& encode, DistanceMetric metric = DistanceMetric::Euclidean,
                            int threads = 1);

/// Scores precomputed embeddings (same order as `items`).
EvalReport score_embeddings(const std::vector<DatasetItem>& items, const std::vector<Eigen::VectorXd>& embeddings,
                            Protocol protocol, DistanceMetric metric = DistanceMetric::Euclidean);

std::string format_results(const EvalReport& report);
void write_results(const std::filesystem::path& path, const EvalReport& report);

// ------------------------------------------------------------------ heatmap

/// 17 x min(C, channels) matrix: max over frames of the first sequence's
/// per-keypoint features.
RowMatrix heatmap_matrix(const FeatureTensor& features, int channels = 17);
void write_heatmap(const std::filesystem::path& path, const RowMatrix& heatmap);

}  // namespace gpgait
