// SPDX-License-Identifier: Apache-2.0
//
// Metric-learning training: batch sampling, augmentation, per-part triplet and
// cross-entropy losses, Adam and the one-cycle schedule.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gpgait/checkpoint.hpp"
#include "gpgait/hot.hpp"
#include "gpgait/pagcn.hpp"

namespace gpgait {

struct TrainConfig {
    int subjects_per_batch = 4;    // P
    int samples_per_subject = 32;  // K
    int seq_len = 60;              // L
    double margin = 0.2;
    double gamma = 1.0;
    std::int64_t iterations = 40000;
    double lr_init = 1e-5;
    double lr_max = 1e-3;
    double lr_final = 1e-8;
    double phase1 = 0.3;
    double phase2 = 0.6;
    double flip_prob = 0.01;
    double noise_prob = 0.3;
    double noise_sigma = 2.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::int64_t log_every = 10;
    std::int64_t checkpoint_every = 1000;
    std::uint64_t seed = 0;

    void validate() const;
};

// ------------------------------------------------------------------ sampling

/// Unified training sequences with dense labels 0..num_classes-1 assigned to
/// subjects in order of first appearance.
struct TrainSet {
    std::vector<UnifiedPoseSequence> sequences;
    std::vector<int> labels;
    std::vector<std::string> subjects;  // label -> subject

    int num_classes() const { return static_cast<int>(subjects.size()); }
};
TrainSet make_train_set(std::vector<UnifiedPoseSequence> sequences);

struct Batch {
    std::vector<std::vector<Coords>> clips;
    std::vector<int> labels;
    std::vector<std::size_t> sources;                    // index into TrainSet::sequences
    std::vector<std::vector<std::size_t>> frame_indices;  // per clip
};

/// P distinct subjects, K sequences each (with replacement when a subject has
/// fewer), L frames per sequence drawn in random order (with replacement when
/// the sequence is shorter than L).
Batch sample_batch(const TrainSet& set, int subjects, int per_subject, int frames, Rng& rng);

/// Negates x and swaps every left/right joint pair.
Coords flip_pose(const Coords& frame);
/// Flips the whole clip with probability `p`; returns whether it flipped.
bool augment_flip(std::vector<Coords>& clip, double p, Rng& rng);
/// Adds N(0, sigma^2) to both coordinates of each keypoint independently with
/// probability `p`.
void augment_noise(std::vector<Coords>& clip, double p, double sigma, Rng& rng);

// -------------------------------------------------------------------- losses

struct LossValue {
    double loss = 0.0;
    RowMatrix grad;  // d loss / d input, same shape as the input
};

struct TripletValue : LossValue {
    int valid_anchors = 0;   // anchors with a positive and a negative
    int active_anchors = 0;  // anchors with a positive hinge
};

/// Batch-hard triplet loss on Euclidean distances, averaged over valid
/// anchors. Ties pick the lowest index. 0 when no anchor is valid.
TripletValue triplet_loss(const RowMatrix& features, const std::vector<int>& labels, double margin);

/// Mean softmax cross-entropy. Throws DataError for an out-of-range label.
LossValue cross_entropy_loss(const RowMatrix& logits, const std::vector<int>& labels);

/// mean_s (triplet[s] + gamma * ce[s]).
double combined_loss(const std::vector<double>& triplet, const std::vector<double>& ce, double gamma);

struct LossReport {
    double total = 0.0;
    double triplet = 0.0;  // mean over slots
    double ce = 0.0;       // mean over slots
    double active_fraction = 0.0;
    bool no_valid_anchor = false;
    std::vector<RowMatrix> dmetric;
    std::vector<RowMatrix> dlogits;
};

/// Combined loss over every slot of `emb` and its gradients.
LossReport network_loss(const EmbeddingBatch& emb, const std::vector<int>& labels, double margin, double gamma);

// ----------------------------------------------------------------- optimizer

struct AdamState {
    std::int64_t step = 0;
    std::map<std::string, std::pair<RowMatrix, RowMatrix>> moments;  // name -> (m, v)
};

/// One Adam update of every trainable tensor. Throws NumericError naming the
/// first tensor with a non-finite gradient before touching any parameter.
void adam_step(ParameterStore& params, AdamState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

/// Three-phase one-cycle schedule over iterations 0..total-1: linear
/// lr_init -> lr_max until round(phase1 * total), cosine back to lr_init until
/// round((phase1 + phase2) * total), then linear to lr_final at total - 1.
double one_cycle_lr(std::int64_t iteration, std::int64_t total, double lr_init, double lr_max, double lr_final,
                    double phase1 = 0.3, double phase2 = 0.6);

/// The same schedule on a continuous position u in [0, total - 1]. `phase`
/// (1, 2 or 3) selects which branch to evaluate, so boundary continuity can be
/// checked from both sides; 0 picks the branch that owns u.
double one_cycle_lr_at(double u, std::int64_t total, double lr_init, double lr_max, double lr_final, double phase1,
                       double phase2, int phase = 0);

// ------------------------------------------------------------------- the loop

struct IterationRecord {
    std::int64_t iteration = 0;
    double lr = 0.0;
    double loss = 0.0;
    double triplet = 0.0;
    double ce = 0.0;
    double active_fraction = 0.0;
};

struct TrainOutputs {
    std::filesystem::path checkpoint;  // empty: no checkpoints
    std::filesystem::path metrics;     // empty: no log
    std::string config_text;           // echoed into checkpoints
    std::function<void(const IterationRecord&)> on_log;
};

/// Per-iteration generator seeded from (seed, iteration), so a resumed run
/// draws the same batches as an uninterrupted one.
Rng iteration_rng(std::uint64_t seed, std::int64_t iteration);

/// Clip -> descriptors, with flip and noise applied first.
DescriptorSet augmented_descriptors(std::vector<Coords> clip, const TrainConfig& config, Rng& rng);

/// One optimisation step. Returns the record that would be logged.
IterationRecord train_step(Network& net, AdamState& adam, const TrainSet& set, const TrainConfig& config,
                           std::int64_t iteration);

Checkpoint make_checkpoint(const Network& net, const AdamState& adam, std::int64_t iteration,
                           const std::string& config_text);
/// Restores parameters and, when present, optimizer moments.
void restore_checkpoint(const Checkpoint& ckpt, Network& net, AdamState* adam);

/// Runs iterations [adam.step, config.iterations). Checkpoints every
/// checkpoint_every iterations and at the end; a non-finite loss throws
/// NumericError and leaves the last checkpoint untouched.
void train_loop(Network& net, AdamState& adam, const TrainSet& set, const TrainConfig& config,
                const TrainOutputs& outputs);

}  // namespace gpgait
