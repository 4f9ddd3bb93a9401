// SPDX-License-Identifier: Apache-2.0
//
// Part-aware graph convolutional network. Every layer has a forward pass that
// optionally records a cache and a backward pass that consumes it, adds
// parameter gradients into Parameter::grad and returns the input gradient.
//
// Forward passes in Mode::Eval with no cache never write to shared state, so
// concurrent inference on one Network is safe. Mode::Train updates the
// batch-norm running statistics and must be single-writer.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gpgait/graph.hpp"
#include "gpgait/hod.hpp"
#include "gpgait/tensor.hpp"

namespace gpgait {

// ---------------------------------------------------------------- batch norm

struct BatchNormCache {
    Mode mode = Mode::Eval;
    RowMatrix xhat;
    Eigen::RowVectorXd inv_std;
};

/// Per-channel normalisation over all rows of a (samples x channels) matrix.
class BatchNorm {
public:
    BatchNorm() = default;
    BatchNorm(ParameterStore& store, const std::string& prefix, int channels, double momentum, double eps);

    RowMatrix forward(const RowMatrix& x, Mode mode, BatchNormCache* cache) const;
    RowMatrix backward(const RowMatrix& dy, const BatchNormCache& cache) const;

    Parameter& gamma() const { return *gamma_; }
    Parameter& beta() const { return *beta_; }
    Parameter& running_mean() const { return *mean_; }
    Parameter& running_var() const { return *var_; }
    double eps() const { return eps_; }

private:
    Parameter* gamma_ = nullptr;
    Parameter* beta_ = nullptr;
    Parameter* mean_ = nullptr;
    Parameter* var_ = nullptr;
    double momentum_ = 0.9;
    double eps_ = 1e-5;
};

// ------------------------------------------------------------- graph pieces

/// Attention adjacency per sequence: features are averaged over time, projected
/// by `wq` and `wk`, compared by scaled dot product and row-softmaxed. With a
/// mask, each row's softmax covers only the mask support and other entries
/// are 0.
std::vector<JointMatrix> attention_adjacency(const FeatureTensor& x, const RowMatrix& wq, const RowMatrix& wk,
                                             const JointMatrix* mask = nullptr);

struct SpatialCache {
    FeatureTensor input;
    RowMatrix pooled;                    // (N*V) x C_in temporal means
    std::vector<JointMatrix> attention;  // index n * K + k
};

/// f_out = sum_k W_k (f_in ((A_k + B_k + C_k) .* M)).
class SpatialGraphConv {
public:
    SpatialGraphConv(ParameterStore& store, const std::string& prefix, int in_channels, int out_channels,
                     std::vector<JointMatrix> subsets, const JointMatrix& mask, bool attention, Rng& rng);

    FeatureTensor forward(const FeatureTensor& x, SpatialCache* cache) const;
    FeatureTensor backward(const FeatureTensor& dy, const SpatialCache& cache) const;

    /// (A_k + B_k + C) .* M for one subset, with C the attention matrix or zero.
    JointMatrix combined_adjacency(int k, const JointMatrix* attention) const;

    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }
    int attention_channels() const { return embed_channels_; }
    int subset_count() const { return static_cast<int>(subsets_.size()); }
    bool uses_attention() const { return attention_; }
    const JointMatrix& mask() const { return mask_; }
    const JointMatrix& subset(int k) const { return subsets_[k]; }
    Parameter& weight(int k) const { return *weights_[k]; }
    Parameter& learned_adjacency(int k) const { return *learned_[k]; }
    Parameter& query(int k) const { return *queries_[k]; }
    Parameter& key(int k) const { return *keys_[k]; }

private:
    void aggregate(const FeatureTensor& x, int n, const JointMatrix& adj, RowMatrix& out) const;

    int in_channels_;
    int out_channels_;
    int embed_channels_;
    bool attention_;
    std::vector<JointMatrix> subsets_;
    JointMatrix mask_;
    std::vector<Parameter*> weights_;
    std::vector<Parameter*> learned_;
    std::vector<Parameter*> queries_;
    std::vector<Parameter*> keys_;
};

/// Depthwise temporal convolution, odd kernel, stride 1, zero "same" padding.
/// `w` is kernel x channels.
FeatureTensor temporal_conv(const FeatureTensor& x, const RowMatrix& w);
void temporal_conv_backward(const FeatureTensor& x, const RowMatrix& w, const FeatureTensor& dy, FeatureTensor& dx,
                            RowMatrix& dw);

// ------------------------------------------------------------------- blocks

struct BlockSpec {
    std::string scheme;
    int in_channels = 0;
    int out_channels = 0;
};

struct BlockCache {
    SpatialCache spatial;
    BatchNormCache bn1;
    BatchNormCache bn2;
    FeatureTensor act1;  // relu(bn1(spatial)), input of the temporal conv
    RowMatrix act2;      // relu(bn2(temporal)), before the residual
};

struct BlockOptions {
    int temporal_kernel = 3;
    bool attention = true;
    double bn_momentum = 0.9;
    double bn_eps = 1e-5;
};

/// spatial conv -> BN -> ReLU -> temporal conv -> BN -> ReLU -> identity
/// residual when the channel counts match.
class PagcnBlock {
public:
    PagcnBlock(ParameterStore& store, const std::string& prefix, const BlockSpec& spec, const AdjacencySubsets& subsets,
               const JointMatrix& mask, const BlockOptions& options, Rng& rng);

    FeatureTensor forward(const FeatureTensor& x, Mode mode, BlockCache* cache) const;
    FeatureTensor backward(const FeatureTensor& dy, const BlockCache& cache) const;

    const BlockSpec& spec() const { return spec_; }
    const SpatialGraphConv& spatial() const { return spatial_; }
    const BatchNorm& bn1() const { return bn1_; }
    const BatchNorm& bn2() const { return bn2_; }
    Parameter& temporal_weight() const { return *temporal_; }
    bool residual() const { return spec_.in_channels == spec_.out_channels; }

private:
    BlockSpec spec_;
    SpatialGraphConv spatial_;
    BatchNorm bn1_;
    BatchNorm bn2_;
    Parameter* temporal_;
};

// ------------------------------------------------------------------ pooling

/// The 5 small parts followed by the whole body.
const std::vector<std::vector<int>>& embedding_parts();
inline constexpr int kPartsPerBranch = 6;

/// mean + max over each part's joints, per frame and channel. The result uses
/// the joints axis for parts. `argmax` receives the max joint per
/// (n, t, part, channel) when given.
FeatureTensor part_pool(const FeatureTensor& f, const std::vector<std::vector<int>>& parts,
                        std::vector<int>* argmax = nullptr);

/// Max over frames. Returns (N * P) x C, row n * P + p. `argmax` receives the
/// max frame per (n, p, c) when given.
RowMatrix temporal_pool(const FeatureTensor& pooled, std::vector<int>* argmax = nullptr);

// -------------------------------------------------------------------- heads

struct HeadCache {
    RowMatrix input;
    BatchNormCache bn;
    RowMatrix neck;  // BNNeck output, classifier input
};

/// Independent FC (metric feature) + BNNeck + classifier for one part slot.
class PartHead {
public:
    PartHead(ParameterStore& store, const std::string& prefix, int in_channels, int embed_dim, int classes,
             const BlockOptions& options, Rng& rng);

    /// `logits` may be null (retrieval only) and is ignored when the head has
    /// no classifier.
    RowMatrix forward(const RowMatrix& x, Mode mode, RowMatrix* logits, HeadCache* cache) const;
    RowMatrix backward(const RowMatrix& dmetric, const RowMatrix* dlogits, const HeadCache& cache) const;

    Parameter& fc() const { return *fc_; }
    Parameter* classifier() const { return classifier_; }
    const BatchNorm& neck() const { return neck_; }

private:
    Parameter* fc_;
    BatchNorm neck_;
    Parameter* classifier_ = nullptr;
};

// ------------------------------------------------------------------ network

enum class DescriptorKind { Joint, Angle, Bone };
std::string_view to_string(DescriptorKind kind);
DescriptorKind parse_descriptor_kind(std::string_view s);
int descriptor_channels(DescriptorKind kind);

struct NetworkConfig {
    std::vector<DescriptorKind> descriptors{DescriptorKind::Joint, DescriptorKind::Angle, DescriptorKind::Bone};
    bool single_branch = false;  // fuse all descriptors into one branch
    std::vector<int> parts5_channels{64, 64, 128};
    std::vector<std::string> larger_schemes{"upper_lower", "three_groups", "left_right", "global"};
    int larger_channels = 128;
    int embed_dim = 128;
    int num_classes = 0;  // 0: no classifiers
    int temporal_kernel = 3;
    bool attention = true;
    bool partition = true;  // false: every block uses the global mask
    double bn_momentum = 0.9;
    double bn_eps = 1e-5;
    std::vector<PartitionScheme> custom_schemes;  // override named schemes

    void validate() const;
    int branch_count() const { return single_branch ? 1 : static_cast<int>(descriptors.size()); }
    int slot_count() const { return branch_count() * kPartsPerBranch; }
    int final_channels() const;
    PartitionScheme scheme(const std::string& name) const;
};

/// Branch inputs, one FeatureTensor per branch in descriptor order.
struct NetworkInput {
    int batch = 0;
    int frames = 0;
    std::vector<FeatureTensor> branches;
};

/// All sets must share the same frame count.
NetworkInput make_network_input(const std::vector<const DescriptorSet*>& batch, const NetworkConfig& config);

/// Per-slot outputs. Slot s = branch * 6 + part; branches follow
/// NetworkConfig::descriptors (joint, angle, bone by default) and parts follow
/// embedding_parts(): head, left arm, right arm, left leg, right leg, body.
struct EmbeddingBatch {
    std::vector<RowMatrix> metric;  // N x embed_dim per slot
    std::vector<RowMatrix> logits;  // N x classes per slot (train only)

    int batch() const { return metric.empty() ? 0 : static_cast<int>(metric.front().rows()); }
    /// Concatenated metric features of one sequence (the retrieval vector).
    Eigen::VectorXd concatenated(int n) const;
};

struct NetworkTape {
    std::vector<std::vector<BlockCache>> blocks;  // per branch
    std::vector<FeatureTensor> branch_outputs;
    std::vector<std::vector<int>> joint_argmax;  // per branch
    std::vector<std::vector<int>> frame_argmax;  // per branch
    std::vector<HeadCache> heads;
};

class Network {
public:
    Network(NetworkConfig config, std::uint64_t seed);
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    const NetworkConfig& config() const { return config_; }
    int slot_count() const { return config_.slot_count(); }
    std::string branch_name(int b) const;

    /// `final_features` receives each branch's last block output (the
    /// per-keypoint features before pooling) when given.
    EmbeddingBatch forward(const NetworkInput& input, Mode mode, NetworkTape* tape = nullptr,
                           std::vector<FeatureTensor>* final_features = nullptr) const;

    /// Accumulates parameter gradients. `dlogits` may be empty.
    void backward(const std::vector<RowMatrix>& dmetric, const std::vector<RowMatrix>& dlogits,
                  const NetworkTape& tape);

    /// Output of one branch's block stack.
    FeatureTensor branch_forward(int branch, const FeatureTensor& x, Mode mode,
                                 std::vector<BlockCache>* caches = nullptr) const;

    ParameterStore& params() { return store_; }
    const ParameterStore& params() const { return store_; }
    const std::vector<PagcnBlock>& blocks(int branch) const { return branches_[branch]; }
    const PartHead& head(int slot) const { return heads_[slot]; }

    /// Copies every tensor with a matching name and shape; throws ShapeError on
    /// a shape mismatch.
    void copy_parameters_from(const Network& other);

private:
    NetworkConfig config_;
    ParameterStore store_;
    std::vector<std::vector<PagcnBlock>> branches_;
    std::vector<PartHead> heads_;
};

/// Block plan of one branch: parts5 blocks then the larger-stage chain.
std::vector<BlockSpec> branch_plan(const NetworkConfig& config, int in_channels);

}  // namespace gpgait
