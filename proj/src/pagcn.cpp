// SPDX-License-Identifier: Apache-2.0
#include "gpgait/pagcn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace gpgait {

namespace {

JointMatrix masked_softmax(const JointMatrix& scores, const JointMatrix* mask) {
    JointMatrix out = JointMatrix::Zero();
    for (int v = 0; v < kNumJoints; ++v) {
        double hi = -std::numeric_limits<double>::infinity();
        for (int w = 0; w < kNumJoints; ++w) {
            if (!mask || (*mask)(v, w) != 0.0) hi = std::max(hi, scores(v, w));
        }
        double sum = 0.0;
        for (int w = 0; w < kNumJoints; ++w) {
            if (!mask || (*mask)(v, w) != 0.0) {
                out(v, w) = std::exp(scores(v, w) - hi);
                sum += out(v, w);
            }
        }
        out.row(v) /= sum;
    }
    return out;
}

JointMatrix sequence_attention(const RowMatrix& pooled_n, const RowMatrix& wq, const RowMatrix& wk,
                               const JointMatrix* mask) {
    const RowMatrix q = pooled_n * wq;
    const RowMatrix k = pooled_n * wk;
    const JointMatrix scores = (q * k.transpose()) / std::sqrt(static_cast<double>(wq.cols()));
    return masked_softmax(scores, mask);
}

RowMatrix temporal_mean(const FeatureTensor& x) {
    RowMatrix pooled = RowMatrix::Zero(static_cast<Eigen::Index>(x.batch) * x.joints, x.channels);
    for (int n = 0; n < x.batch; ++n) {
        auto block = pooled.middleRows(n * x.joints, x.joints);
        for (int t = 0; t < x.frames; ++t) block += x.frame(n, t);
        block /= static_cast<double>(x.frames);
    }
    return pooled;
}

RowMatrix relu(const RowMatrix& x) { return x.cwiseMax(0.0); }

RowMatrix relu_backward(const RowMatrix& dy, const RowMatrix& out) {
    return (out.array() > 0.0).select(dy, 0.0);
}

}  // namespace

// ---------------------------------------------------------------- batch norm

BatchNorm::BatchNorm(ParameterStore& store, const std::string& prefix, int channels, double momentum, double eps)
    : momentum_(momentum), eps_(eps) {
    gamma_ = &store.add(prefix + ".gamma", 1, channels);
    gamma_->value.setOnes();
    beta_ = &store.add(prefix + ".beta", 1, channels);
    mean_ = &store.add(prefix + ".running_mean", 1, channels, false);
    var_ = &store.add(prefix + ".running_var", 1, channels, false);
    var_->value.setOnes();
}

RowMatrix BatchNorm::forward(const RowMatrix& x, Mode mode, BatchNormCache* cache) const {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd inv_std;
    if (mode == Mode::Train) {
        mean = x.colwise().mean();
        const Eigen::RowVectorXd var = (x.rowwise() - mean).array().square().colwise().mean();
        inv_std = (var.array() + eps_).rsqrt();
        mean_->value = momentum_ * mean_->value + (1.0 - momentum_) * mean;
        var_->value = momentum_ * var_->value + (1.0 - momentum_) * var;
    } else {
        mean = mean_->value;
        inv_std = (var_->value.array() + eps_).rsqrt();
    }
    RowMatrix xhat = (x.rowwise() - mean).array().rowwise() * inv_std.array();
    RowMatrix y = (xhat.array().rowwise() * gamma_->value.row(0).array()).rowwise() + beta_->value.row(0).array();
    if (cache) {
        cache->mode = mode;
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return y;
}

RowMatrix BatchNorm::backward(const RowMatrix& dy, const BatchNormCache& cache) const {
    gamma_->grad += dy.cwiseProduct(cache.xhat).colwise().sum();
    beta_->grad += dy.colwise().sum();
    const RowMatrix dxhat = dy.array().rowwise() * gamma_->value.row(0).array();
    if (cache.mode == Mode::Eval) return dxhat.array().rowwise() * cache.inv_std.array();
    const double n = static_cast<double>(dy.rows());
    const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum_dx = dxhat.cwiseProduct(cache.xhat).colwise().sum();
    RowMatrix dx = (n * dxhat).rowwise() - sum_d;
    dx.array() -= cache.xhat.array().rowwise() * sum_dx.array();
    return dx.array().rowwise() * (cache.inv_std.array() / n);
}

// ------------------------------------------------------------- graph pieces

std::vector<JointMatrix> attention_adjacency(const FeatureTensor& x, const RowMatrix& wq, const RowMatrix& wk,
                                             const JointMatrix* mask) {
    if (wq.rows() != x.channels || wk.rows() != x.channels || wq.cols() != wk.cols()) {
        throw ShapeError("attention projections do not match input channels");
    }
    const RowMatrix pooled = temporal_mean(x);
    std::vector<JointMatrix> out;
    out.reserve(x.batch);
    for (int n = 0; n < x.batch; ++n) {
        out.push_back(sequence_attention(pooled.middleRows(n * x.joints, x.joints), wq, wk, mask));
    }
    return out;
}

SpatialGraphConv::SpatialGraphConv(ParameterStore& store, const std::string& prefix, int in_channels,
                                   int out_channels, std::vector<JointMatrix> subsets, const JointMatrix& mask,
                                   bool attention, Rng& rng)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      embed_channels_(std::max(in_channels / 4, 4)),
      attention_(attention),
      subsets_(std::move(subsets)),
      mask_(mask) {
    for (std::size_t k = 0; k < subsets_.size(); ++k) {
        const std::string s = std::to_string(k);
        auto& w = store.add(prefix + ".weight" + s, in_channels, out_channels);
        fill_uniform(w.value, 1.0 / std::sqrt(static_cast<double>(in_channels)), rng);
        weights_.push_back(&w);
        learned_.push_back(&store.add(prefix + ".learned_adj" + s, kNumJoints, kNumJoints));
        if (attention_) {
            auto& q = store.add(prefix + ".query" + s, in_channels, embed_channels_);
            auto& kk = store.add(prefix + ".key" + s, in_channels, embed_channels_);
            fill_uniform(q.value, 1.0 / std::sqrt(static_cast<double>(in_channels)), rng);
            fill_uniform(kk.value, 1.0 / std::sqrt(static_cast<double>(in_channels)), rng);
            queries_.push_back(&q);
            keys_.push_back(&kk);
        }
    }
}

JointMatrix SpatialGraphConv::combined_adjacency(int k, const JointMatrix* attention) const {
    JointMatrix adj = subsets_[k] + learned_[k]->value;
    if (attention) adj += *attention;
    return adj.cwiseProduct(mask_);
}

void SpatialGraphConv::aggregate(const FeatureTensor& x, int n, const JointMatrix& adj, RowMatrix& out) const {
    const JointMatrix adj_t = adj.transpose();
    for (int t = 0; t < x.frames; ++t) out.middleRows(x.row(n, t), x.joints).noalias() = adj_t * x.frame(n, t);
}

FeatureTensor SpatialGraphConv::forward(const FeatureTensor& x, SpatialCache* cache) const {
    if (x.channels != in_channels_) {
        throw ShapeError("spatial conv expects " + std::to_string(in_channels_) + " channels, got " +
                         std::to_string(x.channels));
    }
    const int k_count = subset_count();
    RowMatrix pooled;
    std::vector<JointMatrix> attention;
    if (attention_) {
        pooled = temporal_mean(x);
        attention.reserve(static_cast<std::size_t>(x.batch) * k_count);
        for (int n = 0; n < x.batch; ++n) {
            for (int k = 0; k < k_count; ++k) {
                attention.push_back(sequence_attention(pooled.middleRows(n * x.joints, x.joints), queries_[k]->value,
                                                       keys_[k]->value, &mask_));
            }
        }
    }
    FeatureTensor out = FeatureTensor::zeros(x.batch, x.frames, out_channels_, x.joints);
    RowMatrix z(x.values.rows(), in_channels_);
    for (int k = 0; k < k_count; ++k) {
        for (int n = 0; n < x.batch; ++n) {
            const JointMatrix adj = combined_adjacency(k, attention_ ? &attention[n * k_count + k] : nullptr);
            aggregate(x, n, adj, z);
        }
        out.values.noalias() += z * weights_[k]->value;
    }
    if (cache) {
        cache->input = x;
        cache->pooled = std::move(pooled);
        cache->attention = std::move(attention);
    }
    return out;
}

FeatureTensor SpatialGraphConv::backward(const FeatureTensor& dy, const SpatialCache& cache) const {
    const FeatureTensor& x = cache.input;
    const int k_count = subset_count();
    const int v_count = x.joints;
    FeatureTensor dx = FeatureTensor::zeros(x.batch, x.frames, in_channels_, v_count);
    RowMatrix z(x.values.rows(), in_channels_);
    const double scale = 1.0 / std::sqrt(static_cast<double>(embed_channels_));
    for (int k = 0; k < k_count; ++k) {
        std::vector<JointMatrix> adjs;
        for (int n = 0; n < x.batch; ++n) {
            adjs.push_back(combined_adjacency(k, attention_ ? &cache.attention[n * k_count + k] : nullptr));
            aggregate(x, n, adjs.back(), z);
        }
        weights_[k]->grad.noalias() += z.transpose() * dy.values;
        const RowMatrix dz = dy.values * weights_[k]->value.transpose();
        for (int n = 0; n < x.batch; ++n) {
            JointMatrix dadj = JointMatrix::Zero();
            for (int t = 0; t < x.frames; ++t) {
                const int r = x.row(n, t);
                dx.values.middleRows(r, v_count).noalias() += adjs[n] * dz.middleRows(r, v_count);
                dadj.noalias() += x.frame(n, t) * dz.middleRows(r, v_count).transpose();
            }
            dadj = dadj.cwiseProduct(mask_);
            learned_[k]->grad += dadj;
            if (!attention_) continue;
            const JointMatrix& att = cache.attention[n * k_count + k];
            JointMatrix ds;
            for (int v = 0; v < v_count; ++v) {
                const double dot = att.row(v).dot(dadj.row(v));
                ds.row(v) = att.row(v).array() * (dadj.row(v).array() - dot);
            }
            const auto pooled_n = cache.pooled.middleRows(n * v_count, v_count);
            const RowMatrix q = pooled_n * queries_[k]->value;
            const RowMatrix kk = pooled_n * keys_[k]->value;
            const RowMatrix dq = scale * (ds * kk);
            const RowMatrix dk = scale * (ds.transpose() * q);
            queries_[k]->grad.noalias() += pooled_n.transpose() * dq;
            keys_[k]->grad.noalias() += pooled_n.transpose() * dk;
            const RowMatrix dpooled =
                (dq * queries_[k]->value.transpose() + dk * keys_[k]->value.transpose()) / static_cast<double>(x.frames);
            for (int t = 0; t < x.frames; ++t) dx.frame(n, t) += dpooled;
        }
    }
    return dx;
}

FeatureTensor temporal_conv(const FeatureTensor& x, const RowMatrix& w) {
    if (w.cols() != x.channels || w.rows() % 2 == 0) throw ShapeError("temporal kernel shape mismatch");
    const int half = static_cast<int>(w.rows()) / 2;
    FeatureTensor y = FeatureTensor::zeros(x.batch, x.frames, x.channels, x.joints);
    for (int n = 0; n < x.batch; ++n) {
        for (int j = 0; j < w.rows(); ++j) {
            const int offset = j - half;
            const int t0 = std::max(0, -offset);
            const int t1 = std::min(x.frames, x.frames - offset);
            if (t1 <= t0) continue;
            const Eigen::Index rows = static_cast<Eigen::Index>(t1 - t0) * x.joints;
            y.values.middleRows(y.row(n, t0), rows).array() +=
                x.values.middleRows(x.row(n, t0 + offset), rows).array().rowwise() * w.row(j).array();
        }
    }
    return y;
}

void temporal_conv_backward(const FeatureTensor& x, const RowMatrix& w, const FeatureTensor& dy, FeatureTensor& dx,
                            RowMatrix& dw) {
    const int half = static_cast<int>(w.rows()) / 2;
    dx = FeatureTensor::zeros(x.batch, x.frames, x.channels, x.joints);
    dw = RowMatrix::Zero(w.rows(), w.cols());
    for (int n = 0; n < x.batch; ++n) {
        for (int j = 0; j < w.rows(); ++j) {
            const int offset = j - half;
            const int t0 = std::max(0, -offset);
            const int t1 = std::min(x.frames, x.frames - offset);
            if (t1 <= t0) continue;
            const Eigen::Index rows = static_cast<Eigen::Index>(t1 - t0) * x.joints;
            const auto g = dy.values.middleRows(dy.row(n, t0), rows);
            const auto src = x.values.middleRows(x.row(n, t0 + offset), rows);
            dx.values.middleRows(x.row(n, t0 + offset), rows).array() += g.array().rowwise() * w.row(j).array();
            dw.row(j) += g.cwiseProduct(src).colwise().sum();
        }
    }
}

// ------------------------------------------------------------------- blocks

PagcnBlock::PagcnBlock(ParameterStore& store, const std::string& prefix, const BlockSpec& spec,
                       const AdjacencySubsets& subsets, const JointMatrix& mask, const BlockOptions& options, Rng& rng)
    : spec_(spec),
      spatial_(store, prefix + ".spatial", spec.in_channels, spec.out_channels, subsets.normalized, mask,
               options.attention, rng),
      bn1_(store, prefix + ".bn1", spec.out_channels, options.bn_momentum, options.bn_eps),
      bn2_(store, prefix + ".bn2", spec.out_channels, options.bn_momentum, options.bn_eps) {
    if (options.temporal_kernel < 1 || options.temporal_kernel % 2 == 0) {
        throw ConfigError("net.temporal_kernel must be a positive odd number");
    }
    temporal_ = &store.add(prefix + ".temporal", options.temporal_kernel, spec.out_channels);
    fill_uniform(temporal_->value, 1.0 / std::sqrt(static_cast<double>(options.temporal_kernel)), rng);
}

FeatureTensor PagcnBlock::forward(const FeatureTensor& x, Mode mode, BlockCache* cache) const {
    FeatureTensor s = spatial_.forward(x, cache ? &cache->spatial : nullptr);
    FeatureTensor act1 = s;
    act1.values = relu(bn1_.forward(s.values, mode, cache ? &cache->bn1 : nullptr));
    FeatureTensor tc = temporal_conv(act1, temporal_->value);
    FeatureTensor out = tc;
    out.values = relu(bn2_.forward(tc.values, mode, cache ? &cache->bn2 : nullptr));
    if (cache) {
        cache->act1 = std::move(act1);
        cache->act2 = out.values;
    }
    if (residual()) out.values += x.values;
    return out;
}

FeatureTensor PagcnBlock::backward(const FeatureTensor& dy, const BlockCache& cache) const {
    FeatureTensor dtc = dy;
    dtc.values = bn2_.backward(relu_backward(dy.values, cache.act2), cache.bn2);
    FeatureTensor dact1;
    RowMatrix dw;
    temporal_conv_backward(cache.act1, temporal_->value, dtc, dact1, dw);
    temporal_->grad += dw;
    FeatureTensor ds = dact1;
    ds.values = bn1_.backward(relu_backward(dact1.values, cache.act1.values), cache.bn1);
    FeatureTensor dx = spatial_.backward(ds, cache.spatial);
    if (residual()) dx.values += dy.values;
    return dx;
}

// ------------------------------------------------------------------ pooling

const std::vector<std::vector<int>>& embedding_parts() {
    static const std::vector<std::vector<int>> parts = [] {
        auto groups = scheme_parts5().groups;
        groups.push_back(scheme_global().groups.front());
        return groups;
    }();
    return parts;
}

FeatureTensor part_pool(const FeatureTensor& f, const std::vector<std::vector<int>>& parts, std::vector<int>* argmax) {
    const int p_count = static_cast<int>(parts.size());
    for (const auto& part : parts) {
        if (part.empty()) throw ShapeError("empty pooling group");
    }
    FeatureTensor out = FeatureTensor::zeros(f.batch, f.frames, f.channels, p_count);
    if (argmax) argmax->assign(static_cast<std::size_t>(out.values.size()), 0);
    for (int n = 0; n < f.batch; ++n) {
        for (int t = 0; t < f.frames; ++t) {
            for (int p = 0; p < p_count; ++p) {
                const auto& part = parts[p];
                const int r = out.row(n, t, p);
                for (int c = 0; c < f.channels; ++c) {
                    double sum = 0.0;
                    double best = -std::numeric_limits<double>::infinity();
                    int best_v = part.front();
                    for (int v : part) {
                        const double val = f.at(n, t, v, c);
                        sum += val;
                        if (val > best) {
                            best = val;
                            best_v = v;
                        }
                    }
                    out.values(r, c) = sum / static_cast<double>(part.size()) + best;
                    if (argmax) (*argmax)[static_cast<std::size_t>(r) * f.channels + c] = best_v;
                }
            }
        }
    }
    return out;
}

RowMatrix temporal_pool(const FeatureTensor& pooled, std::vector<int>* argmax) {
    if (pooled.frames < 1) throw ShapeError("temporal pooling needs at least one frame");
    const int p_count = pooled.joints;
    RowMatrix out(static_cast<Eigen::Index>(pooled.batch) * p_count, pooled.channels);
    if (argmax) argmax->assign(static_cast<std::size_t>(out.size()), 0);
    for (int n = 0; n < pooled.batch; ++n) {
        for (int p = 0; p < p_count; ++p) {
            const int r = n * p_count + p;
            for (int c = 0; c < pooled.channels; ++c) {
                double best = pooled.at(n, 0, p, c);
                int best_t = 0;
                for (int t = 1; t < pooled.frames; ++t) {
                    const double val = pooled.at(n, t, p, c);
                    if (val > best) {
                        best = val;
                        best_t = t;
                    }
                }
                out(r, c) = best;
                if (argmax) (*argmax)[static_cast<std::size_t>(r) * pooled.channels + c] = best_t;
            }
        }
    }
    return out;
}

// -------------------------------------------------------------------- heads

PartHead::PartHead(ParameterStore& store, const std::string& prefix, int in_channels, int embed_dim, int classes,
                   const BlockOptions& options, Rng& rng)
    : fc_(&store.add(prefix + ".fc", in_channels, embed_dim)),
      neck_(store, prefix + ".bnneck", embed_dim, options.bn_momentum, options.bn_eps) {
    fill_uniform(fc_->value, 1.0 / std::sqrt(static_cast<double>(in_channels)), rng);
    if (classes > 0) {
        classifier_ = &store.add(prefix + ".classifier", embed_dim, classes);
        fill_uniform(classifier_->value, 1.0 / std::sqrt(static_cast<double>(embed_dim)), rng);
    }
}

RowMatrix PartHead::forward(const RowMatrix& x, Mode mode, RowMatrix* logits, HeadCache* cache) const {
    if (x.cols() != fc_->value.rows()) throw ShapeError("part head input width mismatch for " + fc_->name);
    RowMatrix metric = x * fc_->value;
    if (logits && classifier_) {
        RowMatrix neck = neck_.forward(metric, mode, cache ? &cache->bn : nullptr);
        *logits = neck * classifier_->value;
        if (cache) cache->neck = std::move(neck);
    }
    if (cache) cache->input = x;
    return metric;
}

RowMatrix PartHead::backward(const RowMatrix& dmetric, const RowMatrix* dlogits, const HeadCache& cache) const {
    RowMatrix dm = dmetric;
    if (dlogits && classifier_ && cache.neck.size() > 0) {
        classifier_->grad.noalias() += cache.neck.transpose() * (*dlogits);
        const RowMatrix dneck = (*dlogits) * classifier_->value.transpose();
        dm += neck_.backward(dneck, cache.bn);
    }
    fc_->grad.noalias() += cache.input.transpose() * dm;
    return dm * fc_->value.transpose();
}

// ------------------------------------------------------------------ network

std::string_view to_string(DescriptorKind kind) {
    switch (kind) {
        case DescriptorKind::Joint: return "joint";
        case DescriptorKind::Angle: return "angle";
        case DescriptorKind::Bone: return "bone";
    }
    return "?";
}

DescriptorKind parse_descriptor_kind(std::string_view s) {
    if (s == "joint") return DescriptorKind::Joint;
    if (s == "angle") return DescriptorKind::Angle;
    if (s == "bone") return DescriptorKind::Bone;
    throw ConfigError("unknown descriptor '" + std::string(s) + "'");
}

int descriptor_channels(DescriptorKind kind) { return kind == DescriptorKind::Angle ? 1 : 2; }

void NetworkConfig::validate() const {
    if (descriptors.empty()) throw ConfigError("net.descriptors must name at least one descriptor");
    if (parts5_channels.empty()) throw ConfigError("net.parts5_channels must not be empty");
    for (int c : parts5_channels) {
        if (c <= 0) throw ConfigError("net.parts5_channels entries must be positive");
    }
    if (!larger_schemes.empty() && larger_channels <= 0) throw ConfigError("net.larger_channels must be positive");
    if (embed_dim <= 0) throw ConfigError("net.embed_dim must be positive");
    if (num_classes < 0) throw ConfigError("net.num_classes must be >= 0");
    if (temporal_kernel < 1 || temporal_kernel % 2 == 0) throw ConfigError("net.temporal_kernel must be odd");
    for (const auto& s : larger_schemes) scheme(s);
    std::set<DescriptorKind> seen(descriptors.begin(), descriptors.end());
    if (seen.size() != descriptors.size()) throw ConfigError("net.descriptors lists a descriptor twice");
}

int NetworkConfig::final_channels() const {
    return larger_schemes.empty() ? parts5_channels.back() : larger_channels;
}

PartitionScheme NetworkConfig::scheme(const std::string& name) const {
    for (const auto& s : custom_schemes) {
        if (s.name == name) return s;
    }
    return scheme_by_name(name);
}

std::vector<BlockSpec> branch_plan(const NetworkConfig& config, int in_channels) {
    std::vector<BlockSpec> plan;
    int c = in_channels;
    for (int width : config.parts5_channels) {
        plan.push_back({"parts5", c, width});
        c = width;
    }
    for (const auto& name : config.larger_schemes) {
        plan.push_back({name, c, config.larger_channels});
        c = config.larger_channels;
    }
    return plan;
}

NetworkInput make_network_input(const std::vector<const DescriptorSet*>& batch, const NetworkConfig& config) {
    NetworkInput input;
    input.batch = static_cast<int>(batch.size());
    if (batch.empty()) throw ShapeError("empty batch");
    input.frames = static_cast<int>(batch.front()->frames);
    for (const auto* d : batch) {
        if (static_cast<int>(d->frames) != input.frames) throw ShapeError("batch sequences differ in length");
    }
    std::vector<std::vector<DescriptorKind>> groups;
    if (config.single_branch) {
        groups.push_back(config.descriptors);
    } else {
        for (auto k : config.descriptors) groups.push_back({k});
    }
    for (const auto& group : groups) {
        int channels = 0;
        for (auto k : group) channels += descriptor_channels(k);
        FeatureTensor x = FeatureTensor::zeros(input.batch, input.frames, channels);
        for (int n = 0; n < input.batch; ++n) {
            const DescriptorSet& d = *batch[n];
            for (int t = 0; t < input.frames; ++t) {
                for (int v = 0; v < kNumJoints; ++v) {
                    const std::size_t jv = static_cast<std::size_t>(t) * kNumJoints + v;
                    int c = 0;
                    for (auto k : group) {
                        switch (k) {
                            case DescriptorKind::Joint:
                                x.at(n, t, v, c++) = d.joint[jv * 2];
                                x.at(n, t, v, c++) = d.joint[jv * 2 + 1];
                                break;
                            case DescriptorKind::Bone:
                                x.at(n, t, v, c++) = d.bone[jv * 2];
                                x.at(n, t, v, c++) = d.bone[jv * 2 + 1];
                                break;
                            case DescriptorKind::Angle: x.at(n, t, v, c++) = d.angle[jv]; break;
                        }
                    }
                }
            }
        }
        input.branches.push_back(std::move(x));
    }
    return input;
}

Eigen::VectorXd EmbeddingBatch::concatenated(int n) const {
    Eigen::Index total = 0;
    for (const auto& m : metric) total += m.cols();
    Eigen::VectorXd out(total);
    Eigen::Index offset = 0;
    for (const auto& m : metric) {
        out.segment(offset, m.cols()) = m.row(n).transpose();
        offset += m.cols();
    }
    return out;
}

Network::Network(NetworkConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    Rng rng(seed);
    const AdjacencySubsets subsets = build_adjacency_subsets(SkeletonTopology::coco17());
    const JointMatrix ones = JointMatrix::Ones();
    const BlockOptions options{config_.temporal_kernel, config_.attention, config_.bn_momentum, config_.bn_eps};
    for (int b = 0; b < config_.branch_count(); ++b) {
        int in_channels = 0;
        if (config_.single_branch) {
            for (auto k : config_.descriptors) in_channels += descriptor_channels(k);
        } else {
            in_channels = descriptor_channels(config_.descriptors[b]);
        }
        std::vector<PagcnBlock> blocks;
        const auto plan = branch_plan(config_, in_channels);
        for (std::size_t i = 0; i < plan.size(); ++i) {
            const JointMatrix mask = config_.partition ? build_partition_mask(config_.scheme(plan[i].scheme)) : ones;
            blocks.emplace_back(store_, branch_name(b) + ".block" + std::to_string(i), plan[i], subsets, mask, options,
                                rng);
        }
        branches_.push_back(std::move(blocks));
    }
    for (int s = 0; s < slot_count(); ++s) {
        heads_.emplace_back(store_, "head" + std::to_string(s), config_.final_channels(), config_.embed_dim,
                            config_.num_classes, options, rng);
    }
    std::set<const Parameter*> distinct;
    for (const auto& h : heads_) {
        if (!distinct.insert(&h.fc()).second) throw ShapeError("part heads share parameters");
    }
}

std::string Network::branch_name(int b) const {
    return config_.single_branch ? std::string("fused") : std::string(to_string(config_.descriptors[b]));
}

FeatureTensor Network::branch_forward(int branch, const FeatureTensor& x, Mode mode,
                                      std::vector<BlockCache>* caches) const {
    const auto& blocks = branches_[branch];
    if (caches) caches->assign(blocks.size(), BlockCache{});
    FeatureTensor f = x;
    for (std::size_t i = 0; i < blocks.size(); ++i) f = blocks[i].forward(f, mode, caches ? &(*caches)[i] : nullptr);
    return f;
}

EmbeddingBatch Network::forward(const NetworkInput& input, Mode mode, NetworkTape* tape,
                                std::vector<FeatureTensor>* final_features) const {
    const int b_count = config_.branch_count();
    if (static_cast<int>(input.branches.size()) != b_count) throw ShapeError("network input has wrong branch count");
    const bool want_logits = mode == Mode::Train && config_.num_classes > 0;
    EmbeddingBatch out;
    out.metric.resize(slot_count());
    if (want_logits) out.logits.resize(slot_count());
    if (tape) {
        tape->blocks.assign(b_count, {});
        tape->branch_outputs.assign(b_count, {});
        tape->joint_argmax.assign(b_count, {});
        tape->frame_argmax.assign(b_count, {});
        tape->heads.assign(slot_count(), {});
    }
    if (final_features) final_features->clear();
    const auto& parts = embedding_parts();
    for (int b = 0; b < b_count; ++b) {
        FeatureTensor f = branch_forward(b, input.branches[b], mode, tape ? &tape->blocks[b] : nullptr);
        const FeatureTensor pooled = part_pool(f, parts, tape ? &tape->joint_argmax[b] : nullptr);
        const RowMatrix g = temporal_pool(pooled, tape ? &tape->frame_argmax[b] : nullptr);
        for (int p = 0; p < kPartsPerBranch; ++p) {
            RowMatrix x(input.batch, g.cols());
            for (int n = 0; n < input.batch; ++n) x.row(n) = g.row(n * kPartsPerBranch + p);
            const int slot = b * kPartsPerBranch + p;
            out.metric[slot] = heads_[slot].forward(x, mode, want_logits ? &out.logits[slot] : nullptr,
                                                    tape ? &tape->heads[slot] : nullptr);
        }
        if (final_features) final_features->push_back(f);
        if (tape) tape->branch_outputs[b] = std::move(f);
    }
    return out;
}

void Network::backward(const std::vector<RowMatrix>& dmetric, const std::vector<RowMatrix>& dlogits,
                       const NetworkTape& tape) {
    const auto& parts = embedding_parts();
    for (int b = 0; b < config_.branch_count(); ++b) {
        const FeatureTensor& f = tape.branch_outputs[b];
        const int channels = f.channels;
        RowMatrix dg = RowMatrix::Zero(static_cast<Eigen::Index>(f.batch) * kPartsPerBranch, channels);
        for (int p = 0; p < kPartsPerBranch; ++p) {
            const int slot = b * kPartsPerBranch + p;
            const RowMatrix dx = heads_[slot].backward(dmetric[slot], dlogits.empty() ? nullptr : &dlogits[slot],
                                                       tape.heads[slot]);
            for (int n = 0; n < f.batch; ++n) dg.row(n * kPartsPerBranch + p) += dx.row(n);
        }
        FeatureTensor dpooled = FeatureTensor::zeros(f.batch, f.frames, channels, kPartsPerBranch);
        const auto& frame_arg = tape.frame_argmax[b];
        for (Eigen::Index r = 0; r < dg.rows(); ++r) {
            const int n = static_cast<int>(r) / kPartsPerBranch;
            const int p = static_cast<int>(r) % kPartsPerBranch;
            for (int c = 0; c < channels; ++c) {
                const int t = frame_arg[static_cast<std::size_t>(r) * channels + c];
                dpooled.at(n, t, p, c) += dg(r, c);
            }
        }
        FeatureTensor df = FeatureTensor::zeros(f.batch, f.frames, channels, f.joints);
        const auto& joint_arg = tape.joint_argmax[b];
        for (int n = 0; n < f.batch; ++n) {
            for (int t = 0; t < f.frames; ++t) {
                for (int p = 0; p < kPartsPerBranch; ++p) {
                    const int r = dpooled.row(n, t, p);
                    const double inv = 1.0 / static_cast<double>(parts[p].size());
                    for (int c = 0; c < channels; ++c) {
                        const double d = dpooled.values(r, c);
                        if (d == 0.0) continue;
                        for (int v : parts[p]) df.at(n, t, v, c) += d * inv;
                        df.at(n, t, joint_arg[static_cast<std::size_t>(r) * channels + c], c) += d;
                    }
                }
            }
        }
        const auto& blocks = branches_[b];
        for (std::size_t i = blocks.size(); i-- > 0;) df = blocks[i].backward(df, tape.blocks[b][i]);
    }
}

void Network::copy_parameters_from(const Network& other) {
    for (const auto& p : other.params().all()) {
        if (!store_.contains(p.name)) continue;
        auto& mine = store_.get(p.name);
        if (mine.value.rows() != p.value.rows() || mine.value.cols() != p.value.cols()) {
            throw ShapeError("tensor " + p.name + " has a different shape");
        }
        mine.value = p.value;
    }
}

}  // namespace gpgait
