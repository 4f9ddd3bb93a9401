// SPDX-License-Identifier: Apache-2.0
#include "gpgait/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace gpgait {

void TrainConfig::validate() const {
    if (subjects_per_batch < 2) throw ConfigError("train.subjects_per_batch must be >= 2");
    if (samples_per_subject < 2) throw ConfigError("train.samples_per_subject must be >= 2");
    if (seq_len < 1) throw ConfigError("train.seq_len must be >= 1");
    if (margin < 0.0) throw ConfigError("train.margin must be >= 0");
    if (gamma < 0.0) throw ConfigError("train.gamma must be >= 0");
    if (iterations < 1) throw ConfigError("train.iterations must be >= 1");
    if (!(lr_init > 0.0 && lr_max > 0.0 && lr_final >= 0.0)) throw ConfigError("learning rates must be positive");
    if (phase1 < 0.0 || phase2 < 0.0 || phase1 + phase2 > 1.0) throw ConfigError("train.phase1/phase2 out of range");
    for (double p : {flip_prob, noise_prob}) {
        if (p < 0.0 || p > 1.0) throw ConfigError("augmentation probabilities must be in [0, 1]");
    }
    if (noise_sigma < 0.0) throw ConfigError("train.noise_sigma must be >= 0");
    if (log_every < 1 || checkpoint_every < 1) throw ConfigError("log/checkpoint intervals must be >= 1");
}

// ------------------------------------------------------------------ sampling

TrainSet make_train_set(std::vector<UnifiedPoseSequence> sequences) {
    TrainSet set;
    std::map<std::string, int> ids;
    for (const auto& s : sequences) {
        auto [it, inserted] = ids.emplace(s.subject, static_cast<int>(set.subjects.size()));
        if (inserted) set.subjects.push_back(s.subject);
        set.labels.push_back(it->second);
    }
    set.sequences = std::move(sequences);
    return set;
}

Batch sample_batch(const TrainSet& set, int subjects, int per_subject, int frames, Rng& rng) {
    if (set.num_classes() < subjects) {
        throw DataError("training set has " + std::to_string(set.num_classes()) + " subjects, batch needs " +
                        std::to_string(subjects));
    }
    std::vector<std::vector<std::size_t>> by_label(set.num_classes());
    for (std::size_t i = 0; i < set.labels.size(); ++i) by_label[set.labels[i]].push_back(i);

    std::vector<int> order(set.num_classes());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    Batch batch;
    for (int p = 0; p < subjects; ++p) {
        const int label = order[p];
        std::vector<std::size_t> pool = by_label[label];
        std::vector<std::size_t> chosen;
        if (static_cast<int>(pool.size()) >= per_subject) {
            std::shuffle(pool.begin(), pool.end(), rng);
            chosen.assign(pool.begin(), pool.begin() + per_subject);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            for (int k = 0; k < per_subject; ++k) chosen.push_back(pool[pick(rng)]);
        }
        for (std::size_t src : chosen) {
            const auto& seq = set.sequences[src];
            const std::size_t t_in = seq.frames.size();
            if (t_in == 0) throw DataError("sequence " + seq.seq_id + " has no frames");
            std::vector<std::size_t> idx;
            if (t_in >= static_cast<std::size_t>(frames)) {
                idx.resize(t_in);
                std::iota(idx.begin(), idx.end(), std::size_t{0});
                std::shuffle(idx.begin(), idx.end(), rng);
                idx.resize(frames);
            } else {
                std::uniform_int_distribution<std::size_t> pick(0, t_in - 1);
                for (int f = 0; f < frames; ++f) idx.push_back(pick(rng));
            }
            std::vector<Coords> clip;
            clip.reserve(idx.size());
            for (std::size_t i : idx) clip.push_back(seq.frames[i]);
            batch.clips.push_back(std::move(clip));
            batch.labels.push_back(label);
            batch.sources.push_back(src);
            batch.frame_indices.push_back(std::move(idx));
        }
    }
    return batch;
}

Coords flip_pose(const Coords& frame) {
    Coords out;
    for (int i = 0; i < kNumJoints; ++i) {
        const Point2 p = frame[kMirrorJoint[i]];
        out[i] = {-p.x, p.y};
    }
    return out;
}

bool augment_flip(std::vector<Coords>& clip, double p, Rng& rng) {
    if (p <= 0.0) return false;
    std::bernoulli_distribution coin(p);
    if (!coin(rng)) return false;
    for (auto& f : clip) f = flip_pose(f);
    return true;
}

void augment_noise(std::vector<Coords>& clip, double p, double sigma, Rng& rng) {
    if (p <= 0.0 || sigma <= 0.0) return;
    std::bernoulli_distribution coin(p);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& f : clip) {
        for (auto& pt : f) {
            if (!coin(rng)) continue;
            pt.x += noise(rng);
            pt.y += noise(rng);
        }
    }
}

// -------------------------------------------------------------------- losses

TripletValue triplet_loss(const RowMatrix& features, const std::vector<int>& labels, double margin) {
    const Eigen::Index n = features.rows();
    if (static_cast<std::size_t>(n) != labels.size()) throw ShapeError("triplet loss: label count mismatch");
    TripletValue out;
    out.grad = RowMatrix::Zero(n, features.cols());
    RowMatrix dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) dist(i, j) = (features.row(i) - features.row(j)).norm();
    }
    auto add_distance_grad = [&](Eigen::Index a, Eigen::Index b, double sign) {
        const double d = dist(a, b);
        if (d == 0.0) return;
        const Eigen::RowVectorXd g = sign * (features.row(a) - features.row(b)) / d;
        out.grad.row(a) += g;
        out.grad.row(b) -= g;
    };
    double sum = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
        Eigen::Index pos = -1;
        Eigen::Index neg = -1;
        for (Eigen::Index b = 0; b < n; ++b) {
            if (b == a) continue;
            if (labels[b] == labels[a]) {
                if (pos < 0 || dist(a, b) > dist(a, pos)) pos = b;
            } else if (neg < 0 || dist(a, b) < dist(a, neg)) {
                neg = b;
            }
        }
        if (pos < 0 || neg < 0) continue;
        ++out.valid_anchors;
        const double hinge = dist(a, pos) - dist(a, neg) + margin;
        if (hinge <= 0.0) continue;
        ++out.active_anchors;
        sum += hinge;
        add_distance_grad(a, pos, 1.0);
        add_distance_grad(a, neg, -1.0);
    }
    if (out.valid_anchors > 0) {
        out.loss = sum / out.valid_anchors;
        out.grad /= static_cast<double>(out.valid_anchors);
    }
    return out;
}

LossValue cross_entropy_loss(const RowMatrix& logits, const std::vector<int>& labels) {
    const Eigen::Index n = logits.rows();
    if (static_cast<std::size_t>(n) != labels.size()) throw ShapeError("cross entropy: label count mismatch");
    LossValue out;
    out.grad = RowMatrix::Zero(n, logits.cols());
    if (n == 0) return out;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || y >= logits.cols()) {
            throw DataError("label " + std::to_string(y) + " outside [0, " + std::to_string(logits.cols()) + ")");
        }
        const double hi = logits.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(i).array() - hi).exp();
        const double z = e.sum();
        out.loss += std::log(z) + hi - logits(i, y);
        out.grad.row(i) = e / z;
        out.grad(i, y) -= 1.0;
    }
    out.loss /= static_cast<double>(n);
    out.grad /= static_cast<double>(n);
    return out;
}

double combined_loss(const std::vector<double>& triplet, const std::vector<double>& ce, double gamma) {
    if (triplet.empty()) return 0.0;
    if (!ce.empty() && ce.size() != triplet.size()) throw ShapeError("combined loss: part count mismatch");
    double sum = 0.0;
    for (std::size_t s = 0; s < triplet.size(); ++s) sum += triplet[s] + (ce.empty() ? 0.0 : gamma * ce[s]);
    return sum / static_cast<double>(triplet.size());
}

LossReport network_loss(const EmbeddingBatch& emb, const std::vector<int>& labels, double margin, double gamma) {
    LossReport rep;
    const std::size_t slots = emb.metric.size();
    const double inv = 1.0 / static_cast<double>(slots);
    std::vector<double> tri;
    std::vector<double> ce;
    int valid = 0;
    int active = 0;
    for (std::size_t s = 0; s < slots; ++s) {
        TripletValue t = triplet_loss(emb.metric[s], labels, margin);
        tri.push_back(t.loss);
        valid += t.valid_anchors;
        active += t.active_anchors;
        rep.dmetric.push_back(t.grad * inv);
        if (!emb.logits.empty()) {
            LossValue c = cross_entropy_loss(emb.logits[s], labels);
            ce.push_back(c.loss);
            rep.dlogits.push_back(c.grad * (gamma * inv));
        }
    }
    rep.total = combined_loss(tri, ce, gamma);
    rep.triplet = std::accumulate(tri.begin(), tri.end(), 0.0) * inv;
    rep.ce = ce.empty() ? 0.0 : std::accumulate(ce.begin(), ce.end(), 0.0) * inv;
    rep.no_valid_anchor = valid == 0;
    rep.active_fraction = valid == 0 ? 0.0 : static_cast<double>(active) / valid;
    return rep;
}

// ----------------------------------------------------------------- optimizer

void adam_step(ParameterStore& params, AdamState& state, double lr, double beta1, double beta2, double eps) {
    for (const auto& p : params.all()) {
        if (p.trainable && !p.grad.allFinite()) throw NumericError("non-finite gradient in tensor " + p.name);
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (auto& p : params.all()) {
        if (!p.trainable) continue;
        auto [it, inserted] = state.moments.try_emplace(p.name);
        auto& [m, v] = it->second;
        if (inserted) {
            m = RowMatrix::Zero(p.value.rows(), p.value.cols());
            v = RowMatrix::Zero(p.value.rows(), p.value.cols());
        }
        m = beta1 * m + (1.0 - beta1) * p.grad;
        v = beta2 * v + (1.0 - beta2) * p.grad.cwiseAbs2();
        p.value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
}

namespace {

struct Boundaries {
    std::int64_t b1;
    std::int64_t b2;
    std::int64_t last;
};

Boundaries boundaries(std::int64_t total, double phase1, double phase2) {
    const auto b1 = static_cast<std::int64_t>(std::llround(phase1 * static_cast<double>(total)));
    const auto b2 = static_cast<std::int64_t>(std::llround((phase1 + phase2) * static_cast<double>(total)));
    return {std::min(b1, total - 1), std::min(std::max(b2, b1), total - 1), total - 1};
}

}  // namespace

double one_cycle_lr_at(double u, std::int64_t total, double lr_init, double lr_max, double lr_final, double phase1,
                       double phase2, int phase) {
    if (total < 1) throw std::out_of_range("schedule needs at least one iteration");
    const Boundaries b = boundaries(total, phase1, phase2);
    if (phase == 0) phase = u < static_cast<double>(b.b1) ? 1 : (u < static_cast<double>(b.b2) ? 2 : 3);
    switch (phase) {
        case 1: return b.b1 == 0 ? lr_max : std::lerp(lr_init, lr_max, u / static_cast<double>(b.b1));
        case 2: {
            if (b.b2 == b.b1) return lr_init;
            const double frac = (u - static_cast<double>(b.b1)) / static_cast<double>(b.b2 - b.b1);
            return std::lerp(lr_init, lr_max, 0.5 * (1.0 + std::cos(std::numbers::pi * frac)));
        }
        case 3:
            if (b.last == b.b2) return lr_final;
            return std::lerp(lr_init, lr_final, (u - static_cast<double>(b.b2)) / static_cast<double>(b.last - b.b2));
        default: throw std::out_of_range("schedule phase must be 0..3");
    }
}

double one_cycle_lr(std::int64_t iteration, std::int64_t total, double lr_init, double lr_max, double lr_final,
                    double phase1, double phase2) {
    if (iteration < 0 || iteration >= total) {
        throw std::out_of_range("iteration " + std::to_string(iteration) + " outside [0, " + std::to_string(total) +
                                ")");
    }
    return one_cycle_lr_at(static_cast<double>(iteration), total, lr_init, lr_max, lr_final, phase1, phase2);
}

// ------------------------------------------------------------------- the loop

Rng iteration_rng(std::uint64_t seed, std::int64_t iteration) {
    const auto it = static_cast<std::uint64_t>(iteration);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(it), static_cast<std::uint32_t>(it >> 32), 0x67u};
    return Rng(seq);
}

DescriptorSet augmented_descriptors(std::vector<Coords> clip, const TrainConfig& config, Rng& rng) {
    augment_flip(clip, config.flip_prob, rng);
    augment_noise(clip, config.noise_prob, config.noise_sigma, rng);
    static const SkeletonTopology topology = SkeletonTopology::coco17();
    return build_descriptors(clip, topology);
}

IterationRecord train_step(Network& net, AdamState& adam, const TrainSet& set, const TrainConfig& config,
                           std::int64_t iteration) {
    Rng rng = iteration_rng(config.seed, iteration);
    Batch batch = sample_batch(set, config.subjects_per_batch, config.samples_per_subject, config.seq_len, rng);
    std::vector<DescriptorSet> descriptors;
    descriptors.reserve(batch.clips.size());
    for (auto& clip : batch.clips) descriptors.push_back(augmented_descriptors(std::move(clip), config, rng));
    std::vector<const DescriptorSet*> ptrs;
    for (const auto& d : descriptors) ptrs.push_back(&d);

    const NetworkInput input = make_network_input(ptrs, net.config());
    NetworkTape tape;
    const EmbeddingBatch emb = net.forward(input, Mode::Train, &tape);
    const LossReport rep = network_loss(emb, batch.labels, config.margin, config.gamma);
    if (!std::isfinite(rep.total)) {
        throw NumericError("non-finite loss at iteration " + std::to_string(iteration));
    }
    net.params().zero_grad();
    net.backward(rep.dmetric, rep.dlogits, tape);
    const double lr = one_cycle_lr(iteration, config.iterations, config.lr_init, config.lr_max, config.lr_final,
                                   config.phase1, config.phase2);
    adam_step(net.params(), adam, lr, config.beta1, config.beta2, config.adam_eps);
    return {iteration, lr, rep.total, rep.triplet, rep.ce, rep.active_fraction};
}

Checkpoint make_checkpoint(const Network& net, const AdamState& adam, std::int64_t iteration,
                           const std::string& config_text) {
    Checkpoint ckpt;
    ckpt.iteration = iteration;
    ckpt.config_text = config_text;
    append_tensors(ckpt, net.params());
    for (const auto& p : net.params().all()) {
        auto it = adam.moments.find(p.name);
        if (it == adam.moments.end()) continue;
        ckpt.tensors.push_back({"adam.m." + p.name, it->second.first});
        ckpt.tensors.push_back({"adam.v." + p.name, it->second.second});
    }
    return ckpt;
}

void restore_checkpoint(const Checkpoint& ckpt, Network& net, AdamState* adam) {
    load_tensors(ckpt, net.params());
    if (!adam) return;
    adam->step = ckpt.iteration;
    adam->moments.clear();
    for (const auto& p : net.params().all()) {
        const NamedTensor* m = ckpt.find("adam.m." + p.name);
        const NamedTensor* v = ckpt.find("adam.v." + p.name);
        if (m && v) adam->moments[p.name] = {m->value, v->value};
    }
}

void train_loop(Network& net, AdamState& adam, const TrainSet& set, const TrainConfig& config,
                const TrainOutputs& outputs) {
    config.validate();
    std::ofstream log;
    if (!outputs.metrics.empty()) {
        const bool fresh = !std::filesystem::exists(outputs.metrics) || adam.step == 0;
        log.open(outputs.metrics, fresh ? std::ios::trunc : std::ios::app);
        if (!log) throw Error("cannot write metrics log " + outputs.metrics.string());
        if (fresh) log << "iteration\tlr\tloss\ttriplet\tce\tactive_fraction\n";
    }
    auto save = [&](std::int64_t done) {
        if (!outputs.checkpoint.empty()) {
            write_checkpoint(outputs.checkpoint, make_checkpoint(net, adam, done, outputs.config_text));
        }
    };
    for (std::int64_t it = adam.step; it < config.iterations; ++it) {
        const IterationRecord rec = train_step(net, adam, set, config, it);
        const bool last = it + 1 == config.iterations;
        if ((it + 1) % config.log_every == 0 || last || it == 0) {
            if (log) {
                char line[256];
                std::snprintf(line, sizeof line, "%lld\t%.9g\t%.9g\t%.9g\t%.9g\t%.6f\n",
                              static_cast<long long>(rec.iteration), rec.lr, rec.loss, rec.triplet, rec.ce,
                              rec.active_fraction);
                log << line << std::flush;
            }
            if (outputs.on_log) outputs.on_log(rec);
        }
        if ((it + 1) % config.checkpoint_every == 0 || last) save(it + 1);
    }
}

}  // namespace gpgait
