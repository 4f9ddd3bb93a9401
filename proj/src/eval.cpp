// SPDX-License-Identifier: Apache-2.0
#include "gpgait/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace gpgait {

std::string_view to_string(DistanceMetric m) { return m == DistanceMetric::Cosine ? "cosine" : "euclidean"; }

DistanceMetric parse_distance_metric(std::string_view s) {
    if (s == "euclidean") return DistanceMetric::Euclidean;
    if (s == "cosine") return DistanceMetric::Cosine;
    throw ConfigError("unknown distance metric '" + std::string(s) + "'");
}

std::string_view to_string(CellStatus s) {
    switch (s) {
        case CellStatus::Evaluated: return "ok";
        case CellStatus::IdenticalView: return "excluded";
        case CellStatus::Missing: return "missing";
    }
    return "?";
}

DescriptorSet encode_sequence(const PoseSequence& seq, const EncodeOptions& options) {
    static const SkeletonTopology topology = SkeletonTopology::coco17();
    const UnifiedPoseSequence useq = options.use_hot ? apply_hot(seq, options.hot) : raw_unified(seq);
    if (useq.frames.empty()) throw DataError("sequence " + seq.seq_id + " is empty after normalisation");
    return build_descriptors(useq, topology);
}

std::vector<Eigen::VectorXd> embed_batch(const Network& net, const std::vector<const DescriptorSet*>& batch) {
    const NetworkInput input = make_network_input(batch, net.config());
    const EmbeddingBatch emb = net.forward(input, Mode::Eval);
    std::vector<Eigen::VectorXd> out;
    for (int n = 0; n < emb.batch(); ++n) out.push_back(emb.concatenated(n));
    return out;
}

std::vector<Eigen::VectorXd> embed_dataset(const Network& net, const std::vector<DescriptorSet>& sets, int threads) {
    std::vector<Eigen::VectorXd> out(sets.size());
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < sets.size(); i += stride) out[i] = embed_batch(net, {&sets[i]}).front();
    };
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || sets.size() < 2) {
        work(0, 1);
        return out;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
    return out;
}

RowMatrix pairwise_distances(const std::vector<Eigen::VectorXd>& probe, const std::vector<Eigen::VectorXd>& gallery,
                             DistanceMetric metric) {
    RowMatrix d(static_cast<Eigen::Index>(probe.size()), static_cast<Eigen::Index>(gallery.size()));
    for (std::size_t p = 0; p < probe.size(); ++p) {
        for (std::size_t g = 0; g < gallery.size(); ++g) {
            if (probe[p].size() != gallery[g].size()) throw ShapeError("embedding layouts differ");
            if (metric == DistanceMetric::Euclidean) {
                d(p, g) = (probe[p] - gallery[g]).norm();
            } else {
                const double denom = probe[p].norm() * gallery[g].norm();
                d(p, g) = denom == 0.0 ? 1.0 : 1.0 - probe[p].dot(gallery[g]) / denom;
            }
        }
    }
    return d;
}

Eigen::Index nearest_gallery(const RowMatrix& distances, Eigen::Index p) {
    if (distances.cols() == 0) throw DataError("empty gallery");
    Eigen::Index best = 0;
    for (Eigen::Index g = 1; g < distances.cols(); ++g) {
        if (distances(p, g) < distances(p, best)) best = g;
    }
    return best;
}

double rank1_simple(const RowMatrix& distances, const std::vector<std::string>& probe_labels,
                    const std::vector<std::string>& gallery_labels) {
    if (gallery_labels.empty() || distances.cols() == 0) throw DataError("empty gallery");
    if (static_cast<std::size_t>(distances.rows()) != probe_labels.size() ||
        static_cast<std::size_t>(distances.cols()) != gallery_labels.size()) {
        throw ShapeError("distance matrix does not match label counts");
    }
    if (probe_labels.empty()) return 0.0;
    int hits = 0;
    for (Eigen::Index p = 0; p < distances.rows(); ++p) {
        if (gallery_labels[nearest_gallery(distances, p)] == probe_labels[p]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(probe_labels.size());
}

// --------------------------------------------------------- cross-view cells

namespace {

std::vector<std::string> split_dash(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, '-')) parts.push_back(tok);
    return parts;
}

int parse_index(const std::string& tok, const std::string& seq_id) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw DataError("cannot read the sequence number from seq_id '" + seq_id + "'");
}

using ItemFilter = std::function<bool(const ProtocolItem&)>;

struct ProbeSet {
    Condition condition;
    ItemFilter filter;
};

CrossViewResult cross_view(const std::vector<ProtocolItem>& items, const std::vector<Eigen::VectorXd>& embeddings,
                           DistanceMetric metric, const ItemFilter& is_gallery, const std::vector<ProbeSet>& probe_sets) {
    if (items.size() != embeddings.size()) throw ShapeError("item and embedding counts differ");
    std::set<std::string> view_set;
    for (const auto& it : items) view_set.insert(it.view);
    const std::vector<std::string> views(view_set.begin(), view_set.end());

    CrossViewResult result;
    double mean_sum = 0.0;
    int mean_count = 0;
    for (const auto& ps : probe_sets) {
        double sum = 0.0;
        int evaluated = 0;
        for (const auto& pv : views) {
            std::vector<std::size_t> probes;
            for (std::size_t i = 0; i < items.size(); ++i) {
                if (items[i].view == pv && ps.filter(items[i])) probes.push_back(i);
            }
            for (const auto& gv : views) {
                CrossViewCell cell{ps.condition, pv, gv, CellStatus::Missing, 0.0, static_cast<int>(probes.size())};
                if (pv == gv) {
                    cell.status = CellStatus::IdenticalView;
                    result.cells.push_back(cell);
                    continue;
                }
                std::vector<std::size_t> gallery;
                for (std::size_t i = 0; i < items.size(); ++i) {
                    if (items[i].view == gv && is_gallery(items[i])) gallery.push_back(i);
                }
                if (probes.empty() || gallery.empty()) {
                    result.warnings.push_back("cell " + std::string(to_string(ps.condition)) + " " + pv + "->" + gv +
                                              " skipped: no " + (probes.empty() ? "probes" : "gallery"));
                    result.cells.push_back(cell);
                    continue;
                }
                std::vector<Eigen::VectorXd> pe;
                std::vector<Eigen::VectorXd> ge;
                std::vector<std::string> pl;
                std::vector<std::string> gl;
                for (auto i : probes) {
                    pe.push_back(embeddings[i]);
                    pl.push_back(items[i].subject);
                }
                for (auto i : gallery) {
                    ge.push_back(embeddings[i]);
                    gl.push_back(items[i].subject);
                }
                cell.accuracy = rank1_simple(pairwise_distances(pe, ge, metric), pl, gl);
                cell.status = CellStatus::Evaluated;
                sum += cell.accuracy;
                ++evaluated;
                result.cells.push_back(cell);
            }
        }
        if (evaluated == 0) {
            result.warnings.push_back("condition " + std::string(to_string(ps.condition)) +
                                      " has no evaluable cell; left out of the mean");
            continue;
        }
        const double acc = sum / evaluated;
        result.per_condition.push_back({ps.condition, acc, evaluated});
        mean_sum += acc;
        ++mean_count;
    }
    result.mean = mean_count == 0 ? 0.0 : mean_sum / mean_count;
    return result;
}

}  // namespace

std::vector<bool> CrossViewResult::averaged_mask() const {
    std::vector<bool> mask;
    mask.reserve(cells.size());
    for (const auto& c : cells) mask.push_back(c.status == CellStatus::Evaluated);
    return mask;
}

ProtocolItem protocol_item(const PoseSequence& seq, Protocol protocol) {
    ProtocolItem item{seq.subject, seq.condition, 0, seq.view};
    const auto parts = split_dash(seq.seq_id);
    if (protocol == Protocol::CasiaB) {
        if (parts.size() < 4) throw DataError("seq_id '" + seq.seq_id + "' is not <subject>-<cond>-<idx>-<view>");
        item.index = parse_index(parts[parts.size() - 2], seq.seq_id);
    } else if (protocol == Protocol::Oumvlp) {
        if (parts.size() < 3) throw DataError("seq_id '" + seq.seq_id + "' is not <subject>-<idx>-<view>");
        item.index = parse_index(parts[parts.size() - 2], seq.seq_id);
    }
    return item;
}

CrossViewResult rank1_casiab(const std::vector<ProtocolItem>& items, const std::vector<Eigen::VectorXd>& embeddings,
                             DistanceMetric metric) {
    auto in = [](int idx, int lo, int hi) { return idx >= lo && idx <= hi; };
    const ItemFilter gallery = [&](const ProtocolItem& it) {
        return it.condition == Condition::NM && in(it.index, 1, 4);
    };
    const std::vector<ProbeSet> probes = {
        {Condition::NM, [&](const ProtocolItem& it) { return it.condition == Condition::NM && in(it.index, 5, 6); }},
        {Condition::BG, [&](const ProtocolItem& it) { return it.condition == Condition::BG && in(it.index, 1, 2); }},
        {Condition::CL, [&](const ProtocolItem& it) { return it.condition == Condition::CL && in(it.index, 1, 2); }},
    };
    return cross_view(items, embeddings, metric, gallery, probes);
}

CrossViewResult rank1_oumvlp(const std::vector<ProtocolItem>& items, const std::vector<Eigen::VectorXd>& embeddings,
                             DistanceMetric metric) {
    const ItemFilter gallery = [](const ProtocolItem& it) { return it.index == 1; };
    const std::vector<ProbeSet> probes = {{Condition::NM, [](const ProtocolItem& it) { return it.index == 0; }}};
    return cross_view(items, embeddings, metric, gallery, probes);
}

// ------------------------------------------------------------------ reports

std::vector<Role> assign_roles(const std::vector<DatasetItem>& items, Protocol protocol) {
    std::vector<Role> roles;
    roles.reserve(items.size());
    for (const auto& it : items) roles.push_back(it.role);
    if (protocol != Protocol::Grew) return roles;
    std::map<std::string, std::vector<std::size_t>> by_subject;
    for (std::size_t i = 0; i < items.size(); ++i) by_subject[items[i].sequence.subject].push_back(i);
    for (auto& [subject, idx] : by_subject) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return items[a].sequence.seq_id < items[b].sequence.seq_id;
        });
        for (std::size_t k = 0; k < idx.size(); ++k) {
            roles[idx[k]] = k < 2 ? Role::Gallery : (k < 4 ? Role::Probe : Role::Train);
        }
    }
    return roles;
}

namespace {

void add_cross_view_records(EvalReport& report, const CrossViewResult& r) {
    for (const auto& c : r.cells) {
        report.records.push_back({"cell", std::string(to_string(c.condition)), c.probe_view, c.gallery_view,
                                  std::string(to_string(c.status)), c.accuracy, c.probes, ""});
    }
    for (const auto& s : r.per_condition) {
        report.records.push_back(
            {"summary", std::string(to_string(s.condition)), "*", "*", "ok", s.accuracy, s.cells, ""});
    }
    report.records.push_back({"summary", "mean", "*", "*", "ok", r.mean, static_cast<int>(r.per_condition.size()), ""});
    for (const auto& w : r.warnings) report.records.push_back({"warning", "", "", "", "", 0.0, 0, w});
    report.rank1 = r.mean;
}

}  // namespace

EvalReport score_embeddings(const std::vector<DatasetItem>& items, const std::vector<Eigen::VectorXd>& embeddings,
                            Protocol protocol, DistanceMetric metric) {
    if (items.size() != embeddings.size()) throw ShapeError("item and embedding counts differ");
    EvalReport report;
    report.protocol = protocol;
    if (protocol == Protocol::CasiaB || protocol == Protocol::Oumvlp) {
        std::vector<ProtocolItem> pitems;
        for (const auto& it : items) pitems.push_back(protocol_item(it.sequence, protocol));
        const CrossViewResult r = protocol == Protocol::CasiaB ? rank1_casiab(pitems, embeddings, metric)
                                                               : rank1_oumvlp(pitems, embeddings, metric);
        for (const auto& c : r.cells) {
            if (c.status == CellStatus::Evaluated) report.probes += c.probes;
        }
        add_cross_view_records(report, r);
        return report;
    }
    const std::vector<Role> roles = assign_roles(items, protocol);
    std::vector<Eigen::VectorXd> pe;
    std::vector<Eigen::VectorXd> ge;
    std::vector<std::string> pl;
    std::vector<std::string> gl;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (roles[i] == Role::Probe) {
            pe.push_back(embeddings[i]);
            pl.push_back(items[i].sequence.subject);
        } else if (roles[i] == Role::Gallery) {
            ge.push_back(embeddings[i]);
            gl.push_back(items[i].sequence.subject);
        }
    }
    if (ge.empty()) throw DataError("no gallery sequences for protocol " + std::string(to_string(protocol)));
    report.rank1 = rank1_simple(pairwise_distances(pe, ge, metric), pl, gl);
    report.probes = static_cast<int>(pe.size());
    report.gallery = static_cast<int>(ge.size());
    report.records.push_back({"summary", "all", "*", "*", "ok", report.rank1, report.probes, ""});
    if (pe.empty()) report.records.push_back({"warning", "", "", "", "", 0.0, 0, "no probe sequences"});
    return report;
}

EvalReport evaluate_dataset(const Network& net, const std::vector<DatasetItem>& items, Protocol protocol,
                            const EncodeOptions& encode, DistanceMetric metric, int threads) {
    std::vector<DescriptorSet> sets;
    sets.reserve(items.size());
    for (const auto& it : items) sets.push_back(encode_sequence(it.sequence, encode));
    return score_embeddings(items, embed_dataset(net, sets, threads), protocol, metric);
}

std::string format_results(const EvalReport& report) {
    std::string out = "# gpgait results\n";
    out += "protocol\t" + std::string(to_string(report.protocol)) + "\n";
    out += "record\tcondition\tprobe_view\tgallery_view\tstatus\taccuracy\tcount\n";
    char buf[64];
    for (const auto& r : report.records) {
        if (r.kind == "warning") {
            out += "warning\t" + r.message + "\n";
            continue;
        }
        std::snprintf(buf, sizeof buf, "%.6f", r.accuracy);
        out += r.kind + "\t" + r.condition + "\t" + r.probe_view + "\t" + r.gallery_view + "\t" + r.status + "\t" +
               (r.status == "ok" ? std::string(buf) : std::string("-")) + "\t" + std::to_string(r.count) + "\n";
    }
    std::snprintf(buf, sizeof buf, "%.6f", report.rank1);
    out += "rank1\t" + std::string(buf) + "\n";
    return out;
}

void write_results(const std::filesystem::path& path, const EvalReport& report) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write results file " + path.string());
    out << format_results(report);
}

// ------------------------------------------------------------------ heatmap

RowMatrix heatmap_matrix(const FeatureTensor& features, int channels) {
    if (features.batch < 1 || features.frames < 1) throw ShapeError("heatmap needs at least one frame");
    const int c = std::min(channels, features.channels);
    RowMatrix out = features.frame(0, 0).leftCols(c);
    for (int t = 1; t < features.frames; ++t) out = out.cwiseMax(features.frame(0, t).leftCols(c));
    return out;
}

void write_heatmap(const std::filesystem::path& path, const RowMatrix& heatmap) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write heatmap file " + path.string());
    char buf[32];
    for (Eigen::Index r = 0; r < heatmap.rows(); ++r) {
        for (Eigen::Index c = 0; c < heatmap.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.9g", heatmap(r, c));
            out << (c ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace gpgait
