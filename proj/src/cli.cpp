// SPDX-License-Identifier: Apache-2.0
#include "gpgait/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "gpgait/checkpoint.hpp"
#include "gpgait/graph.hpp"
#include "gpgait/hod.hpp"

namespace gpgait {

namespace {

namespace fs = std::filesystem;

RowMatrix as_matrix(const std::vector<double>& values, std::size_t frames, int channels) {
    const Eigen::Index rows = static_cast<Eigen::Index>(frames) * kNumJoints;
    return Eigen::Map<const RowMatrix>(values.data(), rows, channels);
}

UnifiedPoseSequence unify(const PoseSequence& seq, const RunConfig& config) {
    return config.use_hot ? apply_hot(seq, config.hot) : raw_unified(seq);
}

struct LoadedModel {
    RunConfig config;
    std::unique_ptr<Network> net;
};

LoadedModel load_model(const fs::path& checkpoint) {
    const Checkpoint ckpt = read_checkpoint(checkpoint);
    LoadedModel m;
    m.config = config_from_text(ckpt.config_text);
    m.net = std::make_unique<Network>(m.config.net, m.config.seed);
    load_tensors(ckpt, m.net->params());
    return m;
}

}  // namespace

RunConfig resolve_config(const ConfigOverrides& o) {
    RunConfig c = preset_config(o.preset);
    if (!o.config_file.empty()) apply_config_file(c, o.config_file);
    for (const auto& a : o.assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + a + "'");
        set_config_value(c, a.substr(0, eq), a.substr(eq + 1));
    }
    if (o.seed) c.seed = *o.seed;
    if (o.threads) {
        c.threads = *o.threads;
    } else if (const char* env = std::getenv("GPGAIT_THREADS"); env && *env) {
        set_config_value(c, "run.threads", env);
    }
    if (o.no_hot) c.use_hot = false;
    if (o.descriptors) set_config_value(c, "net.descriptors", *o.descriptors);
    if (o.single_branch) c.net.single_branch = true;
    if (o.no_partition) c.net.partition = false;
    if (o.normalization) c.normalization = *o.normalization;
    if (o.protocol) set_config_value(c, "eval.protocol", *o.protocol);
    if (o.metric) set_config_value(c, "eval.metric", *o.metric);
    c.train.seed = c.seed;
    c.validate();
    return c;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return 3;
    if (dynamic_cast<const NumericError*>(&e)) return 4;
    return 1;
}

SynthDataset cmd_synth(const SynthOptions& options, const fs::path& out_dir) {
    return generate_dataset(options, out_dir);
}

PreprocessSummary cmd_preprocess(const RunConfig& config, const fs::path& manifest_path, const fs::path& out_dir) {
    config.validate();
    const DatasetManifest manifest = read_manifest(manifest_path);
    const std::vector<PoseSequence> seqs = load_sequences(manifest);
    fs::create_directories(out_dir);

    ValidationOptions vopt;
    vopt.min_frames = config.min_frames;
    vopt.epsilon_extent = config.hot.epsilon_extent;
    const SkeletonTopology topology = SkeletonTopology::coco17();

    PreprocessSummary summary;
    summary.sequences = seqs.size();
    std::vector<UnifiedPoseSequence> unified;
    Checkpoint cache;
    std::ofstream report(out_dir / "validation.tsv", std::ios::binary | std::ios::trunc);
    if (!report) throw Error("cannot write " + (out_dir / "validation.tsv").string());
    report << "seq_id\tframes\tstatus\tframe\tdetail\n";

    for (const auto& seq : seqs) {
        const ValidationReport v = validate_sequence(seq, vopt);
        if (!v.clean()) ++summary.flagged;
        if (v.too_short) report << seq.seq_id << '\t' << v.frame_count << "\ttoo_short\t-\t-\n";
        for (const auto& issue : v.issues) {
            report << seq.seq_id << '\t' << v.frame_count << "\tissue\t" << issue.frame << '\t'
                   << to_string(issue.kind) << '\n';
        }
        UnifiedPoseSequence u;
        try {
            u = unify(seq, config);
        } catch (const NumericError& e) {
            report << seq.seq_id << '\t' << v.frame_count << "\tskipped\t-\t" << e.what() << '\n';
            continue;
        }
        const DescriptorSet d = build_descriptors(u, topology);
        cache.tensors.push_back({seq.seq_id + ".joint", as_matrix(d.joint, d.frames, 2)});
        cache.tensors.push_back({seq.seq_id + ".angle", as_matrix(d.angle, d.frames, 1)});
        cache.tensors.push_back({seq.seq_id + ".bone", as_matrix(d.bone, d.frames, 2)});
        for (const auto& w : d.warnings) {
            report << seq.seq_id << '\t' << v.frame_count << "\tdegenerate_angle\t" << w.frame << "\tjoint "
                   << w.joint << '\n';
        }
        if (v.clean()) report << seq.seq_id << '\t' << v.frame_count << "\tok\t-\t-\n";
        unified.push_back(std::move(u));
        ++summary.written;
    }
    write_unified_file(out_dir / "unified.jsonl", unified);
    cache.config_text = config_to_text(config);
    write_checkpoint(out_dir / "descriptors.gpgw", cache);
    return summary;
}

TrainSummary cmd_train(const RunConfig& base, const fs::path& manifest_path, const fs::path& out_dir,
                       const fs::path& resume, std::function<void(const IterationRecord&)> on_log) {
    RunConfig config = base;
    config.train.seed = config.seed;
    config.validate();
    const std::vector<DatasetItem> items = load_dataset(read_manifest(manifest_path));

    auto collect = [&](Role role) {
        std::vector<UnifiedPoseSequence> out;
        for (const auto& it : items) {
            if (it.role == role) out.push_back(unify(it.sequence, config));
        }
        return out;
    };
    std::vector<UnifiedPoseSequence> seqs = collect(Role::Train);
    if (seqs.empty()) {
        std::cerr << "gpgait: no train entries in the manifest, training on gallery entries\n";
        seqs = collect(Role::Gallery);
    }
    if (seqs.empty()) throw DataError("manifest " + manifest_path.string() + " has no trainable sequences");
    const TrainSet set = make_train_set(std::move(seqs));
    config.net.num_classes = set.num_classes();

    Network net(config.net, config.seed);
    AdamState adam;
    if (!resume.empty()) {
        const Checkpoint ckpt = read_checkpoint(resume);
        restore_checkpoint(ckpt, net, &adam);
    }

    fs::create_directories(out_dir);
    const std::string text = config_to_text(config);
    {
        std::ofstream echo(out_dir / "config.txt", std::ios::binary | std::ios::trunc);
        echo << text;
    }
    TrainOutputs outputs;
    outputs.checkpoint = out_dir / "checkpoint.gpgw";
    outputs.metrics = out_dir / "metrics.tsv";
    outputs.config_text = text;
    outputs.on_log = std::move(on_log);
    train_loop(net, adam, set, config.train, outputs);

    TrainSummary summary;
    summary.checkpoint = outputs.checkpoint;
    summary.iterations = adam.step;
    summary.classes = set.num_classes();
    summary.sequences = set.sequences.size();
    return summary;
}

EvalReport cmd_eval(const fs::path& checkpoint, const fs::path& manifest_path, const EvalOptions& options,
                    const fs::path& results) {
    const LoadedModel model = load_model(checkpoint);
    const DatasetManifest manifest = read_manifest(manifest_path);
    const Protocol protocol = options.protocol.value_or(manifest.protocol);
    std::vector<DatasetItem> items = load_dataset(manifest);
    if (protocol == Protocol::CasiaB || protocol == Protocol::Oumvlp) {
        std::erase_if(items, [](const DatasetItem& it) { return it.role == Role::Train; });
    }
    const EvalReport report = evaluate_dataset(*model.net, items, protocol, model.config.encode(),
                                               options.metric.value_or(model.config.metric), options.threads);
    if (!results.empty()) write_results(results, report);
    return report;
}

std::vector<fs::path> cmd_inspect(const fs::path& checkpoint, const fs::path& sequence_file, const fs::path& out,
                                  const InspectOptions& options) {
    const LoadedModel model = load_model(checkpoint);
    const std::vector<PoseSequence> seqs = read_sequence_file(sequence_file);
    if (seqs.empty()) throw DataError("sequence file " + sequence_file.string() + " is empty");
    const DescriptorSet d = encode_sequence(seqs.front(), model.config.encode());
    const NetworkInput input = make_network_input({&d}, model.config.net);

    int branch = -1;
    for (int b = 0; b < model.config.net.branch_count(); ++b) {
        if (model.net->branch_name(b) == options.branch) branch = b;
    }
    if (branch < 0) throw ConfigError("unknown branch '" + options.branch + "'");

    auto heatmap_of = [&](const Network& net) {
        return heatmap_matrix(net.branch_forward(branch, input.branches[branch], Mode::Eval), options.channels);
    };
    if (!options.compare_unmasked) {
        write_heatmap(out, heatmap_of(*model.net));
        return {out};
    }
    NetworkConfig flat = model.config.net;
    flat.partition = false;
    Network unmasked(flat, model.config.seed);
    unmasked.copy_parameters_from(*model.net);
    const fs::path stem = out.parent_path() / out.stem();
    const fs::path masked_path = stem.string() + "_masked" + out.extension().string();
    const fs::path unmasked_path = stem.string() + "_unmasked" + out.extension().string();
    write_heatmap(masked_path, heatmap_of(*model.net));
    write_heatmap(unmasked_path, heatmap_of(unmasked));
    return {masked_path, unmasked_path};
}

}  // namespace gpgait
