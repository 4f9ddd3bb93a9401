// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "gpgait/checkpoint.hpp"
#include "gpgait/cli.hpp"

namespace {

using namespace gpgait;

void add_config_options(CLI::App* app, ConfigOverrides& o, bool with_ablations) {
    app->add_option("--preset", o.preset, "casiab | oumvlp | gait3d | grew | toy")->capture_default_str();
    app->add_option("--config", o.config_file, "key = value config file");
    app->add_option("--set", o.assignments, "section.key=value override (repeatable)");
    app->add_option("--seed", o.seed, "global seed");
    app->add_option("--threads", o.threads, "worker threads (default: GPGAIT_THREADS or 1)");
    if (!with_ablations) return;
    app->add_flag("--no-hot", o.no_hot, "skip the HOT unification");
    app->add_option("--descriptors", o.descriptors, "comma list of joint, angle, bone");
    app->add_flag("--single-branch", o.single_branch, "fuse descriptors into one branch");
    app->add_flag("--no-partition", o.no_partition, "use the global mask in every block");
    app->add_option("--normalization", o.normalization, "hot | spine_unit | dataset_independent");
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError("invalid number '" + tok + "' in list '" + text + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pose-based gait recognition toolkit"};
    app.require_subcommand(1);

    // synth
    SynthOptions synth;
    std::string synth_layout = "simple";
    std::string slants;
    std::string views;
    std::filesystem::path synth_out = "synth";
    auto* s = app.add_subcommand("synth", "Generate a synthetic walker dataset");
    s->add_option("--identities", synth.identities)->capture_default_str();
    s->add_option("--sequences", synth.sequences_per_identity)->capture_default_str();
    s->add_option("--frames", synth.frames)->capture_default_str();
    s->add_option("--train-identities", synth.train_identities)->capture_default_str();
    s->add_option("--train-sequences", synth.train_sequences_per_identity)->capture_default_str();
    s->add_option("--seed", synth.seed)->capture_default_str();
    s->add_option("--camera-seed", synth.camera_seed, "0 derives it from --seed");
    s->add_option("--scale-min", synth.camera.scale_min)->capture_default_str();
    s->add_option("--scale-max", synth.camera.scale_max)->capture_default_str();
    s->add_option("--translate", synth.camera.translate)->capture_default_str();
    s->add_option("--slants", slants, "comma list of slant angles in radians");
    s->add_option("--jitter", synth.camera.jitter)->capture_default_str();
    s->add_option("--layout", synth_layout, "simple | casiab")->capture_default_str();
    s->add_option("--views", views, "comma list of view names (casiab layout)");
    s->add_option("--out", synth_out)->capture_default_str();

    // preprocess
    ConfigOverrides pre_cfg;
    std::filesystem::path pre_manifest;
    std::filesystem::path pre_out = "preprocessed";
    auto* p = app.add_subcommand("preprocess", "Validate, unify and cache descriptors");
    add_config_options(p, pre_cfg, true);
    p->add_option("--manifest", pre_manifest)->required();
    p->add_option("--out", pre_out)->capture_default_str();

    // train
    ConfigOverrides train_cfg;
    std::filesystem::path train_manifest;
    std::filesystem::path train_out = "run";
    std::filesystem::path resume;
    bool quiet = false;
    auto* t = app.add_subcommand("train", "Train a model");
    add_config_options(t, train_cfg, true);
    t->add_option("--manifest", train_manifest)->required();
    t->add_option("--out", train_out)->capture_default_str();
    t->add_option("--resume", resume, "checkpoint to continue from");
    t->add_flag("--quiet", quiet, "do not print log records");

    // eval
    std::filesystem::path eval_ckpt;
    std::filesystem::path eval_manifest;
    std::filesystem::path eval_out;
    std::string eval_protocol;
    std::string eval_metric;
    std::optional<int> eval_threads;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
    e->add_option("--checkpoint", eval_ckpt)->required();
    e->add_option("--manifest", eval_manifest)->required();
    e->add_option("--protocol", eval_protocol, "casiab | oumvlp | gait3d | grew | simple");
    e->add_option("--metric", eval_metric, "euclidean | cosine");
    e->add_option("--threads", eval_threads, "worker threads (default: GPGAIT_THREADS or 1)");
    e->add_option("--out", eval_out, "results table path");

    // inspect
    std::filesystem::path insp_ckpt;
    std::filesystem::path insp_seq;
    std::filesystem::path insp_out = "heatmap.csv";
    InspectOptions insp;
    auto* i = app.add_subcommand("inspect", "Write a keypoint x channel activation heatmap");
    i->add_option("--checkpoint", insp_ckpt)->required();
    i->add_option("--sequence", insp_seq, "sequence file; its first record is used")->required();
    i->add_option("--out", insp_out)->capture_default_str();
    i->add_option("--branch", insp.branch)->capture_default_str();
    i->add_option("--channels", insp.channels)->capture_default_str();
    i->add_flag("--compare-unmasked", insp.compare_unmasked);

    CLI11_PARSE(app, argc, argv);

    try {
        if (s->parsed()) {
            if (synth_layout == "casiab") {
                synth.layout = SynthLayout::CasiaB;
            } else if (synth_layout != "simple") {
                throw ConfigError("unknown layout '" + synth_layout + "'");
            }
            if (!slants.empty()) synth.camera.slants = parse_doubles(slants);
            if (!views.empty()) {
                synth.views.clear();
                std::stringstream in(views);
                for (std::string v; std::getline(in, v, ',');) synth.views.push_back(v);
            }
            const SynthDataset ds = cmd_synth(synth, synth_out);
            std::cout << "wrote " << ds.manifest.entries.size() << " sequences, manifest " << ds.manifest_path.string()
                      << "\n";
        } else if (p->parsed()) {
            const PreprocessSummary r = cmd_preprocess(resolve_config(pre_cfg), pre_manifest, pre_out);
            std::cout << "preprocessed " << r.written << "/" << r.sequences << " sequences, " << r.flagged
                      << " flagged\n";
        } else if (t->parsed()) {
            auto log = [&](const IterationRecord& r) {
                if (quiet) return;
                std::printf("iter %lld  lr %.3e  loss %.5f  triplet %.5f  ce %.5f  active %.3f\n",
                            static_cast<long long>(r.iteration), r.lr, r.loss, r.triplet, r.ce, r.active_fraction);
                std::fflush(stdout);
            };
            const TrainSummary r = cmd_train(resolve_config(train_cfg), train_manifest, train_out, resume, log);
            std::cout << "trained " << r.iterations << " iterations on " << r.sequences << " sequences ("
                      << r.classes << " identities), checkpoint " << r.checkpoint.string() << "\n";
        } else if (e->parsed()) {
            EvalOptions opt;
            if (!eval_protocol.empty()) {
                try {
                    opt.protocol = parse_protocol(eval_protocol);
                } catch (const Error&) {
                    throw ConfigError("unknown protocol '" + eval_protocol + "'");
                }
            }
            if (!eval_metric.empty()) opt.metric = parse_distance_metric(eval_metric);
            ConfigOverrides threads_only;
            threads_only.threads = eval_threads;
            opt.threads = resolve_config(threads_only).threads;
            const EvalReport r = cmd_eval(eval_ckpt, eval_manifest, opt, eval_out);
            std::cout << format_results(r);
        } else if (i->parsed()) {
            for (const auto& path : cmd_inspect(insp_ckpt, insp_seq, insp_out, insp)) {
                std::cout << "wrote " << path.string() << "\n";
            }
        }
    } catch (const std::exception& ex) {
        std::cerr << "gpgait: error: " << ex.what() << "\n";
        return exit_code_for(ex);
    }
    return 0;
}
