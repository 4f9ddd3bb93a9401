// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "gpgait/checkpoint.hpp"
#include "gpgait/cli.hpp"
#include "helpers.hpp"

using namespace gpgait;

namespace {

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

SynthDataset small_dataset(const std::filesystem::path& dir) {
    SynthOptions o;
    o.identities = 4;
    o.sequences_per_identity = 3;
    o.train_identities = 4;
    o.train_sequences_per_identity = 2;
    o.frames = 12;
    o.seed = 11;
    return cmd_synth(o, dir);
}

ConfigOverrides tiny_overrides() {
    ConfigOverrides o;
    o.preset = "toy";
    o.assignments = {"net.parts5_channels=4", "net.larger_channels=4", "net.embed_dim=4",
                     "train.subjects_per_batch=4", "train.samples_per_subject=2", "train.seq_len=8",
                     "train.iterations=2", "train.log_every=1", "train.checkpoint_every=1"};
    o.seed = 5;
    o.threads = 1;
    return o;
}

}  // namespace

TEST_SUITE("config_cli") {

TEST_CASE("config keys and presets") {
    for (const auto& name : preset_names()) CHECK_NOTHROW(preset_config(name).validate());
    CHECK_THROWS_AS(preset_config("nope"), ConfigError);

    RunConfig c = preset_config("casiab");
    try {
        set_config_value(c, "net.wobble", "1");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("net.wobble") != std::string::npos);
    }
    CHECK_THROWS_AS(set_config_value(c, "train.margin", "wide"), ConfigError);

    set_config_value(c, "scheme.halves", "0,1,2,3,4,5,6,7,8,9,10|11,12,13,14,15,16");
    set_config_value(c, "net.larger_schemes", "halves,global");
    set_config_value(c, "train.margin", "0.3");
    apply_config_text(c, "# comment\n[train]\ngamma = 0.25\n; other\n[run]\nseed = 99\n");
    CHECK(c.train.gamma == 0.25);
    CHECK(c.seed == 99);
    const RunConfig back = config_from_text(config_to_text(c));
    CHECK(config_to_text(back) == config_to_text(c));
    CHECK(back.net.larger_schemes == c.net.larger_schemes);
    CHECK(back.train.margin == 0.3);
}

TEST_CASE("override layering") {
    testing::TempDir dir;
    testing::write_file(dir / "c.ini", "[train]\nmargin = 0.4\ngamma = 0.5\n");
    ConfigOverrides o;
    o.preset = "toy";
    o.config_file = dir / "c.ini";
    o.assignments = {"train.gamma=0.75"};
    o.no_hot = true;
    o.seed = 17;
    const RunConfig c = resolve_config(o);
    CHECK(c.train.margin == 0.4);
    CHECK(c.train.gamma == 0.75);
    CHECK_FALSE(c.use_hot);
    CHECK(c.seed == 17);
    CHECK(c.train.seed == 17);
}

TEST_CASE("exit codes") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(DataError("x")) == 3);
    CHECK(exit_code_for(ShapeError("x")) == 3);
    CHECK(exit_code_for(NumericError("x")) == 4);
    CHECK(exit_code_for(NotImplementedError("x")) == 1);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("normalisation alternatives are switches only") {
    ConfigOverrides o;
    o.normalization = "spine_unit";
    CHECK_THROWS_AS(resolve_config(o), NotImplementedError);
    o.normalization = "dataset_independent";
    CHECK_THROWS_AS(resolve_config(o), NotImplementedError);
    o.normalization = "elsewise";
    CHECK_THROWS_AS(resolve_config(o), ConfigError);
}

TEST_CASE("preprocess") {
    testing::TempDir dir;
    const SynthDataset ds = small_dataset(dir / "data");
    const RunConfig c = resolve_config(tiny_overrides());
    const PreprocessSummary a = cmd_preprocess(c, ds.manifest_path, dir / "p1");
    cmd_preprocess(c, ds.manifest_path, dir / "p2");
    CHECK(a.sequences == 20);
    CHECK(a.written == 20);
    for (const char* f : {"unified.jsonl", "descriptors.gpgw", "validation.tsv"})
        CHECK(testing::read_file(dir / "p1" / f) == testing::read_file(dir / "p2" / f));
    CHECK(count_lines(testing::read_file(dir / "p1" / "unified.jsonl")) == 20);
    const Checkpoint d = read_checkpoint(dir / "p1" / "descriptors.gpgw");
    CHECK(d.tensors.size() == 60);
    REQUIRE(d.find("s000-nm-01-000.angle") != nullptr);
    CHECK(d.find("s000-nm-01-000.angle")->value.rows() == 12 * kNumJoints);

    testing::write_file(dir / "broken.tsv", "sequences/none.jsonl\tgallery\n");
    try {
        cmd_preprocess(c, dir / "broken.tsv", dir / "p3");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(exit_code_for(e) == 3);
    }
}

TEST_CASE("train, resume, eval and inspect") {
    testing::TempDir dir;
    const SynthDataset ds = small_dataset(dir / "data");
    ConfigOverrides o = tiny_overrides();
    const RunConfig two = resolve_config(o);
    int logged = 0;
    const TrainSummary s = cmd_train(two, ds.manifest_path, dir / "run", {}, [&](const IterationRecord&) { ++logged; });
    CHECK(s.iterations == 2);
    CHECK(s.classes == 4);
    CHECK(logged == 2);
    CHECK(std::filesystem::exists(dir / "run" / "metrics.tsv"));
    CHECK(std::filesystem::exists(dir / "run" / "config.txt"));

    o.assignments.push_back("train.iterations=4");
    const TrainSummary r = cmd_train(resolve_config(o), ds.manifest_path, dir / "resumed", s.checkpoint);
    CHECK(r.iterations == 4);
    CHECK(read_checkpoint(r.checkpoint).iteration == 4);

    const auto e1 = cmd_eval(s.checkpoint, ds.manifest_path, {}, dir / "r1.tsv");
    const auto e2 = cmd_eval(s.checkpoint, ds.manifest_path, {.threads = 2}, dir / "r2.tsv");
    CHECK(e1.protocol == Protocol::Simple);
    CHECK(e1.probes == 4);
    CHECK(e1.gallery == 8);
    CHECK(testing::read_file(dir / "r1.tsv") == testing::read_file(dir / "r2.tsv"));

    const auto seq = dir / "data" / "sequences" / "s000-nm-01-000.jsonl";
    const auto files = cmd_inspect(s.checkpoint, seq, dir / "heat.csv", {});
    REQUIRE(files.size() == 1);
    CHECK(count_lines(testing::read_file(files[0])) == kNumJoints);
    const auto pair = cmd_inspect(s.checkpoint, seq, dir / "heat.csv", {.branch = "bone", .compare_unmasked = true});
    REQUIRE(pair.size() == 2);
    CHECK(pair[0].filename() == "heat_masked.csv");
    CHECK(pair[1].filename() == "heat_unmasked.csv");
    CHECK(testing::read_file(pair[0]) != testing::read_file(pair[1]));
    CHECK_THROWS_AS(cmd_inspect(s.checkpoint, seq, dir / "x.csv", {.branch = "wing"}), ConfigError);
}

}  // TEST_SUITE
