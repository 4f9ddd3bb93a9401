// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "gpgait/hot.hpp"
#include "gpgait/synth.hpp"
#include "helpers.hpp"

using namespace gpgait;

TEST_SUITE("synth") {

TEST_CASE("identities respect the spacing rule") {
    const auto ids = sample_identities(12, 5, 0.05);
    REQUIRE(ids.size() == 12);
    for (std::size_t a = 0; a < ids.size(); ++a)
        for (std::size_t b = a + 1; b < ids.size(); ++b) {
            const auto ra = ids[a].ratios(), rb = ids[b].ratios();
            double widest = 0.0;
            for (std::size_t k = 0; k < ra.size(); ++k) widest = std::max(widest, std::abs(ra[k] - rb[k]) / ra[k]);
            CHECK(widest >= 0.05);
        }
}

TEST_CASE("datasets are deterministic") {
    testing::TempDir a, b;
    SynthOptions o;
    o.identities = 20;
    o.sequences_per_identity = 6;
    o.frames = 8;
    const SynthDataset da = generate_dataset(o, a.path());
    generate_dataset(o, b.path());
    REQUIRE(da.manifest.entries.size() == 120);
    int probes = 0;
    for (const auto& e : da.manifest.entries) {
        probes += e.role == Role::Probe;
        CHECK(testing::read_file(a.path() / e.path) == testing::read_file(b.path() / e.path));
    }
    CHECK(probes == 20);
    CHECK(testing::read_file(a / "manifest.tsv") == testing::read_file(b / "manifest.tsv"));
    const auto seqs = load_sequences(read_manifest(da.manifest_path));
    REQUIRE(seqs.size() == 120);
    CHECK(seqs[0].frames.size() == 8);
}

TEST_CASE("train identities and casiab layout") {
    testing::TempDir dir;
    SynthOptions o;
    o.identities = 2;
    o.train_identities = 1;
    o.train_sequences_per_identity = 3;
    o.frames = 4;
    o.layout = SynthLayout::CasiaB;
    const SynthDataset ds = generate_dataset(o, dir.path());
    CHECK(ds.manifest.protocol == Protocol::CasiaB);
    CHECK(ds.manifest.entries.size() == 2 * 2 * 10 + 3);
    int train = 0;
    for (const auto& e : ds.manifest.entries) train += e.role == Role::Train;
    CHECK(train == 3);
    CHECK_THROWS_AS(generate_dataset(SynthOptions{.identities = 1}, dir.path()), ConfigError);
}

TEST_CASE("camera scale disappears after unification") {
    const auto ids = sample_identities(1, 9);
    CameraSpec small{.scale = 1.0, .translation = {10, -4}, .slant = 0.0, .jitter = 0.0};
    CameraSpec large{.scale = 3.0, .translation = {-50, 80}, .slant = 0.0, .jitter = 0.0};
    const auto ua = apply_hot(generate_sequence(ids[0], small, 20, 3), HotConfig{});
    const auto ub = apply_hot(generate_sequence(ids[0], large, 20, 3), HotConfig{});
    REQUIRE(ua.frames.size() == ub.frames.size());
    double worst = 0.0;
    for (std::size_t t = 0; t < ua.frames.size(); ++t)
        for (int j = 0; j < kNumJoints; ++j)
            worst = std::max({worst, std::abs(ua.frames[t][j].x - ub.frames[t][j].x),
                              std::abs(ua.frames[t][j].y - ub.frames[t][j].y)});
    CHECK(worst <= 1e-9 * 225.0);
}

}  // TEST_SUITE
