// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <set>

#include "gpgait/checkpoint.hpp"
#include "gpgait/synth.hpp"
#include "gpgait/train.hpp"
#include "helpers.hpp"

using namespace gpgait;

namespace {

TrainSet toy_train_set(int identities, int per_identity, int frames) {
    std::vector<UnifiedPoseSequence> seqs;
    const auto ids = sample_identities(identities, 17);
    for (const auto& id : ids) {
        for (int k = 0; k < per_identity; ++k) {
            PoseSequence s = generate_sequence(id, CameraSpec{}, frames, 100 + k);
            s.seq_id = s.subject + "-nm-0" + std::to_string(k + 1) + "-000";
            seqs.push_back(apply_hot(s, HotConfig{}));
        }
    }
    return make_train_set(std::move(seqs));
}

NetworkConfig tiny_net(int classes) {
    NetworkConfig c;
    c.parts5_channels = {4};
    c.larger_schemes = {"global"};
    c.larger_channels = 4;
    c.embed_dim = 4;
    c.num_classes = classes;
    return c;
}

TrainConfig tiny_train(std::int64_t iterations) {
    TrainConfig t;
    t.subjects_per_batch = 2;
    t.samples_per_subject = 2;
    t.seq_len = 4;
    t.iterations = iterations;
    t.checkpoint_every = 5;
    t.log_every = 2;
    t.seed = 9;
    return t;
}

// Exhaustive triplet oracle: every (positive, negative) pair for every anchor.
double brute_triplet(const RowMatrix& f, const std::vector<int>& labels, double margin) {
    const int n = static_cast<int>(f.rows());
    double sum = 0.0;
    int anchors = 0;
    for (int a = 0; a < n; ++a) {
        double worst = -1.0;
        bool any = false;
        for (int p = 0; p < n; ++p) {
            if (p == a || labels[p] != labels[a]) continue;
            for (int q = 0; q < n; ++q) {
                if (labels[q] == labels[a]) continue;
                any = true;
                double dap = 0.0, daq = 0.0;
                for (int k = 0; k < f.cols(); ++k) {
                    dap += (f(a, k) - f(p, k)) * (f(a, k) - f(p, k));
                    daq += (f(a, k) - f(q, k)) * (f(a, k) - f(q, k));
                }
                worst = std::max(worst, std::max(0.0, std::sqrt(dap) - std::sqrt(daq) + margin));
            }
        }
        if (any) {
            sum += worst;
            ++anchors;
        }
    }
    return anchors ? sum / anchors : 0.0;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("batch sampling") {
    const TrainSet set = toy_train_set(3, 2, 6);
    Rng rng(1);
    const Batch b = sample_batch(set, 2, 2, 4, rng);
    CHECK(b.clips.size() == 4);
    for (const auto& c : b.clips) CHECK(c.size() == 4);
    CHECK(std::set<int>(b.labels.begin(), b.labels.end()).size() == 2);
    CHECK(b.labels[0] == b.labels[1]);
    CHECK(b.labels[2] == b.labels[3]);

    SUBCASE("short sequences repeat frames") {
        const TrainSet shorter = toy_train_set(2, 2, 2);
        Rng r2(2);
        const Batch s = sample_batch(shorter, 2, 2, 4, r2);
        for (const auto& idx : s.frame_indices) CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() < 4);
    }
    SUBCASE("same seed, same batch") {
        Rng a(5), c(5);
        CHECK(sample_batch(set, 2, 2, 4, a).frame_indices == sample_batch(set, 2, 2, 4, c).frame_indices);
    }
    SUBCASE("too few subjects") {
        Rng r3(3);
        CHECK_THROWS_AS(sample_batch(set, 4, 2, 4, r3), DataError);
    }
}

TEST_CASE("augmentation") {
    const TrainSet set = toy_train_set(1, 1, 3);
    const std::vector<Coords> clip = set.sequences[0].frames;
    Rng rng(4);
    SUBCASE("flip") {
        auto c = clip;
        CHECK_FALSE(augment_flip(c, 0.0, rng));
        CHECK(c == clip);
        CHECK(augment_flip(c, 1.0, rng));
        CHECK(c != clip);
        augment_flip(c, 1.0, rng);
        CHECK(c == clip);
        const Coords f = flip_pose(clip[0]);
        const Point2 neck = midpoint(f[5], f[6]);
        CHECK(neck.x == 0.0);
        CHECK(neck.y == 0.0);
        double lo = 1e300, hi = -1e300;
        for (const auto& p : f) {
            lo = std::min(lo, p.y);
            hi = std::max(hi, p.y);
        }
        CHECK(hi - lo == doctest::Approx(225.0).epsilon(1e-12));
    }
    SUBCASE("noise") {
        auto c = clip;
        augment_noise(c, 0.0, 2.0, rng);
        CHECK(c == clip);
        augment_noise(c, 1.0, 0.0, rng);
        CHECK(c == clip);
        auto a = clip, b = clip;
        Rng r1(8), r2(8);
        augment_noise(a, 0.3, 2.0, r1);
        augment_noise(b, 0.3, 2.0, r2);
        CHECK(a == b);
        CHECK(a != clip);
    }
}

TEST_CASE("triplet loss") {
    SUBCASE("inactive hinge") {
        RowMatrix f(3, 1);
        f << 0.0, 1.0, 3.0;
        // anchor 0: d+ = 1, d- = 3; anchor 1: d+ = 1, d- = 2; anchor 2 has no positive
        const auto t = triplet_loss(f, {0, 0, 1}, 0.2);
        CHECK(t.valid_anchors == 2);
        CHECK(t.active_anchors == 0);
        CHECK(t.loss == 0.0);
    }
    SUBCASE("hand values") {
        RowMatrix f(3, 1);
        f << 0.0, 2.0, 1.0;
        // anchor 0: d+ = 2, d- = 1 -> 1.2; anchor 1: d+ = 2, d- = 1 -> 1.2;
        // anchor 2: no positive
        const auto t = triplet_loss(f, {0, 0, 1}, 0.2);
        CHECK(t.valid_anchors == 2);
        CHECK(t.loss == doctest::Approx(1.2).epsilon(1e-12));
    }
    SUBCASE("random batches against the exhaustive oracle") {
        Rng rng(7);
        std::uniform_int_distribution<int> label(0, 1);
        for (int trial = 0; trial < 20; ++trial) {
            RowMatrix f(8, 5);
            fill_uniform(f, 1.0, rng);
            std::vector<int> labels(8);
            for (auto& l : labels) l = label(rng);
            CHECK(std::abs(triplet_loss(f, labels, 0.2).loss - brute_triplet(f, labels, 0.2)) < 1e-12);
        }
    }
}

TEST_CASE("cross entropy") {
    RowMatrix z = RowMatrix::Zero(1, 2);
    CHECK(cross_entropy_loss(z, {0}).loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    RowMatrix big(1, 2);
    big << 1000.0, -1000.0;
    CHECK(cross_entropy_loss(big, {0}).loss < 1e-12);
    CHECK_THROWS_AS(cross_entropy_loss(z, {2}), DataError);

    Rng rng(8);
    RowMatrix l(4, 3);
    fill_uniform(l, 3.0, rng);
    const std::vector<int> y{0, 2, 1, 2};
    double ref = 0.0;
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += std::exp(l(i, k));
        ref += -std::log(std::exp(l(i, y[i])) / s);
    }
    CHECK(std::abs(cross_entropy_loss(l, y).loss - ref / 4) < 1e-9);
}

TEST_CASE("combined loss") {
    const std::vector<double> t{0.5, 1.0, 1.5};
    const std::vector<double> c{2.0, 2.0, 2.0};
    CHECK(combined_loss(t, c, 0.0) == doctest::Approx(1.0));
    CHECK(combined_loss({0.7, 0.7}, {0.7, 0.7}, 1.0) == doctest::Approx(1.4));
    Rng rng(9);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::vector<double> a(18), b(18);
    double hand = 0.0;
    for (int s = 0; s < 18; ++s) {
        a[s] = u(rng);
        b[s] = u(rng);
        hand += a[s] + 0.5 * b[s];
    }
    CHECK(std::abs(combined_loss(a, b, 0.5) - hand / 18) < 1e-12);
}

TEST_CASE("adam") {
    ParameterStore store;
    Parameter& p = store.add("w", 1, 1);
    AdamState st;
    p.grad(0, 0) = 1.0;
    adam_step(store, st, 1e-3);
    CHECK(p.value(0, 0) == doctest::Approx(-1e-3).epsilon(1e-6));

    SUBCASE("zero gradient") {
        const double before = p.value(0, 0);
        ParameterStore fresh;
        Parameter& q = fresh.add("q", 1, 1);
        q.value(0, 0) = before;
        AdamState s2;
        adam_step(fresh, s2, 1e-3);
        CHECK(q.value(0, 0) == before);
        CHECK(s2.step == 1);
    }
    SUBCASE("two-step recurrence") {
        ParameterStore s;
        Parameter& q = s.add("q", 1, 1);
        q.value(0, 0) = 0.4;
        AdamState a;
        const double g = 0.3, lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
        double m = 0, v = 0, x = 0.4;
        for (int t = 1; t <= 2; ++t) {
            q.grad(0, 0) = g;
            adam_step(s, a, lr, b1, b2, eps);
            m = b1 * m + (1 - b1) * g;
            v = b2 * v + (1 - b2) * g * g;
            x -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
        }
        CHECK(std::abs(q.value(0, 0) - x) < 1e-12);
    }
    SUBCASE("non-finite gradient names the tensor") {
        p.grad(0, 0) = std::nan("");
        try {
            adam_step(store, st, 1e-3);
            FAIL("expected NumericError");
        } catch (const NumericError& e) {
            CHECK(std::string(e.what()).find("w") != std::string::npos);
        }
    }
}

TEST_CASE("one-cycle schedule endpoints") {
    const std::int64_t total = 40000;
    CHECK(one_cycle_lr(0, total, 1e-5, 1e-3, 1e-8) == 1e-5);
    CHECK(one_cycle_lr(12000, total, 1e-5, 1e-3, 1e-8) == 1e-3);
    CHECK(one_cycle_lr(total - 1, total, 1e-5, 1e-3, 1e-8) == 1e-8);
    CHECK(one_cycle_lr(36000, total, 1e-5, 1e-3, 1e-8) == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK_THROWS(one_cycle_lr(total, total, 1e-5, 1e-3, 1e-8));
}

TEST_CASE("training loop smoke and determinism") {
    testing::TempDir dir;
    const TrainSet set = toy_train_set(3, 3, 8);
    const TrainConfig cfg = tiny_train(10);

    Network net(tiny_net(set.num_classes()), 1);
    AdamState adam;
    std::vector<double> losses;
    TrainOutputs out{dir / "ckpt.gpgw", dir / "metrics.tsv", "cfg", [&](const IterationRecord& r) {
                         losses.push_back(r.loss);
                     }};
    train_loop(net, adam, set, cfg, out);
    CHECK(adam.step == 10);
    for (double l : losses) CHECK(std::isfinite(l));
    const Checkpoint ck = read_checkpoint(dir / "ckpt.gpgw");
    CHECK(ck.iteration == 10);
    Network loaded(tiny_net(set.num_classes()), 99);
    restore_checkpoint(ck, loaded, nullptr);
    for (const auto& p : net.params().all()) {
        // f32 storage: values round-trip through float
        CHECK(loaded.params().get(p.name).value == p.value.cast<float>().cast<double>());
    }
    CHECK(testing::read_file(dir / "metrics.tsv").rfind("iteration\tlr\tloss\ttriplet\tce\tactive_fraction\n", 0) == 0);

    SUBCASE("five iterations twice are bit-identical") {
        auto run = [&] {
            Network n(tiny_net(set.num_classes()), 1);
            AdamState a;
            train_loop(n, a, set, tiny_train(5), {});
            std::vector<RowMatrix> values;
            for (const auto& p : n.params().all()) values.push_back(p.value);
            return values;
        };
        CHECK(run() == run());
    }
    SUBCASE("resume continues the iteration counter") {
        Network n(tiny_net(set.num_classes()), 1);
        AdamState a;
        TrainConfig full = tiny_train(10);
        full.checkpoint_every = 5;
        std::int64_t seen = -1;
        TrainOutputs o{dir / "r.gpgw", dir / "r.tsv", "cfg", [&](const IterationRecord& r) { seen = r.iteration; }};
        for (std::int64_t it = 0; it < 5; ++it) train_step(n, a, set, full, it);
        write_checkpoint(dir / "r.gpgw", make_checkpoint(n, a, 5, "cfg"));
        Network m(tiny_net(set.num_classes()), 1);
        AdamState b;
        restore_checkpoint(read_checkpoint(dir / "r.gpgw"), m, &b);
        CHECK(b.step == 5);
        train_loop(m, b, set, full, o);
        CHECK(b.step == 10);
        CHECK(seen == 9);
    }
}

}  // TEST_SUITE
