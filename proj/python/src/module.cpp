// SPDX-License-Identifier: Apache-2.0
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gpgait/cli.hpp"
#include "gpgait/hod.hpp"
#include "gpgait/hot.hpp"
#include "gpgait/train.hpp"

namespace py = pybind11;
using namespace gpgait;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

PoseSequence sequence_from_array(const Array& a) {
    if (a.ndim() != 3 || a.shape(1) != kNumJoints || (a.shape(2) != 2 && a.shape(2) != 3))
        throw ShapeError("expected a (T, 17, 2) or (T, 17, 3) array");
    const auto r = a.unchecked<3>();
    PoseSequence seq;
    seq.seq_id = "array";
    for (py::ssize_t t = 0; t < a.shape(0); ++t) {
        PoseFrame f;
        for (int j = 0; j < kNumJoints; ++j) f[j] = {r(t, j, 0), r(t, j, 1), a.shape(2) == 3 ? r(t, j, 2) : 1.0};
        seq.frames.push_back(f);
    }
    return seq;
}

Coords coords_from_array(const Array& a) {
    if (a.ndim() != 2 || a.shape(0) != kNumJoints || a.shape(1) < 2) throw ShapeError("expected a (17, 2) array");
    const auto r = a.unchecked<2>();
    Coords c;
    for (int j = 0; j < kNumJoints; ++j) c[j] = {r(j, 0), r(j, 1)};
    return c;
}

Array frames_to_array(const std::vector<Coords>& frames) {
    Array out({static_cast<py::ssize_t>(frames.size()), static_cast<py::ssize_t>(kNumJoints), py::ssize_t{2}});
    auto w = out.mutable_unchecked<3>();
    for (std::size_t t = 0; t < frames.size(); ++t)
        for (int j = 0; j < kNumJoints; ++j) {
            w(t, j, 0) = frames[t][j].x;
            w(t, j, 1) = frames[t][j].y;
        }
    return out;
}

Array channels_to_array(const std::vector<double>& v, std::size_t frames, int channels) {
    Array out({static_cast<py::ssize_t>(frames), static_cast<py::ssize_t>(kNumJoints), static_cast<py::ssize_t>(channels)});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_gpgait, m) {
    m.doc() = "Pose-based gait recognition core";

    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", error);
    py::register_exception<DataError>(m, "DataError", error);
    py::register_exception<ShapeError>(m, "ShapeError", error);
    py::register_exception<NumericError>(m, "NumericError", error);

    m.attr("NUM_JOINTS") = kNumJoints;

    m.def(
        "apply_hot",
        [](const Array& frames, double h_unif, double phi) {
            HotConfig cfg;
            cfg.h_unif = h_unif;
            cfg.phi = phi;
            cfg.epsilon_extent = 1e-6 * h_unif;
            const UnifiedPoseSequence u = apply_hot(sequence_from_array(frames), cfg);
            return py::make_tuple(frames_to_array(u.frames), u.kept_frame_indices);
        },
        py::arg("frames"), py::arg("h_unif") = 225.0, py::arg("phi") = 0.1,
        "Unify a (T, 17, 2|3) pose array. Returns (unified frames, kept frame indices).");

    m.def(
        "descriptors",
        [](const Array& unified) {
            std::vector<Coords> frames;
            const PoseSequence seq = sequence_from_array(unified);
            for (const auto& f : seq.frames) frames.push_back(coords_of(f));
            const DescriptorSet d = build_descriptors(frames, SkeletonTopology::coco17());
            py::dict out;
            out["joint"] = channels_to_array(d.joint, d.frames, 2);
            out["angle"] = channels_to_array(d.angle, d.frames, 1);
            out["bone"] = channels_to_array(d.bone, d.frames, 2);
            return out;
        },
        py::arg("unified"), "Joint, angle and bone descriptors of unified frames, each (T, 17, C).");

    m.def(
        "joint_angles", [](const Array& frame) { return compute_angles(coords_from_array(frame), default_angle_roles()); },
        py::arg("frame"));

    m.def(
        "partition_mask", [](const std::string& scheme) -> RowMatrix { return build_partition_mask(scheme_by_name(scheme)); },
        py::arg("scheme"));

    m.def(
        "triplet_loss",
        [](const RowMatrix& features, const std::vector<int>& labels, double margin) {
            return triplet_loss(features, labels, margin).loss;
        },
        py::arg("features"), py::arg("labels"), py::arg("margin") = 0.2);
    m.def(
        "cross_entropy_loss",
        [](const RowMatrix& logits, const std::vector<int>& labels) { return cross_entropy_loss(logits, labels).loss; },
        py::arg("logits"), py::arg("labels"));
    m.def(
        "one_cycle_lr",
        [](std::int64_t it, std::int64_t total, double lo, double hi, double fin) {
            return one_cycle_lr(it, total, lo, hi, fin);
        },
        py::arg("iteration"), py::arg("total"), py::arg("lr_init") = 1e-5, py::arg("lr_max") = 1e-3,
        py::arg("lr_final") = 1e-8);

    m.def(
        "pairwise_distances",
        [](const RowMatrix& probe, const RowMatrix& gallery, const std::string& metric) -> RowMatrix {
            std::vector<Eigen::VectorXd> p, g;
            for (Eigen::Index i = 0; i < probe.rows(); ++i) p.push_back(probe.row(i).transpose());
            for (Eigen::Index i = 0; i < gallery.rows(); ++i) g.push_back(gallery.row(i).transpose());
            return pairwise_distances(p, g, parse_distance_metric(metric));
        },
        py::arg("probe"), py::arg("gallery"), py::arg("metric") = "euclidean");
    m.def("rank1", &rank1_simple, py::arg("distances"), py::arg("probe_labels"), py::arg("gallery_labels"));

    m.def(
        "synth",
        [](const std::filesystem::path& out, int identities, int sequences, int frames, std::uint64_t seed) {
            SynthOptions o;
            o.identities = identities;
            o.sequences_per_identity = sequences;
            o.frames = frames;
            o.seed = seed;
            return cmd_synth(o, out).manifest_path;
        },
        py::arg("out"), py::arg("identities") = 20, py::arg("sequences") = 6, py::arg("frames") = 60,
        py::arg("seed") = 7, "Writes a synthetic dataset and returns its manifest path.");

    m.def(
        "train",
        [](const std::filesystem::path& manifest, const std::filesystem::path& out, const std::string& preset,
           const std::vector<std::string>& assignments, std::uint64_t seed, bool use_hot) {
            ConfigOverrides o;
            o.preset = preset;
            o.assignments = assignments;
            o.seed = seed;
            o.threads = 1;
            o.no_hot = !use_hot;
            const RunConfig cfg = resolve_config(o);
            py::gil_scoped_release release;
            return cmd_train(cfg, manifest, out).checkpoint;
        },
        py::arg("manifest"), py::arg("out"), py::arg("preset") = "toy", py::arg("set") = std::vector<std::string>{},
        py::arg("seed") = 0, py::arg("hot") = true, "Trains and returns the checkpoint path.");

    m.def(
        "evaluate",
        [](const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
           const std::filesystem::path& results) {
            EvalReport r;
            {
                py::gil_scoped_release release;
                r = cmd_eval(checkpoint, manifest, {}, results);
            }
            py::dict out;
            out["protocol"] = std::string(to_string(r.protocol));
            out["rank1"] = r.rank1;
            out["probes"] = r.probes;
            out["gallery"] = r.gallery;
            return out;
        },
        py::arg("checkpoint"), py::arg("manifest"), py::arg("results") = std::filesystem::path{});
}
