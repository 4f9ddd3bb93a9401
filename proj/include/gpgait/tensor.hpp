// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpgait/common.hpp"

namespace gpgait {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

enum class Mode { Train, Eval };

/// N x T x V x C activations stored as a (N*T*V) x C row-major matrix, so the
/// V rows of one frame form a contiguous block.
struct FeatureTensor {
    int batch = 0;
    int frames = 0;
    int joints = kNumJoints;
    int channels = 0;
    RowMatrix values;

    static FeatureTensor zeros(int batch, int frames, int channels, int joints = kNumJoints);

    int row(int n, int t, int v = 0) const { return (n * frames + t) * joints + v; }
    double& at(int n, int t, int v, int c) { return values(row(n, t, v), c); }
    double at(int n, int t, int v, int c) const { return values(row(n, t, v), c); }
    auto frame(int n, int t) { return values.middleRows(row(n, t), joints); }
    auto frame(int n, int t) const { return values.middleRows(row(n, t), joints); }
    bool same_shape(const FeatureTensor& o) const {
        return batch == o.batch && frames == o.frames && joints == o.joints && channels == o.channels;
    }
};

struct Parameter {
    std::string name;
    RowMatrix value;
    RowMatrix grad;
    bool trainable = true;
};

/// Owns every tensor of a model. Addresses are stable for the store's lifetime.
class ParameterStore {
public:
    ParameterStore() = default;
    ParameterStore(const ParameterStore&) = delete;
    ParameterStore& operator=(const ParameterStore&) = delete;

    Parameter& add(const std::string& name, int rows, int cols, bool trainable = true);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::deque<Parameter>& all() { return params_; }
    const std::deque<Parameter>& all() const { return params_; }
    std::size_t trainable_count() const;

    void zero_grad();

private:
    std::deque<Parameter> params_;
    std::map<std::string, Parameter*> index_;
};

void fill_uniform(RowMatrix& m, double bound, Rng& rng);

}  // namespace gpgait
