// SPDX-License-Identifier: Apache-2.0
#include "gpgait/tensor.hpp"

namespace gpgait {

FeatureTensor FeatureTensor::zeros(int batch, int frames, int channels, int joints) {
    FeatureTensor t;
    t.batch = batch;
    t.frames = frames;
    t.joints = joints;
    t.channels = channels;
    t.values = RowMatrix::Zero(static_cast<Eigen::Index>(batch) * frames * joints, channels);
    return t;
}

Parameter& ParameterStore::add(const std::string& name, int rows, int cols, bool trainable) {
    if (index_.count(name)) throw ShapeError("duplicate tensor name " + name);
    auto& p = params_.emplace_back();
    p.name = name;
    p.value = RowMatrix::Zero(rows, cols);
    p.grad = RowMatrix::Zero(rows, cols);
    p.trainable = trainable;
    index_[name] = &p;
    return p;
}

Parameter& ParameterStore::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ShapeError("no tensor named " + name);
    return *it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ShapeError("no tensor named " + name);
    return *it->second;
}

std::size_t ParameterStore::trainable_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        if (p.trainable) n += static_cast<std::size_t>(p.value.size());
    }
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) p.grad.setZero();
}

void fill_uniform(RowMatrix& m, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

}  // namespace gpgait
