#pragma once

#include "eventcast/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace eventcast {

template <class S> using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S> using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S> void fill_uniform(Matrix<S>& m, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<S>(dist(rng));
}

template <class S> void fill_uniform(Vector<S>& v, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = static_cast<S>(dist(rng));
}

/// Flat view of one parameter tensor, used by optimizers, checkpoints and
/// gradient checks. Storage is Eigen's column-major order.
template <class S> struct ParamRef {
    std::string name;
    S* data = nullptr;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;

    Eigen::Index size() const { return rows * cols; }
};

template <class S> ParamRef<S> make_ref(std::string name, Matrix<S>& m) {
    return {std::move(name), m.data(), m.rows(), m.cols()};
}

template <class S> ParamRef<S> make_ref(std::string name, Vector<S>& v) {
    return {std::move(name), v.data(), v.rows(), 1};
}

} // namespace eventcast
