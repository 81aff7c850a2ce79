#pragma once

#include "eventcast/error.hpp"
#include "eventcast/linalg.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace eventcast {

enum class Mode { Train, Eval };

template <class S> Vector<S> fuse(const Vector<S>& h_hist, const Vector<S>& h_sem) {
    if (h_hist.size() != h_sem.size())
        throw DimensionMismatch("cannot fuse vectors of size " + std::to_string(h_hist.size()) + " and " +
                            std::to_string(h_sem.size()));
    return h_hist + h_sem;
}

struct TowerShape {
    std::size_t width = 1024;
    std::size_t layers = 3;
    double dropout = 0.1;
    double leaky_slope = 0.01;
    double bn_momentum = 0.9; // weight kept on the old running statistic
    double bn_eps = 1e-5;
};

/// Stack of z <- LeakyReLU(BN(z + Dropout(W z))) layers.
template <class S> struct TowerParams {
    std::vector<Matrix<S>> weight; // [width x width]
    std::vector<Vector<S>> gamma, beta;
    std::vector<Vector<S>> running_mean, running_var;

    static TowerParams init(const TowerShape& s, Rng& rng) {
        TowerParams p;
        const auto w = static_cast<Eigen::Index>(s.width);
        for (std::size_t l = 0; l < s.layers; ++l) {
            Matrix<S> m(w, w);
            fill_uniform(m, 1.0 / std::sqrt(static_cast<double>(w)), rng);
            p.weight.push_back(std::move(m));
            p.gamma.push_back(Vector<S>::Ones(w));
            p.beta.push_back(Vector<S>::Zero(w));
            p.running_mean.push_back(Vector<S>::Zero(w));
            p.running_var.push_back(Vector<S>::Ones(w));
        }
        return p;
    }

    static TowerParams zeros_like(const TowerParams& o) {
        TowerParams p;
        for (std::size_t l = 0; l < o.layers(); ++l) {
            p.weight.push_back(Matrix<S>::Zero(o.weight[l].rows(), o.weight[l].cols()));
            p.gamma.push_back(Vector<S>::Zero(o.gamma[l].size()));
            p.beta.push_back(Vector<S>::Zero(o.beta[l].size()));
            p.running_mean.push_back(Vector<S>::Zero(o.running_mean[l].size()));
            p.running_var.push_back(Vector<S>::Zero(o.running_var[l].size()));
        }
        return p;
    }

    std::size_t layers() const { return weight.size(); }
};

template <class S> struct TowerTrace {
    struct Layer {
        Matrix<S> input;   // [N x width]
        Matrix<S> mask;    // dropout scale per entry, empty when dropout is off
        Matrix<S> xhat;    // normalized pre-activation
        Matrix<S> bn_out;  // gamma * xhat + beta
        Vector<S> inv_std;
        bool batch_stats = false;
    };
    std::vector<Layer> layers;
};

/// Runs a batch (one sample per row) through the tower. Train mode uses batch
/// statistics and updates the running ones; Eval mode uses running statistics
/// and disables dropout.
template <class S>
Matrix<S> tower_forward(const Matrix<S>& x, TowerParams<S>& p, const TowerShape& s, Mode mode, Rng& rng,
                        TowerTrace<S>* trace = nullptr) {
    const bool train = mode == Mode::Train;
    if (trace) trace->layers.assign(p.layers(), {});
    if (train && x.rows() < 2) throw ShapeMismatch("batch-norm statistics need at least two rows in train mode");
    Matrix<S> z = x;
    std::bernoulli_distribution keep(1.0 - s.dropout);
    const S keep_scale = s.dropout < 1.0 ? S(1.0 / (1.0 - s.dropout)) : S(0);
    for (std::size_t l = 0; l < p.layers(); ++l) {
        if (z.cols() != p.weight[l].cols())
            throw ShapeMismatch("tower input width " + std::to_string(z.cols()) + " != " +
                                std::to_string(p.weight[l].cols()));
        Matrix<S> u = z * p.weight[l].transpose();
        Matrix<S> mask;
        if (train && s.dropout > 0.0) {
            mask.resize(u.rows(), u.cols());
            for (Eigen::Index j = 0; j < mask.cols(); ++j)
                for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(rng) ? keep_scale : S(0);
            u = u.cwiseProduct(mask);
        }
        u += z;

        Vector<S> mean, var;
        if (train) {
            mean = u.colwise().mean().transpose();
            var = (u.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
            const S m = static_cast<S>(s.bn_momentum);
            p.running_mean[l] = m * p.running_mean[l] + (S(1) - m) * mean;
            p.running_var[l] = m * p.running_var[l] + (S(1) - m) * var;
        } else {
            mean = p.running_mean[l];
            var = p.running_var[l];
        }
        Vector<S> inv_std = (var.array() + static_cast<S>(s.bn_eps)).rsqrt().matrix();
        Matrix<S> xhat = ((u.rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose().array()).matrix();
        Matrix<S> bn = ((xhat.array().rowwise() * p.gamma[l].transpose().array()).rowwise() +
                        p.beta[l].transpose().array())
                           .matrix();
        const S slope = static_cast<S>(s.leaky_slope);
        Matrix<S> next = bn.unaryExpr([slope](S v) { return v > S(0) ? v : slope * v; });
        if (trace) {
            auto& t = trace->layers[l];
            t.input = std::move(z);
            t.mask = std::move(mask);
            t.xhat = std::move(xhat);
            t.bn_out = std::move(bn);
            t.inv_std = std::move(inv_std);
            t.batch_stats = train;
        }
        z = std::move(next);
    }
    return z;
}

/// Single-sample inference through the tower with running statistics.
template <class S> Vector<S> tower_forward(const Vector<S>& x, TowerParams<S>& p, const TowerShape& s) {
    Rng unused(0);
    Matrix<S> row = x.transpose();
    return tower_forward<S>(row, p, s, Mode::Eval, unused).row(0).transpose();
}

/// Accumulates gradients of the trainable tower parameters and returns
/// d(loss)/d(input).
template <class S>
Matrix<S> tower_backward(const TowerTrace<S>& trace, const TowerParams<S>& p, const TowerShape& s,
                         const Matrix<S>& d_out, TowerParams<S>& g) {
    Matrix<S> dz = d_out;
    const S slope = static_cast<S>(s.leaky_slope);
    for (std::size_t li = p.layers(); li-- > 0;) {
        const auto& t = trace.layers[li];
        Matrix<S> d_bn = dz.cwiseProduct(t.bn_out.unaryExpr([slope](S v) { return v > S(0) ? S(1) : slope; }));
        g.gamma[li] += d_bn.cwiseProduct(t.xhat).colwise().sum().transpose();
        g.beta[li] += d_bn.colwise().sum().transpose();
        Matrix<S> d_xhat = (d_bn.array().rowwise() * p.gamma[li].transpose().array()).matrix();
        Matrix<S> d_u;
        if (t.batch_stats) {
            const S n = static_cast<S>(d_xhat.rows());
            Eigen::Array<S, 1, Eigen::Dynamic> sum_d = d_xhat.colwise().sum().array();
            Eigen::Array<S, 1, Eigen::Dynamic> sum_dx = d_xhat.cwiseProduct(t.xhat).colwise().sum().array();
            Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic> inner =
                (d_xhat.array() * n).rowwise() - sum_d;
            inner -= t.xhat.array().rowwise() * sum_dx;
            d_u = ((inner.rowwise() * t.inv_std.transpose().array()) / n).matrix();
        } else {
            d_u = (d_xhat.array().rowwise() * t.inv_std.transpose().array()).matrix();
        }
        Matrix<S> d_m = t.mask.size() ? Matrix<S>(d_u.cwiseProduct(t.mask)) : d_u;
        g.weight[li].noalias() += d_m.transpose() * t.input;
        dz = d_u + d_m * p.weight[li];
    }
    return dz;
}

/// Linear heads: the trend head emits all horizons from one tower output;
/// the event head emits one unit per horizon, read at that horizon's row.
template <class S> struct HeadParams {
    Matrix<S> w_trend, w_event; // [H x width]
    Vector<S> b_trend, b_event;

    static HeadParams init(std::size_t horizons, std::size_t width, Rng& rng) {
        HeadParams p;
        const auto h = static_cast<Eigen::Index>(horizons), w = static_cast<Eigen::Index>(width);
        const double bound = 1.0 / std::sqrt(static_cast<double>(width));
        p.w_trend.resize(h, w);
        p.w_event.resize(h, w);
        fill_uniform(p.w_trend, bound, rng);
        fill_uniform(p.w_event, bound, rng);
        p.b_trend = Vector<S>::Zero(h);
        p.b_event = Vector<S>::Zero(h);
        return p;
    }

    static HeadParams zeros_like(const HeadParams& o) {
        HeadParams p;
        p.w_trend = Matrix<S>::Zero(o.w_trend.rows(), o.w_trend.cols());
        p.w_event = Matrix<S>::Zero(o.w_event.rows(), o.w_event.cols());
        p.b_trend = Vector<S>::Zero(o.b_trend.size());
        p.b_event = Vector<S>::Zero(o.b_event.size());
        return p;
    }

    std::size_t horizons() const { return static_cast<std::size_t>(w_trend.rows()); }
};

template <class S> S blend(S lambda, S trend, S event) { return lambda * trend + (S(1) - lambda) * event; }

} // namespace eventcast
