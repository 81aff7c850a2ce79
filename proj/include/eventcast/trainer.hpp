#pragma once

#include "eventcast/error.hpp"
#include "eventcast/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace eventcast {

/// Mean of squared differences.
template <class S> S l2_loss(const Vector<S>& pred, const Vector<S>& target) {
    if (pred.size() != target.size())
        throw LengthMismatch(static_cast<std::size_t>(pred.size()), static_cast<std::size_t>(target.size()));
    if (pred.size() == 0) throw EmptyInput("l2_loss of empty vectors");
    return (pred - target).squaredNorm() / static_cast<S>(pred.size());
}

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 5.0;
    double lambda = 0.4;
    std::uint64_t seed = 7;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, epochs, batch_size, lr, beta1, beta2, adam_eps,
                                                clip_norm, lambda, seed)

/// Sum over horizons of the batch-mean squared error, and its gradient with
/// respect to the predictions.
template <class S> S horizon_loss(const Matrix<S>& pred, const Matrix<S>& target, Matrix<S>* grad = nullptr) {
    const S n = static_cast<S>(pred.rows());
    Matrix<S> diff = pred - target;
    if (grad) *grad = diff * (S(2) / n);
    S loss = 0;
    for (Eigen::Index j = 0; j < pred.cols(); ++j) loss += l2_loss<S>(pred.col(j), target.col(j));
    return loss;
}

template <class S> class Adam {
public:
    explicit Adam(const TrainConfig& cfg) : cfg_(cfg) {}

    void step(std::vector<ParamRef<S>>& params, const std::vector<ParamRef<S>>& grads) {
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
                v_.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
            }
        }
        ++t_;
        const double b1 = cfg_.beta1, b2 = cfg_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& m = m_[i];
            auto& v = v_[i];
            for (Eigen::Index j = 0; j < params[i].size(); ++j) {
                const double g = static_cast<double>(grads[i].data[j]);
                auto k = static_cast<std::size_t>(j);
                m[k] = b1 * m[k] + (1.0 - b1) * g;
                v[k] = b2 * v[k] + (1.0 - b2) * g * g;
                const double update = cfg_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.adam_eps);
                params[i].data[j] = static_cast<S>(static_cast<double>(params[i].data[j]) - update);
            }
        }
    }

    std::size_t steps() const { return t_; }

private:
    TrainConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

/// Rescales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <class S> double clip_global_norm(std::vector<ParamRef<S>>& grads, double max_norm) {
    double sq = 0;
    for (const auto& g : grads)
        for (Eigen::Index j = 0; j < g.size(); ++j) sq += static_cast<double>(g.data[j]) * g.data[j];
    const double norm = std::sqrt(sq);
    if (max_norm > 0 && norm > max_norm) {
        const S scale = static_cast<S>(max_norm / norm);
        for (auto& g : grads)
            for (Eigen::Index j = 0; j < g.size(); ++j) g.data[j] *= scale;
    }
    return norm;
}

struct TrainResult {
    std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Mini-batch training with a seeded shuffle. The last partial batch is kept
/// unless it has a single row, which batch statistics cannot handle.
template <class S>
TrainResult train(ModelParams<S>& params, const ModelConfig& mc, const TrainConfig& tc,
                  std::span<const Example<S>> data, const EpochCallback& on_epoch = {}) {
    if (data.size() < 2) throw InsufficientData("training needs at least two examples");
    if (tc.batch_size < 2) throw DataError("batch_size must be at least 2");
    Rng rng(tc.seed);
    Adam<S> opt(tc);
    ModelParams<S> grads = ModelParams<S>::zeros_like(params);
    auto prefs = params.trainable_refs();
    auto grefs = grads.trainable_refs();
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const S lambda = static_cast<S>(tc.lambda);
    const auto H = static_cast<Eigen::Index>(mc.horizons);

    TrainResult result;
    std::vector<Example<S>> batch;
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0;
        std::size_t seen = 0, batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + tc.batch_size);
            if (end - start < 2) break;
            batch.clear();
            Matrix<S> target(static_cast<Eigen::Index>(end - start), H);
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(data[order[i]]);
                target.row(static_cast<Eigen::Index>(i - start)) = data[order[i]].target.transpose();
            }
            for (auto& g : grefs) std::fill(g.data, g.data + g.size(), S(0));
            ForwardCache<S> cache;
            auto out = forward_batch<S>(params, mc, batch, lambda, Mode::Train, rng, &cache);
            Matrix<S> d_pred;
            const S loss = horizon_loss<S>(out.blended, target, &d_pred);
            if (!std::isfinite(static_cast<double>(loss))) throw NonFiniteLoss(epoch, batch_index);
            backward_batch<S>(params, mc, cache, d_pred, lambda, grads);
            clip_global_norm(grefs, tc.clip_norm);
            opt.step(prefs, grefs);
            total += static_cast<double>(loss) * static_cast<double>(end - start);
            seen += end - start;
        }
        const double epoch_loss = total / static_cast<double>(seen);
        result.epoch_loss.push_back(epoch_loss);
        if (on_epoch) on_epoch(epoch, epoch_loss);
    }
    return result;
}

} // namespace eventcast
