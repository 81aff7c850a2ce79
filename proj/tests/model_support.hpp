#pragma once

#include "eventcast/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <string>
#include <vector>

namespace ectest {

using namespace eventcast;

inline ModelConfig tiny_config() {
    ModelConfig c;
    c.lookback = 5;
    c.n_vars = 2;
    c.heads = 2;
    c.d_k = 3;
    c.d_m = 4;
    c.d_align = 6;
    c.layers = 2;
    c.horizons = 2;
    c.max_positions = 8;
    c.vocab_size = 7;
    c.dropout = 0.0;
    return c;
}

/// Random examples with stable token storage.
template <class S> struct ExampleSet {
    std::deque<TokenSeq> tokens;
    std::vector<Example<S>> examples;
};

template <class S> ExampleSet<S> random_examples(const ModelConfig& c, std::size_t n, std::uint64_t seed) {
    ExampleSet<S> set;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> tok(0, static_cast<int>(c.vocab_size) - 1);
    std::uniform_int_distribution<std::size_t> len(1, c.max_positions);
    for (std::size_t i = 0; i < n; ++i) {
        Example<S> ex;
        ex.window.x.resize(static_cast<Eigen::Index>(c.lookback), static_cast<Eigen::Index>(c.n_vars));
        for (Eigen::Index a = 0; a < ex.window.x.rows(); ++a)
            for (Eigen::Index b = 0; b < ex.window.x.cols(); ++b) ex.window.x(a, b) = static_cast<S>(g(rng));
        ex.window.target_index = c.target_index;
        ex.target.resize(static_cast<Eigen::Index>(c.horizons));
        for (std::size_t j = 0; j < c.horizons; ++j) {
            TokenSeq t(len(rng));
            for (auto& id : t) id = tok(rng);
            set.tokens.push_back(std::move(t));
            ex.future.push_back(&set.tokens.back());
            ex.target(static_cast<Eigen::Index>(j)) = static_cast<S>(g(rng));
        }
        set.examples.push_back(std::move(ex));
    }
    return set;
}

inline Matrix<double> targets_of(const std::vector<Example<double>>& ex) {
    Matrix<double> t(static_cast<Eigen::Index>(ex.size()), ex.front().target.size());
    for (std::size_t b = 0; b < ex.size(); ++b) t.row(static_cast<Eigen::Index>(b)) = ex[b].target.transpose();
    return t;
}

/// Loss of one batch with a fixed dropout stream.
inline double batch_loss(ModelParams<double>& p, const ModelConfig& c, const std::vector<Example<double>>& ex,
                         double lambda, Mode mode, std::uint64_t seed) {
    Rng rng(seed);
    auto out = forward_batch<double>(p, c, ex, lambda, mode, rng);
    return horizon_loss<double>(out.blended, targets_of(ex));
}

struct GradCheck {
    std::string worst_tensor;
    double worst_rel = 0; // ||fd - an|| / max(||fd||, ||an||), worst over tensors
    std::size_t tensors = 0;
};

/// Central differences for every trainable scalar against the analytic
/// gradient of the same batch.
inline GradCheck gradient_check(ModelParams<double> p, const ModelConfig& c, const std::vector<Example<double>>& ex,
                                double lambda, Mode mode, std::uint64_t seed, double step = 1e-6) {
    ModelParams<double> g = ModelParams<double>::zeros_like(p);
    {
        auto probe = p;
        Rng rng(seed);
        ForwardCache<double> cache;
        auto out = forward_batch<double>(probe, c, ex, lambda, mode, rng, &cache);
        Matrix<double> d;
        horizon_loss<double>(out.blended, targets_of(ex), &d);
        backward_batch<double>(probe, c, cache, d, lambda, g);
    }
    GradCheck res;
    auto prefs = p.trainable_refs();
    auto grefs = g.trainable_refs();
    for (std::size_t t = 0; t < prefs.size(); ++t) {
        double diff = 0, fd_norm = 0, an_norm = 0;
        for (Eigen::Index i = 0; i < prefs[t].size(); ++i) {
            const double keep = prefs[t].data[i];
            prefs[t].data[i] = keep + step;
            auto plus_p = p;
            const double plus = batch_loss(plus_p, c, ex, lambda, mode, seed);
            prefs[t].data[i] = keep - step;
            auto minus_p = p;
            const double minus = batch_loss(minus_p, c, ex, lambda, mode, seed);
            prefs[t].data[i] = keep;
            const double fd = (plus - minus) / (2 * step);
            const double an = grefs[t].data[i];
            diff += (fd - an) * (fd - an);
            fd_norm += fd * fd;
            an_norm += an * an;
        }
        const double denom = std::max(std::sqrt(fd_norm), std::sqrt(an_norm));
        const double rel = denom > 0 ? std::sqrt(diff) / denom : 0.0;
        ++res.tensors;
        if (rel >= res.worst_rel) res.worst_rel = rel, res.worst_tensor = prefs[t].name;
    }
    return res;
}

} // namespace ectest
