#pragma once

#include "eventcast/error.hpp"
#include "eventcast/fusion_forecaster.hpp"
#include "eventcast/history_encoder.hpp"
#include "eventcast/linalg.hpp"
#include "eventcast/semantic_embedder.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace eventcast {

struct ModelConfig {
    std::size_t lookback = 14;
    std::size_t n_vars = 3;
    std::size_t target_index = 0;
    std::size_t heads = 4;
    std::size_t d_k = 16;
    std::size_t d_m = 64;
    std::size_t d_align = 1024;
    std::size_t layers = 3;
    std::size_t horizons = 4;
    std::size_t max_positions = 64;
    std::size_t vocab_size = 2;
    double dropout = 0.1;
    double leaky_slope = 0.01;
    double bn_momentum = 0.9;
    double bn_eps = 1e-5;

    EncoderShape encoder() const { return {lookback, n_vars, heads, d_k, d_m, d_align}; }
    TowerShape tower() const { return {d_align, layers, dropout, leaky_slope, bn_momentum, bn_eps}; }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, lookback, n_vars, target_index, heads, d_k, d_m,
                                                d_align, layers, horizons, max_positions, vocab_size, dropout,
                                                leaky_slope, bn_momentum, bn_eps)

template <class S> struct ModelParams {
    SemanticEmbeddingParams<S> sem;
    EncoderParams<S> enc;
    TowerParams<S> trend, event;
    HeadParams<S> head;

    static ModelParams init(const ModelConfig& c, Rng& rng) {
        ModelParams p;
        p.enc = EncoderParams<S>::init(c.encoder(), rng);
        p.sem = SemanticEmbeddingParams<S>::init(c.vocab_size, c.max_positions, c.d_align, rng);
        p.trend = TowerParams<S>::init(c.tower(), rng);
        p.event = TowerParams<S>::init(c.tower(), rng);
        p.head = HeadParams<S>::init(c.horizons, c.d_align, rng);
        return p;
    }

    static ModelParams zeros_like(const ModelParams& o) {
        ModelParams p;
        p.sem.token_table = Matrix<S>::Zero(o.sem.token_table.rows(), o.sem.token_table.cols());
        p.sem.pos_table = Matrix<S>::Zero(o.sem.pos_table.rows(), o.sem.pos_table.cols());
        p.enc = EncoderParams<S>::zeros_like(o.enc);
        p.trend = TowerParams<S>::zeros_like(o.trend);
        p.event = TowerParams<S>::zeros_like(o.event);
        p.head = HeadParams<S>::zeros_like(o.head);
        return p;
    }

    template <class T> ModelParams<T> cast() const {
        ModelParams<T> out;
        auto src = const_cast<ModelParams&>(*this).all_refs();
        out = ModelParams<T>::zeros_like_shapes(*this);
        auto dst = out.all_refs();
        for (std::size_t i = 0; i < src.size(); ++i)
            for (Eigen::Index j = 0; j < src[i].size(); ++j) dst[i].data[j] = static_cast<T>(src[i].data[j]);
        return out;
    }

    template <class U> static ModelParams zeros_like_shapes(const ModelParams<U>& o) {
        ModelParams p;
        auto z = [](Eigen::Index r, Eigen::Index c) { return Matrix<S>::Zero(r, c).eval(); };
        auto zv = [](Eigen::Index n) { return Vector<S>::Zero(n).eval(); };
        p.sem.token_table = z(o.sem.token_table.rows(), o.sem.token_table.cols());
        p.sem.pos_table = z(o.sem.pos_table.rows(), o.sem.pos_table.cols());
        for (std::size_t h = 0; h < o.enc.wq.size(); ++h) {
            p.enc.wq.push_back(z(o.enc.wq[h].rows(), o.enc.wq[h].cols()));
            p.enc.wk.push_back(z(o.enc.wk[h].rows(), o.enc.wk[h].cols()));
            p.enc.wv.push_back(z(o.enc.wv[h].rows(), o.enc.wv[h].cols()));
        }
        p.enc.wo = z(o.enc.wo.rows(), o.enc.wo.cols());
        p.enc.latent = z(o.enc.latent.rows(), o.enc.latent.cols());
        p.enc.proj = z(o.enc.proj.rows(), o.enc.proj.cols());
        auto tower = [&](TowerParams<S>& t, const TowerParams<U>& u) {
            for (std::size_t l = 0; l < u.weight.size(); ++l) {
                t.weight.push_back(z(u.weight[l].rows(), u.weight[l].cols()));
                t.gamma.push_back(zv(u.gamma[l].size()));
                t.beta.push_back(zv(u.beta[l].size()));
                t.running_mean.push_back(zv(u.running_mean[l].size()));
                t.running_var.push_back(zv(u.running_var[l].size()));
            }
        };
        tower(p.trend, o.trend);
        tower(p.event, o.event);
        p.head.w_trend = z(o.head.w_trend.rows(), o.head.w_trend.cols());
        p.head.w_event = z(o.head.w_event.rows(), o.head.w_event.cols());
        p.head.b_trend = zv(o.head.b_trend.size());
        p.head.b_event = zv(o.head.b_event.size());
        return p;
    }

    /// Trainable tensors in a fixed order.
    std::vector<ParamRef<S>> trainable_refs() {
        std::vector<ParamRef<S>> r;
        r.push_back(make_ref("sem.token_table", sem.token_table));
        r.push_back(make_ref("sem.pos_table", sem.pos_table));
        for (std::size_t h = 0; h < enc.wq.size(); ++h) {
            const auto hs = std::to_string(h);
            r.push_back(make_ref("enc.wq." + hs, enc.wq[h]));
            r.push_back(make_ref("enc.wk." + hs, enc.wk[h]));
            r.push_back(make_ref("enc.wv." + hs, enc.wv[h]));
        }
        r.push_back(make_ref("enc.wo", enc.wo));
        r.push_back(make_ref("enc.latent", enc.latent));
        r.push_back(make_ref("enc.proj", enc.proj));
        auto tower = [&](const std::string& name, TowerParams<S>& t) {
            for (std::size_t l = 0; l < t.layers(); ++l) {
                const auto prefix = name + "." + std::to_string(l);
                r.push_back(make_ref(prefix + ".weight", t.weight[l]));
                r.push_back(make_ref(prefix + ".gamma", t.gamma[l]));
                r.push_back(make_ref(prefix + ".beta", t.beta[l]));
            }
        };
        tower("trend", trend);
        tower("event", event);
        r.push_back(make_ref("head.w_trend", head.w_trend));
        r.push_back(make_ref("head.b_trend", head.b_trend));
        r.push_back(make_ref("head.w_event", head.w_event));
        r.push_back(make_ref("head.b_event", head.b_event));
        return r;
    }

    /// Batch-norm running statistics; updated by forward passes, never by
    /// the optimizer.
    std::vector<ParamRef<S>> buffer_refs() {
        std::vector<ParamRef<S>> r;
        auto tower = [&](const std::string& name, TowerParams<S>& t) {
            for (std::size_t l = 0; l < t.layers(); ++l) {
                const auto prefix = name + "." + std::to_string(l);
                r.push_back(make_ref(prefix + ".running_mean", t.running_mean[l]));
                r.push_back(make_ref(prefix + ".running_var", t.running_var[l]));
            }
        };
        tower("trend", trend);
        tower("event", event);
        return r;
    }

    std::vector<ParamRef<S>> all_refs() {
        auto r = trainable_refs();
        for (auto& b : buffer_refs()) r.push_back(std::move(b));
        return r;
    }
};

using TokenSeq = std::vector<int>;

/// One forecasting example: a normalized window, the token sequence of each
/// future date's summary, and (for training) the normalized targets.
template <class S> struct Example {
    HistoryWindow<S> window;
    std::vector<const TokenSeq*> future; // one per horizon
    Vector<S> target;                    // [H], may be empty at inference
};

template <class S> struct BatchOutput {
    Matrix<S> trend;   // [B x H]
    Matrix<S> event;   // [B x H]
    Matrix<S> blended; // [B x H]
};

template <class S> struct ForwardCache {
    std::vector<EncoderTrace<S>> enc;
    std::vector<const TokenSeq*> tokens; // row b*H + j
    TowerTrace<S> trend, event;
    Matrix<S> trend_out, event_out;
};

template <class S>
BatchOutput<S> forward_batch(ModelParams<S>& p, const ModelConfig& c, std::span<const Example<S>> batch, S lambda,
                             Mode mode, Rng& rng, ForwardCache<S>* cache = nullptr) {
    const auto B = static_cast<Eigen::Index>(batch.size());
    const auto H = static_cast<Eigen::Index>(c.horizons);
    const auto A = static_cast<Eigen::Index>(c.d_align);
    if (cache) {
        cache->enc.assign(batch.size(), {});
        cache->tokens.assign(batch.size() * c.horizons, nullptr);
    }
    Matrix<S> h_hist(B, A);
    Matrix<S> ev_in(B * H, A);
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto& ex = batch[static_cast<std::size_t>(b)];
        if (static_cast<Eigen::Index>(ex.future.size()) < H) throw MissingSummary(ex.future.size() + 1);
        Vector<S> hh = encode_history<S>(ex.window, p.enc, cache ? &cache->enc[static_cast<std::size_t>(b)] : nullptr);
        h_hist.row(b) = hh.transpose();
        for (Eigen::Index j = 0; j < H; ++j) {
            const TokenSeq* toks = ex.future[static_cast<std::size_t>(j)];
            if (!toks) throw MissingSummary(static_cast<std::size_t>(j) + 1);
            Vector<S> hs = embed_tokens<S>(*toks, p.sem);
            ev_in.row(b * H + j) = fuse<S>(hh, hs).transpose();
            if (cache) cache->tokens[static_cast<std::size_t>(b * H + j)] = toks;
        }
    }
    const auto shape = c.tower();
    Matrix<S> zt = tower_forward<S>(h_hist, p.trend, shape, mode, rng, cache ? &cache->trend : nullptr);
    Matrix<S> ze = tower_forward<S>(ev_in, p.event, shape, mode, rng, cache ? &cache->event : nullptr);

    BatchOutput<S> out;
    out.trend = (zt * p.head.w_trend.transpose()).rowwise() + p.head.b_trend.transpose();
    out.event.resize(B, H);
    for (Eigen::Index b = 0; b < B; ++b)
        for (Eigen::Index j = 0; j < H; ++j)
            out.event(b, j) = p.head.w_event.row(j).dot(ze.row(b * H + j)) + p.head.b_event(j);
    out.blended = lambda * out.trend + (S(1) - lambda) * out.event;
    if (cache) {
        cache->trend_out = std::move(zt);
        cache->event_out = std::move(ze);
    }
    return out;
}

/// Accumulates d(loss)/d(params) into g given d(loss)/d(blended output).
template <class S>
void backward_batch(const ModelParams<S>& p, const ModelConfig& c, const ForwardCache<S>& cache,
                    const Matrix<S>& d_blended, S lambda, ModelParams<S>& g) {
    const auto B = d_blended.rows();
    const auto H = static_cast<Eigen::Index>(c.horizons);
    Matrix<S> d_trend = lambda * d_blended;
    Matrix<S> d_event = (S(1) - lambda) * d_blended;

    g.head.w_trend.noalias() += d_trend.transpose() * cache.trend_out;
    g.head.b_trend += d_trend.colwise().sum().transpose();
    Matrix<S> d_zt = d_trend * p.head.w_trend;

    Matrix<S> d_ze(B * H, cache.event_out.cols());
    for (Eigen::Index b = 0; b < B; ++b)
        for (Eigen::Index j = 0; j < H; ++j) {
            const S d = d_event(b, j);
            g.head.w_event.row(j) += d * cache.event_out.row(b * H + j);
            g.head.b_event(j) += d;
            d_ze.row(b * H + j) = d * p.head.w_event.row(j);
        }

    const auto shape = c.tower();
    Matrix<S> d_hist = tower_backward<S>(cache.trend, p.trend, shape, d_zt, g.trend);
    Matrix<S> d_ev_in = tower_backward<S>(cache.event, p.event, shape, d_ze, g.event);

    for (Eigen::Index b = 0; b < B; ++b) {
        Vector<S> dh = d_hist.row(b).transpose();
        for (Eigen::Index j = 0; j < H; ++j) {
            Vector<S> d_in = d_ev_in.row(b * H + j).transpose();
            dh += d_in;
            embed_tokens_backward<S>(*cache.tokens[static_cast<std::size_t>(b * H + j)], d_in, g.sem);
        }
        encode_history_backward<S>(cache.enc[static_cast<std::size_t>(b)], p.enc, dh, g.enc);
    }
}

/// Single-window inference with running statistics.
template <class S> struct Forecast {
    Vector<S> trend, event, blended;
};

template <class S>
Forecast<S> forecast(ModelParams<S>& p, const ModelConfig& c, const HistoryWindow<S>& window,
                     const std::vector<TokenSeq>& summaries, S lambda) {
    if (summaries.size() < c.horizons) throw MissingSummary(summaries.size() + 1);
    Example<S> ex;
    ex.window = window;
    for (std::size_t j = 0; j < c.horizons; ++j) ex.future.push_back(&summaries[j]);
    Rng unused(0);
    auto out = forward_batch<S>(p, c, std::span<const Example<S>>(&ex, 1), lambda, Mode::Eval, unused);
    return {out.trend.row(0).transpose(), out.event.row(0).transpose(), out.blended.row(0).transpose()};
}

} // namespace eventcast
