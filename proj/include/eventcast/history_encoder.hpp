#pragma once

#include "eventcast/error.hpp"
#include "eventcast/linalg.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace eventcast {

struct EncoderShape {
    std::size_t lookback = 14; // T
    std::size_t n_vars = 3;    // d
    std::size_t heads = 4;
    std::size_t d_k = 16;
    std::size_t d_m = 64;
    std::size_t d_align = 1024;
};

/// Variable-wise attention over the inverted window. Each variable's
/// length-T series is one token.
template <class S> struct EncoderParams {
    std::vector<Matrix<S>> wq, wk, wv; // per head [T x d_k]
    Matrix<S> wo;                      // [heads*d_k x T]
    Matrix<S> latent;                  // [T x d_m]
    Matrix<S> proj;                    // [d_m x d_align]

    static EncoderParams init(const EncoderShape& s, Rng& rng) {
        EncoderParams p;
        const auto T = static_cast<Eigen::Index>(s.lookback);
        const auto dk = static_cast<Eigen::Index>(s.d_k);
        const auto hdk = static_cast<Eigen::Index>(s.heads * s.d_k);
        auto make = [&](Eigen::Index r, Eigen::Index c) {
            Matrix<S> m(r, c);
            fill_uniform(m, 1.0 / std::sqrt(static_cast<double>(r)), rng);
            return m;
        };
        for (std::size_t h = 0; h < s.heads; ++h) {
            p.wq.push_back(make(T, dk));
            p.wk.push_back(make(T, dk));
            p.wv.push_back(make(T, dk));
        }
        p.wo = make(hdk, T);
        p.latent = make(T, static_cast<Eigen::Index>(s.d_m));
        p.proj = make(static_cast<Eigen::Index>(s.d_m), static_cast<Eigen::Index>(s.d_align));
        return p;
    }

    static EncoderParams zeros_like(const EncoderParams& o) {
        EncoderParams p;
        for (std::size_t h = 0; h < o.wq.size(); ++h) {
            p.wq.push_back(Matrix<S>::Zero(o.wq[h].rows(), o.wq[h].cols()));
            p.wk.push_back(Matrix<S>::Zero(o.wk[h].rows(), o.wk[h].cols()));
            p.wv.push_back(Matrix<S>::Zero(o.wv[h].rows(), o.wv[h].cols()));
        }
        p.wo = Matrix<S>::Zero(o.wo.rows(), o.wo.cols());
        p.latent = Matrix<S>::Zero(o.latent.rows(), o.latent.cols());
        p.proj = Matrix<S>::Zero(o.proj.rows(), o.proj.cols());
        return p;
    }

    std::size_t lookback() const { return static_cast<std::size_t>(latent.rows()); }
    std::size_t heads() const { return wq.size(); }
    std::size_t d_k() const { return wq.empty() ? 0 : static_cast<std::size_t>(wq[0].cols()); }
};

/// A normalized look-back window, [T x d], plus the row of the target
/// variable after inversion.
template <class S> struct HistoryWindow {
    Matrix<S> x;
    std::size_t target_index = 0;
};

template <class S> void softmax_rows(Matrix<S>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const S mx = m.row(i).maxCoeff();
        m.row(i) = (m.row(i).array() - mx).exp();
        m.row(i) /= m.row(i).sum();
    }
}

/// softmax(Q K^T / sqrt(d_k)) V for one head over the inverted window
/// x_inv [d x T]. Returns [d x d_k].
template <class S>
Matrix<S> attention_head(const Matrix<S>& x_inv, const Matrix<S>& wq, const Matrix<S>& wk, const Matrix<S>& wv) {
    Matrix<S> q = x_inv * wq, k = x_inv * wk, v = x_inv * wv;
    Matrix<S> a = (q * k.transpose()) / std::sqrt(static_cast<S>(wq.cols()));
    softmax_rows(a);
    return a * v;
}

template <class S> struct EncoderTrace {
    Matrix<S> x_inv;                     // [d x T]
    std::vector<Matrix<S>> q, k, v, att; // per head
    Matrix<S> concat;                    // [d x heads*d_k]
    Matrix<S> mixed;                     // [d x T]
    Vector<S> latent_row;                // [d_m]
    std::size_t target_index = 0;
};

template <class S>
Vector<S> encode_history(const HistoryWindow<S>& w, const EncoderParams<S>& p, EncoderTrace<S>* trace = nullptr) {
    if (static_cast<std::size_t>(w.x.rows()) != p.lookback())
        throw ShapeMismatch("window has " + std::to_string(w.x.rows()) + " steps, encoder expects " +
                            std::to_string(p.lookback()));
    if (w.target_index >= static_cast<std::size_t>(w.x.cols()))
        throw ShapeMismatch("target index " + std::to_string(w.target_index) + " outside " +
                            std::to_string(w.x.cols()) + " variables");
    const auto dk = static_cast<Eigen::Index>(p.d_k());
    const S scale = S(1) / std::sqrt(static_cast<S>(dk));
    Matrix<S> x_inv = w.x.transpose();
    Matrix<S> concat(x_inv.rows(), static_cast<Eigen::Index>(p.heads()) * dk);
    EncoderTrace<S> local;
    EncoderTrace<S>& t = trace ? *trace : local;
    t.q.clear(), t.k.clear(), t.v.clear(), t.att.clear();
    for (std::size_t h = 0; h < p.heads(); ++h) {
        Matrix<S> q = x_inv * p.wq[h], k = x_inv * p.wk[h], v = x_inv * p.wv[h];
        Matrix<S> a = (q * k.transpose()) * scale;
        softmax_rows(a);
        concat.middleCols(static_cast<Eigen::Index>(h) * dk, dk) = a * v;
        if (trace) {
            t.q.push_back(std::move(q));
            t.k.push_back(std::move(k));
            t.v.push_back(std::move(v));
            t.att.push_back(std::move(a));
        }
    }
    Matrix<S> mixed = concat * p.wo;
    const auto ti = static_cast<Eigen::Index>(w.target_index);
    Vector<S> latent_row = (mixed.row(ti) * p.latent).transpose();
    Vector<S> out = p.proj.transpose() * latent_row;
    if (trace) {
        t.x_inv = std::move(x_inv);
        t.concat = std::move(concat);
        t.mixed = std::move(mixed);
        t.latent_row = std::move(latent_row);
        t.target_index = w.target_index;
    }
    return out;
}

/// Accumulates parameter gradients given d(loss)/d(h_hist). Only the target
/// row of the mixed output reaches the loss, so the backward pass follows
/// that row alone.
template <class S>
void encode_history_backward(const EncoderTrace<S>& t, const EncoderParams<S>& p, const Vector<S>& d_out,
                             EncoderParams<S>& g) {
    const auto dk = static_cast<Eigen::Index>(p.d_k());
    const S scale = S(1) / std::sqrt(static_cast<S>(dk));
    const auto ti = static_cast<Eigen::Index>(t.target_index);

    g.proj.noalias() += t.latent_row * d_out.transpose();
    Vector<S> d_latent_row = p.proj * d_out;
    Vector<S> y_t = t.mixed.row(ti).transpose();
    g.latent.noalias() += y_t * d_latent_row.transpose();
    Vector<S> d_y = p.latent * d_latent_row;
    Vector<S> o_t = t.concat.row(ti).transpose();
    g.wo.noalias() += o_t * d_y.transpose();
    Vector<S> d_o = p.wo * d_y;
    Vector<S> x_t = t.x_inv.row(ti).transpose();

    for (std::size_t h = 0; h < p.heads(); ++h) {
        Vector<S> d_oh = d_o.segment(static_cast<Eigen::Index>(h) * dk, dk);
        Vector<S> a = t.att[h].row(ti).transpose();
        Matrix<S> d_v = a * d_oh.transpose();
        Vector<S> d_a = t.v[h] * d_oh;
        Vector<S> d_s = (a.array() * (d_a.array() - a.dot(d_a))).matrix() * scale;
        Vector<S> q = t.q[h].row(ti).transpose();
        Vector<S> d_q = t.k[h].transpose() * d_s;
        Matrix<S> d_k = d_s * q.transpose();
        g.wq[h].noalias() += x_t * d_q.transpose();
        g.wk[h].noalias() += t.x_inv.transpose() * d_k;
        g.wv[h].noalias() += t.x_inv.transpose() * d_v;
    }
}

} // namespace eventcast
