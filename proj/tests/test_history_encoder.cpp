#include "eventcast/history_encoder.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace eventcast;

namespace {

EncoderShape shape(std::size_t T, std::size_t d, std::size_t heads, std::size_t dk, std::size_t dm, std::size_t da) {
    return {T, d, heads, dk, dm, da};
}

Matrix<double> random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix<double> m(r, c);
    fill_uniform(m, 1.0, rng);
    return m;
}

using Grid = std::vector<std::vector<double>>;

Grid to_grid(const Matrix<double>& m) {
    Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
    return g;
}

Grid matmul(const Grid& a, const Grid& b) {
    Grid c(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

Grid transpose(const Grid& a) {
    Grid t(a[0].size(), std::vector<double>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
    return t;
}

// Plain-loop re-implementation of the encoder.
std::vector<double> reference_encode(const Matrix<double>& x, std::size_t target, const EncoderParams<double>& p) {
    const Grid xi = transpose(to_grid(x)); // d x T
    const std::size_t d = xi.size();
    const std::size_t dk = p.d_k();
    Grid concat(d, std::vector<double>(p.heads() * dk, 0.0));
    for (std::size_t h = 0; h < p.heads(); ++h) {
        Grid q = matmul(xi, to_grid(p.wq[h])), k = matmul(xi, to_grid(p.wk[h])), v = matmul(xi, to_grid(p.wv[h]));
        for (std::size_t i = 0; i < d; ++i) {
            std::vector<double> s(d);
            for (std::size_t j = 0; j < d; ++j) {
                double dot = 0;
                for (std::size_t c = 0; c < dk; ++c) dot += q[i][c] * k[j][c];
                s[j] = dot / std::sqrt(static_cast<double>(dk));
            }
            double mx = *std::max_element(s.begin(), s.end()), z = 0;
            for (auto& e : s) z += (e = std::exp(e - mx));
            for (std::size_t c = 0; c < dk; ++c) {
                double acc = 0;
                for (std::size_t j = 0; j < d; ++j) acc += s[j] / z * v[j][c];
                concat[i][h * dk + c] = acc;
            }
        }
    }
    Grid mixed = matmul(concat, to_grid(p.wo));
    Grid row{mixed[target]};
    Grid out = matmul(matmul(row, to_grid(p.latent)), to_grid(p.proj));
    return out[0];
}

} // namespace

TEST(HistoryEncoder, InitShapes) {
    Rng rng(1);
    auto p = EncoderParams<double>::init(shape(14, 3, 4, 16, 64, 32), rng);
    EXPECT_EQ(p.heads(), 4u);
    EXPECT_EQ(p.d_k(), 16u);
    EXPECT_EQ(p.lookback(), 14u);
    EXPECT_EQ(p.wq[0].rows(), 14);
    EXPECT_EQ(p.wo.rows(), 64);
    EXPECT_EQ(p.wo.cols(), 14);
    EXPECT_EQ(p.proj.cols(), 32);
    EXPECT_LE(p.wq[0].cwiseAbs().maxCoeff(), 1.0 / std::sqrt(14.0));
}

TEST(HistoryEncoder, SingleVariableAttentionIsValue) {
    Matrix<double> x_inv = random_matrix(1, 5, 2);
    auto wq = random_matrix(5, 3, 3), wk = random_matrix(5, 3, 4), wv = random_matrix(5, 3, 5);
    EXPECT_TRUE(attention_head<double>(x_inv, wq, wk, wv).isApprox(x_inv * wv, 1e-14));
}

TEST(HistoryEncoder, ZeroQueryKeyGivesUniformAttention) {
    Matrix<double> x_inv = random_matrix(4, 6, 6);
    Matrix<double> zero = Matrix<double>::Zero(6, 2);
    auto wv = random_matrix(6, 2, 7);
    Matrix<double> v = x_inv * wv;
    Matrix<double> want(4, 2);
    for (Eigen::Index i = 0; i < 4; ++i) want.row(i) = v.colwise().mean();
    EXPECT_TRUE(attention_head<double>(x_inv, zero, zero, wv).isApprox(want, 1e-14));
}

TEST(HistoryEncoder, HandComputedTwoVariables) {
    // T = 3, d = 2, one head with d_k = 1.
    Matrix<double> x_inv(2, 3);
    x_inv << 1, 0, 2,
             0, 1, -1;
    Matrix<double> wq(3, 1), wk(3, 1), wv(3, 1);
    wq << 1, 0, 0;
    wk << 0, 1, 0;
    wv << 1, 1, 1;
    // q = (1, 0), k = (0, 1), v = (3, 0)
    // row 0 scores (0, 1): softmax = (1/(1+e), e/(1+e)); row 1 scores (0, 0): (1/2, 1/2)
    const double e = std::exp(1.0);
    Matrix<double> want(2, 1);
    want << 3.0 / (1 + e), 1.5;
    EXPECT_TRUE(attention_head<double>(x_inv, wq, wk, wv).isApprox(want, 1e-14));
}

TEST(HistoryEncoder, MatchesLoopImplementation) {
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        Rng rng(seed);
        const std::size_t d = 2 + seed % 3;
        auto p = EncoderParams<double>::init(shape(7, d, 3, 4, 5, 6), rng);
        HistoryWindow<double> w{random_matrix(7, static_cast<Eigen::Index>(d), seed + 100), seed % d};
        auto got = encode_history<double>(w, p);
        auto want = reference_encode(w.x, w.target_index, p);
        ASSERT_EQ(got.size(), 6);
        for (Eigen::Index i = 0; i < 6; ++i) EXPECT_NEAR(got(i), want[static_cast<std::size_t>(i)], 1e-12);
    }
}

TEST(HistoryEncoder, VariableOrderDoesNotMatter) {
    Rng rng(21);
    auto p = EncoderParams<double>::init(shape(6, 4, 2, 3, 4, 5), rng);
    HistoryWindow<double> w{random_matrix(6, 4, 22), 1};
    auto base = encode_history<double>(w, p);
    std::vector<int> perm{2, 0, 3, 1}; // new column c holds old column perm[c]
    HistoryWindow<double> shuffled{Matrix<double>(6, 4), 3};
    for (int c = 0; c < 4; ++c) shuffled.x.col(c) = w.x.col(perm[c]);
    EXPECT_TRUE(encode_history<double>(shuffled, p).isApprox(base, 1e-12));
}

TEST(HistoryEncoder, ShapeErrors) {
    Rng rng(3);
    auto p = EncoderParams<double>::init(shape(6, 2, 1, 2, 3, 4), rng);
    EXPECT_THROW(encode_history<double>({Matrix<double>::Zero(5, 2), 0}, p), ShapeMismatch);
    EXPECT_THROW(encode_history<double>({Matrix<double>::Zero(6, 2), 2}, p), ShapeMismatch);
}

TEST(HistoryEncoder, BackwardMatchesFiniteDifferences) {
    Rng rng(31);
    auto p = EncoderParams<double>::init(shape(5, 3, 2, 3, 4, 6), rng);
    HistoryWindow<double> w{random_matrix(5, 3, 32), 1};
    Vector<double> upstream = random_matrix(6, 1, 33);
    auto loss = [&](const EncoderParams<double>& q) { return upstream.dot(encode_history<double>(w, q)); };
    EncoderTrace<double> trace;
    encode_history<double>(w, p, &trace);
    auto g = EncoderParams<double>::zeros_like(p);
    encode_history_backward<double>(trace, p, upstream, g);

    auto check = [&](Matrix<double>& param, const Matrix<double>& grad) {
        for (Eigen::Index i = 0; i < param.size(); ++i) {
            const double keep = param.data()[i];
            param.data()[i] = keep + 1e-6;
            const double plus = loss(p);
            param.data()[i] = keep - 1e-6;
            const double minus = loss(p);
            param.data()[i] = keep;
            EXPECT_NEAR((plus - minus) / 2e-6, grad.data()[i], 1e-7);
        }
    };
    for (std::size_t h = 0; h < 2; ++h) {
        check(p.wq[h], g.wq[h]);
        check(p.wk[h], g.wk[h]);
        check(p.wv[h], g.wv[h]);
    }
    check(p.wo, g.wo);
    check(p.latent, g.latent);
    check(p.proj, g.proj);
}
