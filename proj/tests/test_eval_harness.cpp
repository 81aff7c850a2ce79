#include "eventcast/eval_harness.hpp"
#include "eventcast/synth_market.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace eventcast;

TEST(Metrics, MaeMseExamples) {
    std::vector<double> p{1, 2, 3}, t{2, 2, 5};
    EXPECT_DOUBLE_EQ(mae(p, t), 1.0);
    EXPECT_DOUBLE_EQ(mse(p, t), 5.0 / 3.0);
    EXPECT_DOUBLE_EQ(mae(t, t), 0.0);
    EXPECT_THROW(mae(p, std::vector<double>{1}), LengthMismatch);
    EXPECT_THROW(mse(std::vector<double>{}, std::vector<double>{}), EmptyInput);
}

TEST(Metrics, ImprovementPct) {
    EXPECT_DOUBLE_EQ(improvement_pct(50, 100), 50.0);
    EXPECT_DOUBLE_EQ(improvement_pct(110, 100), -10.0);
    EXPECT_DOUBLE_EQ(improvement_pct(1, 0), 0.0);
}

TEST(Score, ConstantZeroPredictorAndMaskCounts) {
    // two origins, three horizons
    std::vector<double> truth{1, -2, 3, 4, 5, -6};
    std::vector<double> zero(6, 0.0);
    std::vector<std::uint8_t> mask{1, 0, 1, 1, 0, 0};
    auto rep = score_values(zero, truth, mask, 3);
    ASSERT_EQ(rep.horizons(), 3u);
    EXPECT_DOUBLE_EQ(rep.at(1, Split::Overall).mae, 2.5);
    EXPECT_DOUBLE_EQ(rep.at(2, Split::Overall).mae, 3.5);
    EXPECT_DOUBLE_EQ(rep.at(3, Split::Overall).mse, 22.5);
    EXPECT_EQ(rep.at(1, Split::EventDriven).n, 2u);
    EXPECT_EQ(rep.at(2, Split::EventDriven).n, 0u);
    EXPECT_EQ(rep.at(3, Split::EventDriven).n, 1u);
    EXPECT_DOUBLE_EQ(rep.at(1, Split::EventDriven).mae, 2.5);
    EXPECT_DOUBLE_EQ(rep.at(3, Split::EventDriven).mae, 3.0);
    EXPECT_DOUBLE_EQ(rep.mean_mae(Split::Overall), (2.5 + 3.5 + 4.5) / 3);
}

TEST(Score, ReportCsvLayout) {
    std::vector<double> v{1, 2};
    std::vector<std::uint8_t> m{1, 1};
    auto csv = report_csv(score_values(v, v, m, 2));
    EXPECT_EQ(csv, "horizon,split,mae,mse,n\n1,overall,0,0,1\n1,event,0,0,1\n2,overall,0,0,1\n2,event,0,0,1\n");
}

TEST(Pipeline, SplitAndOrigins) {
    EXPECT_EQ(split_index(100, 0.2), 80u);
    EXPECT_EQ(split_index(730, 0.2), 584u);
    PipelineConfig pc;
    auto [tlo, thi] = train_origins(100, pc);
    EXPECT_EQ(tlo, 13u);
    EXPECT_EQ(thi, 76u); // last training target is day 79
    auto [elo, ehi] = eval_origins(100, pc);
    EXPECT_EQ(elo, 79u); // first target is the first held-out day
    EXPECT_EQ(ehi, 96u);
}

TEST(Pipeline, NormalizationUsesTrainingSplit) {
    RegionSeries r;
    r.country = "01";
    r.region = "R01";
    r.target = {1, 3, 5, 100};
    r.features = {{2, 2, 2, 9}};
    auto n = fit_norm(r, 2, 3);
    EXPECT_DOUBLE_EQ(n.mean[0], 3.0);
    EXPECT_DOUBLE_EQ(n.std[0], std::sqrt(8.0 / 3.0));
    EXPECT_DOUBLE_EQ(n.mean[1], 2.0);
    EXPECT_DOUBLE_EQ(n.std[1], 1.0); // constant series falls back to unit scale
    EXPECT_THROW(fit_norm(r, 2, 0), InsufficientData);
}

namespace {

struct Small {
    SyntheticMarket market;
    SummaryStore summaries;
    PipelineConfig cfg;

    Small() {
        ScenarioConfig sc;
        sc.countries = 2;
        sc.regions_per_country = 2;
        sc.days = 120;
        market = generate(sc);
        summaries = build_summaries(market.dataset, market.db, 4, oracle_reasoner());
        cfg.model.d_align = 8;
        cfg.model.heads = 1;
        cfg.model.d_k = 4;
        cfg.model.d_m = 4;
        cfg.model.layers = 1;
        cfg.train.epochs = 3;
        cfg.train.batch_size = 32;
    }
};

} // namespace

TEST(Pipeline, SummariesIndependentOfWorkerCount) {
    Small s;
    auto parallel = build_summaries(s.market.dataset, s.market.db, 4, oracle_reasoner(), 8, 3);
    EXPECT_EQ(parallel.size(), s.summaries.size());
    EXPECT_EQ(parallel.size(), 2u * (120 + 4));
    const auto& r = s.market.dataset.regions[3];
    for (std::size_t i = 0; i < r.size() + 4; ++i)
        EXPECT_EQ(parallel.at(r.country, r.date(i)), s.summaries.at(r.country, r.date(i)));
}

TEST(Pipeline, ReasonerFailurePropagates) {
    Small s;
    ReasonFn bad = [](const DayContext&) { return RawReasoning{"nothing here", ReasoningSource::Remote}; };
    EXPECT_THROW(build_summaries(s.market.dataset, s.market.db, 4, bad), MissingResultBlock);
}

TEST(Pipeline, TokenStorePadsWithoutEvents) {
    Small s;
    auto vocab = vocab_from_training(s.market.dataset, s.summaries, 0.2);
    TokenStore off(&s.summaries, &vocab, false, 8);
    const auto* t = off.get("01", Date(2023, 2, 1));
    EXPECT_EQ(*t, TokenSeq(8, Vocab::kPad));
    TokenStore on(&s.summaries, &vocab, true, 8);
    const auto* u = on.get("01", Date(2023, 2, 1));
    EXPECT_EQ(*u, flatten_tokens(s.summaries.at("01", Date(2023, 2, 1)), vocab));
    EXPECT_EQ(u, on.get("01", Date(2023, 2, 1)));
}

TEST(Evaluate, PredictionLayoutAndDenormalisation) {
    Small s;
    auto m = train_model(s.market.dataset, s.summaries, s.cfg);
    auto ps = predict(m, s.market.dataset, s.summaries, 0.4);
    const auto [lo, hi] = eval_origins(120, m.config);
    ASSERT_EQ(ps.rows(), 4 * (hi - lo));
    ASSERT_EQ(ps.truth.size(), ps.rows() * 4);
    for (std::size_t row = 0; row < ps.rows(); ++row) {
        const auto& r = s.market.dataset.regions[ps.region[row]];
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_EQ(ps.truth[row * 4 + j], r.target[ps.origin[row] + j + 1]);
            EXPECT_EQ(ps.mask[row * 4 + j], r.event_mask[ps.origin[row] + j + 1] ? 1 : 0);
        }
    }
    // de-normalised: predictions live on the target's scale
    double mean_pred = 0, mean_truth = 0;
    for (std::size_t i = 0; i < ps.truth.size(); ++i) mean_pred += ps.trend[i], mean_truth += ps.truth[i];
    EXPECT_GT(mean_pred / mean_truth, 0.3);
    EXPECT_LT(mean_pred / mean_truth, 3.0);

    auto rep = evaluate(m, s.market.dataset, s.summaries);
    auto again = score(ps, m.config.train.lambda);
    for (std::size_t h = 1; h <= 4; ++h) EXPECT_NEAR(rep.at(h, Split::Overall).mae, again.at(h, Split::Overall).mae, 1e-4);
}

TEST(Evaluate, SweepFastPathMatchesRecompute) {
    Small s;
    auto m = train_model(s.market.dataset, s.summaries, s.cfg);
    auto sw = sweep_lambda(m, s.market.dataset, s.summaries, default_lambda_grid());
    ASSERT_EQ(sw.grid.size(), 11u);
    EXPECT_EQ(sw.validated_lambdas.size(), 3u);
    EXPECT_LE(sw.max_fast_path_error, 1e-5);
    auto full = predict(m, s.market.dataset, s.summaries, 1.0);
    auto rep = score_values(full.blended, full.truth, full.mask, 4);
    EXPECT_NEAR(sw.reports.back().at(2, Split::Overall).mae, rep.at(2, Split::Overall).mae, 1e-3);
    EXPECT_THROW(sweep_lambda(m, s.market.dataset, s.summaries, {1.5}), DataError);
    EXPECT_THROW(sweep_lambda(m, s.market.dataset, s.summaries, {}), DataError);
}

TEST(Evaluate, SeasonalNaiveCopiesLastWeek) {
    Small s;
    auto ps = seasonal_naive(s.market.dataset, s.cfg);
    for (std::size_t row = 0; row < ps.rows(); ++row) {
        const auto& r = s.market.dataset.regions[ps.region[row]];
        for (std::size_t j = 1; j <= 4; ++j)
            EXPECT_EQ(ps.blended[row * 4 + j - 1], r.target[ps.origin[row] + j - 7]);
    }
    EXPECT_THROW(seasonal_naive(s.market.dataset, s.cfg, 3), DataError);
}

TEST(Evaluate, AblationTrainsBothVariants) {
    Small s;
    auto r = ablate_events(s.market.dataset, s.summaries, s.cfg);
    EXPECT_TRUE(r.model_with.config.use_events);
    EXPECT_FALSE(r.model_without.config.use_events);
    ASSERT_EQ(r.improvement_event.size(), 4u);
    for (std::size_t h = 1; h <= 4; ++h)
        EXPECT_DOUBLE_EQ(r.improvement_event[h - 1], improvement_pct(r.with_events.at(h, Split::EventDriven).mae,
                                                                     r.without_events.at(h, Split::EventDriven).mae));
    auto j = to_json(r);
    EXPECT_EQ(j["improvement_event_pct"].size(), 4u);
}
