#pragma once

#include "eventcast/pipeline.hpp"
#include "eventcast/text.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace eventcast {

inline double mae(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw LengthMismatch(pred.size(), truth.size());
    if (pred.empty()) throw EmptyInput("mae of empty vectors");
    double s = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

inline double mse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw LengthMismatch(pred.size(), truth.size());
    if (pred.empty()) throw EmptyInput("mse of empty vectors");
    double s = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return s / static_cast<double>(pred.size());
}

enum class Split { Overall = 0, EventDriven = 1 };

inline std::string to_string(Split s) { return s == Split::Overall ? "overall" : "event"; }

struct MetricCell {
    double mae = 0;
    double mse = 0;
    std::size_t n = 0;
};

struct MetricsReport {
    std::vector<std::array<MetricCell, 2>> cells; // [horizon-1][split]

    std::size_t horizons() const { return cells.size(); }
    const MetricCell& at(std::size_t horizon, Split s) const {
        return cells.at(horizon - 1)[static_cast<std::size_t>(s)];
    }
    double mean_mae(Split s) const {
        double sum = 0;
        for (std::size_t h = 1; h <= horizons(); ++h) sum += at(h, s).mae;
        return horizons() ? sum / static_cast<double>(horizons()) : 0.0;
    }
};

/// De-normalized head outputs at every evaluation origin, row-major [row x H].
struct PredictionSet {
    std::size_t horizons = 0;
    double lambda = 0;
    std::vector<double> trend, event, blended, truth;
    std::vector<std::uint8_t> mask; // target-date event mask
    std::vector<std::size_t> region, origin;

    std::size_t rows() const { return region.size(); }
};

/// Runs the model in eval mode over every evaluation origin of every region.
inline PredictionSet predict(ForecastModel& m, const Dataset& ds, const SummaryStore& summaries, double lambda,
                             std::size_t batch_size = 256) {
    const auto& mc = m.config.model;
    TokenStore tokens(&summaries, &m.vocab, m.config.use_events, kDefaultFieldCount);
    PredictionSet out;
    out.horizons = mc.horizons;
    out.lambda = lambda;
    const auto H = mc.horizons;
    std::vector<Example<float>> batch;
    std::vector<const RegionNorm*> batch_norm;
    Rng unused(0);
    auto flush = [&] {
        if (batch.empty()) return;
        auto o = forward_batch<float>(m.params, mc, batch, static_cast<float>(lambda), Mode::Eval, unused);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const auto& n = *batch_norm[b];
            for (std::size_t j = 0; j < H; ++j) {
                const auto bi = static_cast<Eigen::Index>(b), ji = static_cast<Eigen::Index>(j);
                out.trend.push_back(static_cast<double>(o.trend(bi, ji)) * n.std[0] + n.mean[0]);
                out.event.push_back(static_cast<double>(o.event(bi, ji)) * n.std[0] + n.mean[0]);
                out.blended.push_back(static_cast<double>(o.blended(bi, ji)) * n.std[0] + n.mean[0]);
            }
        }
        batch.clear();
        batch_norm.clear();
    };
    for (std::size_t ri = 0; ri < ds.regions.size(); ++ri) {
        const auto& r = ds.regions[ri];
        const auto& norm = m.norm_for(r);
        const auto [lo, hi] = eval_origins(r.size(), m.config);
        if (lo >= hi) throw InsufficientData("region " + r.country + "/" + r.region + " has no evaluation origins");
        for (std::size_t o = lo; o < hi; ++o) {
            batch.push_back(make_example<float>(r, norm, o, mc, tokens));
            batch_norm.push_back(&norm);
            out.region.push_back(ri);
            out.origin.push_back(o);
            for (std::size_t j = 1; j <= H; ++j) {
                out.truth.push_back(r.target[o + j]);
                out.mask.push_back(r.event_mask[o + j] ? 1 : 0);
            }
            if (batch.size() == batch_size) flush();
        }
    }
    flush();
    return out;
}

/// MAE/MSE per horizon and split for arbitrary predictions laid out like a
/// PredictionSet.
inline MetricsReport score_values(std::span<const double> pred, std::span<const double> truth,
                                  std::span<const std::uint8_t> mask, std::size_t horizons) {
    if (pred.size() != truth.size()) throw LengthMismatch(pred.size(), truth.size());
    MetricsReport rep;
    rep.cells.resize(horizons);
    for (std::size_t j = 0; j < horizons; ++j) {
        std::array<std::vector<double>, 2> p, t;
        for (std::size_t i = j; i < pred.size(); i += horizons) {
            p[0].push_back(pred[i]), t[0].push_back(truth[i]);
            if (mask[i]) p[1].push_back(pred[i]), t[1].push_back(truth[i]);
        }
        for (std::size_t s = 0; s < 2; ++s) {
            auto& c = rep.cells[j][s];
            c.n = p[s].size();
            if (c.n) c.mae = mae(p[s], t[s]), c.mse = mse(p[s], t[s]);
        }
    }
    return rep;
}

/// Scores the blend at `lambda` from cached head outputs.
inline MetricsReport score(const PredictionSet& ps, double lambda) {
    std::vector<double> pred(ps.trend.size());
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = lambda * ps.trend[i] + (1.0 - lambda) * ps.event[i];
    return score_values(pred, ps.truth, ps.mask, ps.horizons);
}

inline MetricsReport evaluate(ForecastModel& m, const Dataset& ds, const SummaryStore& summaries) {
    auto ps = predict(m, ds, summaries, m.config.train.lambda);
    return score_values(ps.blended, ps.truth, ps.mask, ps.horizons);
}

/// (MAE without - MAE with) / MAE without, in percent.
inline double improvement_pct(double mae_with, double mae_without) {
    return mae_without > 0 ? 100.0 * (mae_without - mae_with) / mae_without : 0.0;
}

struct AblationResult {
    MetricsReport with_events, without_events;
    std::vector<double> improvement_event;   // per horizon, event-driven split
    std::vector<double> improvement_overall; // per horizon
    ForecastModel model_with, model_without;
};

/// Trains two models from identical seeds, the second seeing an all-PAD
/// summary for every date, and compares them.
inline AblationResult ablate_events(const Dataset& ds, const SummaryStore& summaries, PipelineConfig cfg,
                                    const TrainProgress& progress = {}) {
    AblationResult r;
    cfg.use_events = true;
    r.model_with = train_model(ds, summaries, cfg, progress);
    cfg.use_events = false;
    r.model_without = train_model(ds, summaries, cfg, progress);
    r.with_events = evaluate(r.model_with, ds, summaries);
    r.without_events = evaluate(r.model_without, ds, summaries);
    for (std::size_t h = 1; h <= r.with_events.horizons(); ++h) {
        r.improvement_event.push_back(improvement_pct(r.with_events.at(h, Split::EventDriven).mae,
                                                      r.without_events.at(h, Split::EventDriven).mae));
        r.improvement_overall.push_back(
            improvement_pct(r.with_events.at(h, Split::Overall).mae, r.without_events.at(h, Split::Overall).mae));
    }
    return r;
}

struct SweepResult {
    std::vector<double> grid;
    std::vector<MetricsReport> reports;
    std::vector<double> validated_lambdas;
    double max_fast_path_error = 0; // largest relative gap to full recomputation
};

inline std::vector<double> default_lambda_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
    return g;
}

/// Scores every grid point from one pass of cached head outputs, then checks
/// three random grid points against a full forward pass at that lambda.
inline SweepResult sweep_lambda(ForecastModel& m, const Dataset& ds, const SummaryStore& summaries,
                                std::vector<double> grid, std::uint64_t seed = 7, double tolerance = 1e-5) {
    if (grid.empty()) throw DataError("lambda grid is empty");
    std::sort(grid.begin(), grid.end());
    for (double l : grid)
        if (l < 0.0 || l > 1.0) throw DataError("lambda grid values must lie in [0, 1]");
    SweepResult res;
    res.grid = grid;
    const auto cached = predict(m, ds, summaries, m.config.train.lambda);
    for (double l : grid) res.reports.push_back(score(cached, l));

    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    for (int k = 0; k < 3; ++k) {
        const double l = grid[pick(rng)];
        res.validated_lambdas.push_back(l);
        const auto full = predict(m, ds, summaries, l);
        for (std::size_t i = 0; i < full.blended.size(); ++i) {
            const double fast = l * cached.trend[i] + (1.0 - l) * cached.event[i];
            const double gap = std::abs(fast - full.blended[i]) / std::max(1.0, std::abs(full.blended[i]));
            res.max_fast_path_error = std::max(res.max_fast_path_error, gap);
        }
    }
    if (res.max_fast_path_error > tolerance)
        throw RuntimeError("lambda fast path disagrees with recomputation (relative gap " +
                           text::format_double(res.max_fast_path_error) + ")");
    return res;
}

/// Predicts date t+h with the value observed `period` days earlier, at the
/// same origins the model is evaluated on.
inline PredictionSet seasonal_naive(const Dataset& ds, const PipelineConfig& cfg, std::size_t period = 7) {
    const auto H = cfg.model.horizons;
    if (period < H) throw DataError("seasonal period must cover the forecast horizon");
    PredictionSet out;
    out.horizons = H;
    for (std::size_t ri = 0; ri < ds.regions.size(); ++ri) {
        const auto& r = ds.regions[ri];
        const auto [lo, hi] = eval_origins(r.size(), cfg);
        if (lo >= hi) throw InsufficientData("region " + r.country + "/" + r.region + " has no evaluation origins");
        for (std::size_t o = lo; o < hi; ++o) {
            out.region.push_back(ri);
            out.origin.push_back(o);
            for (std::size_t j = 1; j <= H; ++j) {
                if (o + j < period) throw InsufficientData("history shorter than the seasonal period");
                const double p = r.target[o + j - period];
                out.trend.push_back(p), out.event.push_back(p), out.blended.push_back(p);
                out.truth.push_back(r.target[o + j]);
                out.mask.push_back(r.event_mask[o + j] ? 1 : 0);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report files

inline std::string report_csv(const MetricsReport& rep) {
    std::string out = "horizon,split,mae,mse,n\n";
    for (std::size_t h = 1; h <= rep.horizons(); ++h)
        for (Split s : {Split::Overall, Split::EventDriven}) {
            const auto& c = rep.at(h, s);
            out += std::to_string(h) + "," + to_string(s) + "," + text::format_double(c.mae) + "," +
                   text::format_double(c.mse) + "," + std::to_string(c.n) + "\n";
        }
    return out;
}

inline std::string sweep_csv(const SweepResult& sw) {
    std::string out = "lambda,horizon,split,mae,mse\n";
    for (std::size_t g = 0; g < sw.grid.size(); ++g)
        for (std::size_t h = 1; h <= sw.reports[g].horizons(); ++h)
            for (Split s : {Split::Overall, Split::EventDriven}) {
                const auto& c = sw.reports[g].at(h, s);
                out += text::format_double(sw.grid[g]) + "," + std::to_string(h) + "," + to_string(s) + "," +
                       text::format_double(c.mae) + "," + text::format_double(c.mse) + "\n";
            }
    return out;
}

inline nlohmann::json to_json(const MetricsReport& rep) {
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t h = 1; h <= rep.horizons(); ++h)
        for (Split s : {Split::Overall, Split::EventDriven}) {
            const auto& c = rep.at(h, s);
            j.push_back({{"horizon", h}, {"split", to_string(s)}, {"mae", c.mae}, {"mse", c.mse}, {"n", c.n}});
        }
    return j;
}

inline nlohmann::json summary_json(const MetricsReport& rep) {
    return {{"cells", to_json(rep)},
            {"mean_mae_overall", rep.mean_mae(Split::Overall)},
            {"mean_mae_event", rep.mean_mae(Split::EventDriven)}};
}

inline nlohmann::json to_json(const AblationResult& r) {
    return {{"with_events", summary_json(r.with_events)},
            {"without_events", summary_json(r.without_events)},
            {"improvement_event_pct", r.improvement_event},
            {"improvement_overall_pct", r.improvement_overall}};
}

} // namespace eventcast
