#pragma once

#include "eventcast/dataset.hpp"
#include "eventcast/event_db.hpp"
#include "eventcast/model.hpp"
#include "eventcast/reasoner.hpp"
#include "eventcast/semantic_embedder.hpp"
#include "eventcast/summary_parser.hpp"
#include "eventcast/trainer.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <exception>
#include <optional>
#include <set>
#include <thread>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace eventcast {

struct RegionNorm {
    std::string country;
    std::string region;
    std::vector<double> mean; // per variable, target first
    std::vector<double> std;

    bool operator==(const RegionNorm&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RegionNorm, country, region, mean, std)

/// Index of the first held-out day.
inline std::size_t split_index(std::size_t n, double test_fraction) {
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    return n - std::min(n, n_test);
}

inline double series_value(const RegionSeries& r, std::size_t var, std::size_t i) {
    return var == 0 ? r.target[i] : r.features[var - 1][i];
}

/// Per-variable z-score statistics over the training split of one region.
inline RegionNorm fit_norm(const RegionSeries& r, std::size_t n_vars, std::size_t split) {
    if (split == 0) throw InsufficientData("region " + r.region + " has no training days");
    RegionNorm n{r.country, r.region, {}, {}};
    for (std::size_t v = 0; v < n_vars; ++v) {
        double sum = 0;
        for (std::size_t i = 0; i < split; ++i) sum += series_value(r, v, i);
        const double mean = sum / static_cast<double>(split);
        double sq = 0;
        for (std::size_t i = 0; i < split; ++i) sq += (series_value(r, v, i) - mean) * (series_value(r, v, i) - mean);
        double sd = std::sqrt(sq / static_cast<double>(split));
        if (!(sd > 1e-12)) sd = 1.0;
        n.mean.push_back(mean);
        n.std.push_back(sd);
    }
    return n;
}

/// Produces the reasoning text for one (country, date).
using ReasonFn = std::function<RawReasoning(const DayContext&)>;

inline ReasonFn oracle_reasoner(PromptTemplate tmpl = default_template()) {
    return [tmpl = std::move(tmpl)](const DayContext& ctx) { return reason_oracle(ctx, tmpl); };
}

/// Parsed summaries keyed by (country, date).
class SummaryStore {
public:
    using Key = std::pair<std::string, long>;

    void put(const std::string& country, Date d, SummaryFields f) { map_[{country, d.serial()}] = std::move(f); }

    const SummaryFields& at(const std::string& country, Date d) const {
        auto it = map_.find({country, d.serial()});
        if (it == map_.end()) throw DataError("no summary for country " + country + " on " + d.str());
        return it->second;
    }

    bool contains(const std::string& country, Date d) const { return map_.count({country, d.serial()}) != 0; }
    std::size_t size() const { return map_.size(); }

private:
    std::map<Key, SummaryFields> map_;
};

/// Runs the reasoner and parser for every country and date the dataset can
/// forecast into. With workers > 1 the reasoner is called concurrently and
/// must be thread-safe; the result does not depend on the worker count.
inline SummaryStore build_summaries(const Dataset& ds, const EventDatabase& db, std::size_t horizons,
                                    const ReasonFn& reason, std::size_t k = kDefaultFieldCount,
                                    std::size_t workers = 1) {
    std::vector<std::pair<std::string, Date>> keys;
    std::set<SummaryStore::Key> seen;
    for (const auto& r : ds.regions)
        for (std::size_t i = 0; i < r.size() + horizons; ++i)
            if (seen.insert({r.country, r.date(i).serial()}).second) keys.emplace_back(r.country, r.date(i));

    std::vector<std::optional<SummaryFields>> out(keys.size());
    std::vector<std::exception_ptr> errors(keys.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < keys.size();) {
            try {
                out[i] = extract_summary(reason(events_for(db, keys[i].first, keys[i].second)).text, k);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    SummaryStore store;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        store.put(keys[i].first, keys[i].second, std::move(*out[i]));
    }
    return store;
}

/// Vocabulary over summaries of training-split dates, in region then date order.
inline Vocab vocab_from_training(const Dataset& ds, const SummaryStore& store, double test_fraction) {
    std::vector<SummaryFields> corpus;
    std::map<SummaryStore::Key, bool> seen;
    for (const auto& r : ds.regions) {
        const auto split = split_index(r.size(), test_fraction);
        for (std::size_t i = 0; i < split; ++i)
            if (seen.emplace(SummaryStore::Key{r.country, r.date(i).serial()}, true).second)
                corpus.push_back(store.at(r.country, r.date(i)));
    }
    return build_vocab(corpus);
}

/// Token sequences per (country, date); stable addresses for Example::future.
class TokenStore {
public:
    TokenStore(const SummaryStore* summaries, const Vocab* vocab, bool use_events, std::size_t k)
        : summaries_(summaries), vocab_(vocab), use_events_(use_events), pad_(k, Vocab::kPad) {}

    const TokenSeq* get(const std::string& country, Date d) {
        if (!use_events_) return &pad_;
        auto key = SummaryStore::Key{country, d.serial()};
        auto it = cache_.find(key);
        if (it == cache_.end()) it = cache_.emplace(key, flatten_tokens(summaries_->at(country, d), *vocab_)).first;
        return &it->second;
    }

private:
    const SummaryStore* summaries_;
    const Vocab* vocab_;
    bool use_events_;
    TokenSeq pad_;
    std::map<SummaryStore::Key, TokenSeq> cache_;
};

struct PipelineConfig {
    ModelConfig model;
    TrainConfig train;
    double test_fraction = 0.2;
    bool use_events = true;
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = {{"model", c.model}, {"train", c.train}, {"test_fraction", c.test_fraction}, {"use_events", c.use_events}};
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
    if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.use_events = j.value("use_events", c.use_events);
}

/// Everything needed to forecast: parameters, vocab, normalization, config.
struct ForecastModel {
    PipelineConfig config;
    ModelParams<float> params;
    Vocab vocab;
    std::vector<RegionNorm> norms;
    std::vector<double> loss_trajectory;

    const RegionNorm& norm_for(const RegionSeries& r) const {
        for (const auto& n : norms)
            if (n.country == r.country && n.region == r.region) return n;
        throw DataError("model has no normalization for region " + r.country + "/" + r.region);
    }
};

/// Normalized window ending at `origin` (inclusive).
template <class S> HistoryWindow<S> make_window(const RegionSeries& r, const RegionNorm& norm, std::size_t origin,
                                                std::size_t lookback) {
    if (origin + 1 < lookback) throw InsufficientData("origin precedes a full look-back window");
    HistoryWindow<S> w;
    const std::size_t d = norm.mean.size();
    w.x.resize(static_cast<Eigen::Index>(lookback), static_cast<Eigen::Index>(d));
    for (std::size_t t = 0; t < lookback; ++t) {
        const std::size_t i = origin + 1 - lookback + t;
        for (std::size_t v = 0; v < d; ++v)
            w.x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(v)) =
                static_cast<S>((series_value(r, v, i) - norm.mean[v]) / norm.std[v]);
    }
    w.target_index = 0;
    return w;
}

template <class S>
Example<S> make_example(const RegionSeries& r, const RegionNorm& norm, std::size_t origin, const ModelConfig& mc,
                        TokenStore& tokens) {
    Example<S> ex;
    ex.window = make_window<S>(r, norm, origin, mc.lookback);
    ex.target.resize(static_cast<Eigen::Index>(mc.horizons));
    for (std::size_t j = 1; j <= mc.horizons; ++j) {
        ex.future.push_back(tokens.get(r.country, r.date(origin + j)));
        const double y = origin + j < r.size() ? (r.target[origin + j] - norm.mean[0]) / norm.std[0] : 0.0;
        ex.target(static_cast<Eigen::Index>(j - 1)) = static_cast<S>(y);
    }
    return ex;
}

/// First and one-past-last origins whose targets all lie in the training split.
inline std::pair<std::size_t, std::size_t> train_origins(std::size_t n, const PipelineConfig& c) {
    const auto split = split_index(n, c.test_fraction);
    const std::size_t lo = c.model.lookback - 1;
    const std::size_t hi = split >= c.model.horizons + 1 ? split - c.model.horizons : 0;
    return {lo, std::max(lo, hi)};
}

/// Origins whose first target is the first held-out day onward.
inline std::pair<std::size_t, std::size_t> eval_origins(std::size_t n, const PipelineConfig& c) {
    const auto split = split_index(n, c.test_fraction);
    const std::size_t lo = std::max(split, c.model.lookback) - 1;
    const std::size_t hi = n >= c.model.horizons ? n - c.model.horizons : 0;
    return {lo, std::max(lo, hi)};
}

using TrainProgress = std::function<void(std::size_t epoch, double loss)>;

/// Trains a model on the dataset's training split. The config's vocab size
/// and variable count are derived from the data.
inline ForecastModel train_model(const Dataset& ds, const SummaryStore& summaries, PipelineConfig cfg,
                                 const TrainProgress& progress = {}) {
    if (ds.regions.empty()) throw InsufficientData("dataset has no regions");
    ForecastModel m;
    m.vocab = vocab_from_training(ds, summaries, cfg.test_fraction);
    cfg.model.n_vars = ds.n_vars();
    cfg.model.target_index = 0;
    cfg.model.vocab_size = m.vocab.size();
    m.config = cfg;

    TokenStore tokens(&summaries, &m.vocab, cfg.use_events, kDefaultFieldCount);
    std::vector<Example<float>> data;
    for (const auto& r : ds.regions) {
        const auto split = split_index(r.size(), cfg.test_fraction);
        if (split < cfg.model.lookback + cfg.model.horizons)
            throw InsufficientData("region " + r.country + "/" + r.region + " is too short to train on");
        m.norms.push_back(fit_norm(r, ds.n_vars(), split));
        const auto [lo, hi] = train_origins(r.size(), cfg);
        for (std::size_t o = lo; o < hi; ++o) data.push_back(make_example<float>(r, m.norms.back(), o, cfg.model, tokens));
    }
    Rng init_rng(cfg.train.seed ^ 0x9e3779b97f4a7c15ULL);
    m.params = ModelParams<float>::init(cfg.model, init_rng);
    if (cfg.train.epochs > 0) m.loss_trajectory = train<float>(m.params, cfg.model, cfg.train, data, progress).epoch_loss;
    return m;
}

} // namespace eventcast
