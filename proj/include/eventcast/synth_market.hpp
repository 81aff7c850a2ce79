#pragma once

#include "eventcast/dataset.hpp"
#include "eventcast/date.hpp"
#include "eventcast/event_db.hpp"
#include "eventcast/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace eventcast {

struct ScenarioConfig {
    std::size_t countries = 4;
    std::size_t regions_per_country = 10;
    std::size_t days = 730;
    std::string start_date = "2023-01-01";

    double level_min = 50.0;
    double level_max = 150.0;
    double trend_slope = 3e-4;      // max daily drift as a fraction of level
    double weekly_amplitude = 0.15; // fraction of level
    double noise = 0.05;            // noise sd as a fraction of level

    double promo_share = 0.30;
    double holiday_share = 0.15;
    double overlap_target = 0.38;

    double promo_uplift_min = 0.85;
    double promo_uplift_max = 1.20;
    double national_drop_min = 0.40;
    double national_drop_max = 0.50;
    double state_drop_min = 0.30;
    double state_drop_max = 0.40;
    double religious_drop_min = 0.20;
    double religious_drop_max = 0.40;
    double cultural_uplift_min = 0.10;
    double cultural_uplift_max = 0.30;
    std::size_t religious_pre_days = 2;

    /// Multiplies every planted effect; 0 gives a scenario with events on
    /// record but no effect on demand.
    double effect_scale = 1.0;
    std::uint64_t seed = 7;

    Date start() const { return Date::parse(start_date); }

    void validate() const {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (countries == 0 || regions_per_country == 0 || days == 0) throw DataError("scenario sizes must be positive");
        if (countries > 99) throw DataError("at most 99 countries");
        if (!in01(promo_share) || !in01(holiday_share) || !in01(overlap_target))
            throw DataError("event shares must lie in [0, 1]");
        if (promo_uplift_min < 0 || promo_uplift_min > promo_uplift_max)
            throw DataError("promo uplift range is invalid");
        for (auto [lo, hi] : {std::pair{national_drop_min, national_drop_max}, std::pair{state_drop_min, state_drop_max},
                              std::pair{religious_drop_min, religious_drop_max}})
            if (lo < 0 || hi >= 1 || lo > hi) throw DataError("drop ranges must satisfy 0 <= min <= max < 1");
        if (level_min <= 0 || level_min > level_max) throw DataError("level range is invalid");
        if (noise < 0 || weekly_amplitude < 0 || trend_slope < 0 || effect_scale < 0)
            throw DataError("scale parameters must be non-negative");
        start();
    }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScenarioConfig, countries, regions_per_country, days, start_date,
                                                level_min, level_max, trend_slope, weekly_amplitude, noise,
                                                promo_share, holiday_share, overlap_target, promo_uplift_min,
                                                promo_uplift_max, national_drop_min, national_drop_max,
                                                state_drop_min, state_drop_max, religious_drop_min,
                                                religious_drop_max, cultural_uplift_min, cultural_uplift_max,
                                                religious_pre_days, effect_scale, seed)

/// Ground truth planted for one country, indexed by day offset.
struct PlantedEvents {
    std::string country;
    std::vector<double> factor;       // multiplicative day factor before effect_scale
    std::vector<double> promo_uplift; // largest active promo uplift, 0 when none
    std::vector<std::uint8_t> promo, holiday;
    std::vector<std::uint8_t> event_count;
    struct Span {
        std::size_t first, last; // inclusive day offsets
    };
    std::vector<Span> religious;
    std::size_t pre_days = 0;
};

struct SyntheticMarket {
    Dataset dataset;
    EventDatabase db;
    std::vector<PlantedEvents> planted;
};

inline double campaign_uplift(int level, double lo, double hi) { return lo + (hi - lo) * (level - 1) / 11.0; }

inline double incentive_uplift(const IncentiveRule& r) {
    const std::string t = text::lower(r.incentive_type);
    if (t.find("free shipping") != std::string::npos) return 1.05;
    if (t.find("subsidy") != std::string::npos) return 0.95;
    if (t.find("rebate") != std::string::npos) return 0.90;
    if (t.find("cashback") != std::string::npos) return 0.85;
    if (t.find("logistics") != std::string::npos) {
        double threshold = 0;
        for (char c : r.condition)
            if (c >= '0' && c <= '9') {
                threshold = c - '0';
                break;
            }
        return 1.20 - 0.05 * threshold;
    }
    return 0.85;
}

namespace detail {

inline std::string country_code(std::size_t i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02zu", i + 1);
    return buf;
}

inline std::string region_code(std::size_t i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "R%02zu", i + 1);
    return buf;
}

inline Rng derived_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
    return Rng(seq);
}

struct DayState {
    int holiday = -1; // index into placed holidays
    bool reserved = false;
    bool religious = false;
    int promos = 0;
    int incentives = 0;
    int events() const { return (holiday >= 0 ? 1 : 0) + promos + incentives; }
};

class CountryPlanner {
public:
    CountryPlanner(const ScenarioConfig& cfg, std::size_t country_index)
        : cfg_(cfg), code_(country_code(country_index)), n_(cfg.days), start_(cfg.start()),
          rng_(derived_rng(cfg.seed, country_index, 0x5eed)), days_(n_) {}

    void run(EventDatabase& db, PlantedEvents& out) {
        place_holidays(db);
        place_promos(db);
        place_incentives(db);
        finish(out);
    }

private:
    using Dist = std::uniform_int_distribution<std::size_t>;

    std::size_t pick(std::size_t lo, std::size_t hi) { return Dist(lo, hi)(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int level() { return static_cast<int>(pick(1, 12)); }
    Date day(std::size_t i) const { return start_ + static_cast<long>(i); }

    std::size_t count_if(bool (*pred)(const DayState&)) const {
        return static_cast<std::size_t>(std::count_if(days_.begin(), days_.end(), pred));
    }
    double overlap() const {
        auto any = count_if([](const DayState& d) { return d.events() >= 1; });
        auto multi = count_if([](const DayState& d) { return d.events() >= 2; });
        return any ? static_cast<double>(multi) / static_cast<double>(any) : 0.0;
    }
    std::size_t promo_days() const {
        return count_if([](const DayState& d) { return d.promos + d.incentives > 0; });
    }

    void place_holidays(EventDatabase& db) {
        static const char* national[] = {"National Day", "Independence Day", "Labour Day", "Founders' Day",
                                         "Constitution Day", "Unity Day"};
        static const char* state[] = {"Sultan's Birthday", "State Day", "Regional Heritage Day", "Provincial Day"};
        static const char* cultural[] = {"Lantern Festival", "Harvest Festival", "Kite Festival", "Lunar New Year"};
        static const char* religious[] = {"Eid al-Fitr", "Eid al-Adha", "Vesak Day", "Deepavali", "Good Friday",
                                          "Christmas"};
        const auto target = static_cast<std::size_t>(std::llround(cfg_.holiday_share * static_cast<double>(n_)));
        std::size_t covered = 0;
        for (int attempt = 0; covered < target && attempt < 100000; ++attempt) {
            const double r = uniform(0, 1);
            enum { Nat, St, Cul, Rel } kind = r < 0.3 ? Nat : r < 0.5 ? St : r < 0.75 ? Cul : Rel;
            const std::size_t len = kind == Rel ? pick(2, 4) : kind == Cul ? pick(1, 3) : pick(1, 2);
            const std::size_t pre = kind == Rel ? cfg_.religious_pre_days : 0;
            if (n_ < len + pre + 2) break;
            const std::size_t s = pick(pre + 1, n_ - len - 1);
            bool clash = false;
            for (std::size_t i = s - pre - 1; i <= s + len && !clash; ++i) clash = days_[i].reserved;
            if (clash) continue;

            HolidayEntry h;
            h.country = code_;
            h.start = day(s);
            h.end = day(s + len - 1);
            double f = 1.0;
            switch (kind) {
            case Nat:
                h.name = national[pick(0, 5)], h.kind = HolidayKind::Public;
                f = 1.0 - uniform(cfg_.national_drop_min, cfg_.national_drop_max);
                break;
            case St:
                h.name = state[pick(0, 3)], h.kind = HolidayKind::Public;
                f = 1.0 - uniform(cfg_.state_drop_min, cfg_.state_drop_max);
                break;
            case Cul:
                h.name = cultural[pick(0, 3)], h.kind = HolidayKind::Cultural;
                f = 1.0 + uniform(cfg_.cultural_uplift_min, cfg_.cultural_uplift_max);
                break;
            case Rel:
                h.name = religious[pick(0, 5)], h.kind = HolidayKind::Religious;
                f = 1.0 - uniform(cfg_.religious_drop_min, cfg_.religious_drop_max);
                break;
            }
            const int id = static_cast<int>(holiday_factor_.size());
            holiday_factor_.push_back(f);
            for (std::size_t i = s - pre; i < s + len; ++i) days_[i].reserved = true;
            for (std::size_t i = s; i < s + len; ++i) {
                days_[i].holiday = id;
                days_[i].religious = kind == Rel;
            }
            covered += len;
            db.holidays.push_back(h);
            if (kind == Rel) {
                religious_.push_back({s, s + len - 1});
                if (pre > 0) add_campaign(db, "Pre-" + h.name + " Sale", s - pre, s - 1, {"All categories"});
            }
        }
    }

    void add_campaign(EventDatabase& db, std::string name, std::size_t first, std::size_t last,
                      std::vector<std::string> scope) {
        CampaignEntry c{code_, std::move(name), day(first), day(last), std::move(scope), level()};
        const double u = campaign_uplift(c.level, cfg_.promo_uplift_min, cfg_.promo_uplift_max);
        for (std::size_t i = first; i <= last; ++i) {
            days_[i].promos++;
            uplift_[i] = std::max(uplift_[i], u);
        }
        campaign_spans_.push_back({first, last});
        CampaignReport rep{code_, c.start, c.name + " kickoff",
                           "Country " + code_ + " launches " + c.name + " (level " + std::to_string(c.level) +
                               ") across " + text::join(c.scope, ", ") + " from " + c.start.str() + " to " +
                               c.end.str() + ".\nSellers expect heavy traffic."};
        db.campaigns.push_back(std::move(c));
        db.reports.push_back(std::move(rep));
    }

    void place_promos(EventDatabase& db) {
        static const char* names[] = {"Mega Sale", "Payday Sale", "Flash Deals", "Brand Week",
                                      "Mid-Year Sale", "Year-End Sale", "Super Shopping Day", "Clearance Week"};
        static const char* categories[] = {"electronics", "fashion", "home", "beauty", "grocery"};
        const auto target = static_cast<std::size_t>(std::llround(cfg_.promo_share * static_cast<double>(n_)));
        std::size_t serial = 0;
        for (int attempt = 0; promo_days() < target && attempt < 100000; ++attempt) {
            const std::size_t len = pick(3, 7);
            if (n_ < len) break;
            const bool stack = overlap() < cfg_.overlap_target;
            std::size_t s = 0;
            bool found = false;
            for (int tries = 0; tries < 200 && !found; ++tries) {
                s = pick(0, n_ - len);
                bool ok = true, touches_holiday = false;
                for (std::size_t i = s; i < s + len && ok; ++i) {
                    if (days_[i].religious || days_[i].promos || days_[i].incentives) ok = false;
                    if (days_[i].holiday >= 0) touches_holiday = true;
                }
                // a free placement must also stay clear of holidays; a stacked one must hit one
                found = ok && (stack ? touches_holiday : !touches_holiday);
                if (!found && stack && ok && tries > 150) found = true;
            }
            if (!found) continue;
            std::vector<std::string> scope;
            if (pick(0, 2) == 0) {
                scope = {"All categories"};
            } else {
                const std::size_t a = pick(0, 4), b = pick(0, 4);
                scope.push_back(categories[std::min(a, b)]);
                if (a != b) scope.push_back(categories[std::max(a, b)]);
            }
            ++serial;
            add_campaign(db, std::string(names[pick(0, 7)]) + " " + std::to_string(serial), s, s + len - 1,
                         std::move(scope));
        }
    }

    void place_incentives(EventDatabase& db) {
        for (int attempt = 0; overlap() < cfg_.overlap_target && attempt < 100000 && !campaign_spans_.empty();
             ++attempt) {
            const auto [first, last] = campaign_spans_[pick(0, campaign_spans_.size() - 1)];
            const std::size_t len = pick(1, last - first + 1);
            const std::size_t s = pick(first, last - len + 1);
            bool ok = true;
            for (std::size_t i = s; i < s + len; ++i) ok = ok && days_[i].incentives == 0;
            if (!ok) continue;
            IncentiveRule r;
            r.country = code_;
            r.start = day(s);
            r.end = day(s + len - 1);
            switch (pick(0, 4)) {
            case 0:
                r.incentive_type = "Free shipping";
                r.description = "Free shipping on all orders";
                r.condition = "No minimum spend";
                break;
            case 1:
                r.incentive_type = "Seller subsidy";
                r.description = "Platform subsidy for top sellers";
                r.condition = "Top-rated sellers only";
                break;
            case 2:
                r.incentive_type = "Cross-category rebate";
                r.description = "Rebate when buying across categories";
                r.condition = "Two or more categories in one order";
                break;
            case 3: {
                const std::size_t threshold = pick(1, 3);
                r.incentive_type = "Logistics coupon";
                r.description = "Discounted platform logistics";
                r.condition = "Min. threshold " + std::to_string(threshold) + " USD";
                break;
            }
            default:
                r.incentive_type = "Seller cashback";
                r.description = "Cashback funded by sellers";
                r.condition = "While budget lasts";
                break;
            }
            const double u = incentive_uplift(r);
            for (std::size_t i = s; i < s + len; ++i) {
                days_[i].incentives++;
                uplift_[i] = std::max(uplift_[i], u);
            }
            db.incentives.push_back(std::move(r));
        }
    }

    void finish(PlantedEvents& out) {
        out.country = code_;
        out.factor.assign(n_, 1.0);
        out.promo_uplift = uplift_;
        out.promo.assign(n_, 0);
        out.holiday.assign(n_, 0);
        out.event_count.assign(n_, 0);
        out.religious = religious_;
        out.pre_days = cfg_.religious_pre_days;
        for (std::size_t i = 0; i < n_; ++i) {
            const auto& d = days_[i];
            double f = 1.0;
            if (d.promos + d.incentives > 0) f *= 1.0 + uplift_[i], out.promo[i] = 1;
            if (d.holiday >= 0) f *= holiday_factor_[static_cast<std::size_t>(d.holiday)], out.holiday[i] = 1;
            out.factor[i] = f;
            out.event_count[i] = static_cast<std::uint8_t>(std::min(d.events(), 255));
        }
    }

    const ScenarioConfig& cfg_;
    std::string code_;
    std::size_t n_;
    Date start_;
    Rng rng_;
    std::vector<DayState> days_;
    std::vector<double> holiday_factor_;
    std::vector<double> uplift_ = std::vector<double>(n_, 0.0);
    std::vector<std::pair<std::size_t, std::size_t>> campaign_spans_;
    std::vector<PlantedEvents::Span> religious_;
};

} // namespace detail

inline SyntheticMarket generate(const ScenarioConfig& cfg) {
    cfg.validate();
    SyntheticMarket m;
    m.dataset.n_features = 2;
    const Date start = cfg.start();
    const double two_pi = 2.0 * std::acos(-1.0);
    for (std::size_t c = 0; c < cfg.countries; ++c) {
        PlantedEvents planted;
        detail::CountryPlanner(cfg, c).run(m.db, planted);
        for (std::size_t r = 0; r < cfg.regions_per_country; ++r) {
            // Series draws never depend on event placement, so the baseline is
            // identical across effect settings.
            Rng rng = detail::derived_rng(cfg.seed, c + 1, r + 1);
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            std::normal_distribution<double> gauss(0.0, 1.0);
            const double level = cfg.level_min + (cfg.level_max - cfg.level_min) * u01(rng);
            const double slope = level * cfg.trend_slope * u01(rng);
            const double amp = level * cfg.weekly_amplitude * (0.5 + 0.5 * u01(rng));
            const double phase = two_pi * u01(rng);
            const double floor = 0.05 * level;

            RegionSeries s;
            s.country = detail::country_code(c);
            s.region = detail::region_code(r);
            s.start = start;
            s.features.assign(2, {});
            for (std::size_t t = 0; t < cfg.days; ++t) {
                const double z_target = gauss(rng), z_visits = gauss(rng);
                const double td = static_cast<double>(t);
                const double base = std::max(floor, level + slope * td + amp * std::sin(two_pi * td / 7.0 + phase));
                const double effect = cfg.effect_scale * (planted.factor[t] - 1.0);
                s.baseline.push_back(base);
                s.target.push_back(base * (1.0 + effect) + cfg.noise * level * z_target);
                s.features[0].push_back(3.0 * base * (1.0 + 0.8 * effect) * (1.0 + cfg.noise * z_visits));
                s.features[1].push_back(std::sin(two_pi * (start + static_cast<long>(t)).weekday_index() / 7.0));
                s.event_mask.push_back(planted.event_count[t] > 0);
            }
            m.dataset.regions.push_back(std::move(s));
        }
        m.planted.push_back(std::move(planted));
    }
    return m;
}

/// A day is event-driven when at least one campaign, holiday or incentive of
/// its country spans it.
inline std::vector<std::vector<bool>> label_event_days(const Dataset& ds, const EventDatabase& db) {
    std::vector<std::vector<bool>> out;
    for (const auto& r : ds.regions) {
        std::vector<bool> mask(r.size(), false);
        auto mark = [&](const std::string& country, Date a, Date b) {
            if (country != r.country) return;
            for (std::size_t i = 0; i < r.size(); ++i)
                if (spans(a, b, r.date(i))) mask[i] = true;
        };
        for (const auto& c : db.campaigns) mark(c.country, c.start, c.end);
        for (const auto& h : db.holidays) mark(h.country, h.start, h.end);
        for (const auto& i : db.incentives) mark(i.country, i.start, i.end);
        out.push_back(std::move(mask));
    }
    return out;
}

} // namespace eventcast
