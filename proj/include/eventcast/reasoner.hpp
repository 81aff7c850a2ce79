#pragma once

#include "eventcast/digest.hpp"
#include "eventcast/event_db.hpp"
#include "eventcast/io.hpp"
#include "eventcast/prompt_builder.hpp"
#include "eventcast/text.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace eventcast {

enum class ReasoningSource { Oracle, Remote };

inline std::string to_string(ReasoningSource s) { return s == ReasoningSource::Oracle ? "oracle" : "remote"; }

/// Full reasoning response: step-by-step trace plus a <result> block.
struct RawReasoning {
    std::string text;
    ReasoningSource source = ReasoningSource::Oracle;
};

/// Append-only newline-delimited audit trail of every reasoning call.
class AuditLog {
public:
    explicit AuditLog(std::filesystem::path path) : path_(std::move(path)) {
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    }

    void append(const std::string& country, Date date, ReasoningSource source, const std::string& prompt_digest,
                const std::string& response) {
        nlohmann::json rec = {{"timestamp", utc_timestamp()}, {"country", country},
                              {"date", date.str()},           {"source", to_string(source)},
                              {"prompt_digest", prompt_digest}, {"response", response}};
        std::lock_guard lock(mu_);
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        if (!out) throw RuntimeError("cannot append to audit log " + path_.string());
        out << rec.dump() << '\n';
    }

    const std::filesystem::path& path() const { return path_; }

    static std::string utc_timestamp() {
        auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

private:
    std::filesystem::path path_;
    std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Rule-based oracle

/// Holiday names carrying one of these markers are treated as state-level.
inline bool is_state_level_holiday(const HolidayEntry& h) {
    for (const char* marker : {"sultan", "state", "regional", "provincial"})
        if (text::contains_ci(h.name, marker)) return true;
    return false;
}

inline bool is_free_shipping(const IncentiveRule& r) { return text::contains_ci(r.incentive_type, "free shipping"); }
inline bool is_logistics(const IncentiveRule& r) { return text::contains_ci(r.incentive_type, "logistics"); }

/// First decimal number in a free-form condition ("Min. threshold 1 USD" -> 1).
inline std::optional<double> first_number(std::string_view s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) continue;
        std::size_t j = i;
        while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
        while (j > i && s[j - 1] == '.') --j;
        return std::strtod(std::string(s.substr(i, j - i)).c_str(), nullptr);
    }
    return std::nullopt;
}

inline std::string format_amount(double v) {
    if (v == static_cast<double>(static_cast<long long>(v))) return std::to_string(static_cast<long long>(v));
    return text::format_double(v);
}

inline std::string seller_incentive_phrase(const IncentiveRule& r) {
    if (text::contains_ci(r.incentive_type, "subsidy")) return "top sellers' subsidy";
    if (text::contains_ci(r.incentive_type, "rebate")) return "rebate";
    if (text::contains_ci(r.incentive_type, "cashback")) return "cashback";
    return text::lower(r.incentive_type);
}

/// Answers to the default questions, in result-field order, with the
/// one-line reason behind each.
struct OracleAnswers {
    struct Item {
        std::string title;
        std::string reason;
        std::string answer;
        bool in_summary = true;
    };
    std::vector<Item> items;

    std::vector<std::string> summary_fields() const {
        std::vector<std::string> out;
        for (const auto& it : items)
            if (it.in_summary) out.push_back(it.answer);
        return out;
    }
};

inline OracleAnswers answer_questions(const DayContext& ctx) {
    OracleAnswers a;
    const std::string day = ctx.date.str();
    const ActiveHoliday* holiday = ctx.active_holidays.empty() ? nullptr : &ctx.active_holidays.front();

    a.items.push_back({"Country code?", "The prompt states the country code is '" + ctx.country + "'.",
                       "Country code is " + ctx.country});

    if (holiday) {
        a.items.push_back({"Holiday status?",
                           "'" + holiday->entry.name + "' runs from " + holiday->entry.start.str() + " to " +
                               holiday->entry.end.str() + ", so " + day + " is day " +
                               std::to_string(holiday->day_index) + " of it.",
                           "On the " + text::ordinal(holiday->day_index) + " day of the holiday"});
        bool state = is_state_level_holiday(holiday->entry);
        a.items.push_back({"Is it a state-level or national-level holiday?",
                           "'" + holiday->entry.name + "' is " +
                               (state ? "observed only in part of the country." : "observed nationwide."),
                           state ? "state-level holiday" : "national-level holiday"});
        std::string expect = holiday->entry.kind == HolidayKind::Public      ? "travel"
                             : holiday->entry.kind == HolidayKind::Cultural ? "shopping"
                                                                            : "staying home after pre-holiday shopping";
        a.items.push_back({"Shopping or travel?", "It is a " + text::lower(to_string(holiday->entry.kind)) + " holiday.",
                           "Expect " + expect, false});
    } else {
        a.items.push_back({"Holiday status?", "No holiday for country " + ctx.country + " spans " + day + ".",
                           "no holiday"});
        a.items.push_back({"Is it a state-level or national-level holiday?", "There is no holiday on " + day + ".",
                           "no holiday"});
        a.items.push_back({"Shopping or travel?", "There is no holiday on " + day + ".", "Not a holiday", false});
    }

    const IncentiveRule* free_ship = nullptr;
    std::optional<double> threshold;
    std::vector<std::string> seller;
    for (const auto& r : ctx.active_incentives) {
        if (is_free_shipping(r)) {
            if (!free_ship) free_ship = &r;
        } else if (is_logistics(r)) {
            double t = first_number(r.condition).value_or(0.0);
            threshold = threshold ? std::min(*threshold, t) : t;
        } else {
            auto phrase = seller_incentive_phrase(r);
            if (std::find(seller.begin(), seller.end(), phrase) == seller.end()) seller.push_back(phrase);
        }
    }

    if (free_ship) {
        long idx = (ctx.date - free_ship->start) + 1;
        a.items.push_back({"Free-shipping?",
                           "'" + free_ship->incentive_type + "' runs from " + free_ship->start.str() + " to " +
                               free_ship->end.str() + ".",
                           text::ordinal(idx) + " day of the free shipping event"});
    } else {
        a.items.push_back({"Free-shipping?", "No free-shipping rule for country " + ctx.country + " covers " + day + ".",
                           "Non-free shipping event"});
    }

    int max_level = 0;
    const CampaignEntry* top = nullptr;
    for (const auto& c : ctx.active_campaigns)
        if (c.level > max_level) max_level = c.level, top = &c;
    if (top) {
        a.items.push_back({"Campaign in effect?",
                           "'" + top->name + "' (level " + std::to_string(top->level) + ") applies to " +
                               text::join(top->scope, ", ") + " and spans " + top->start.str() + " to " +
                               top->end.str() + ".",
                           "Campaign level " + std::to_string(max_level)});
    } else {
        a.items.push_back({"Campaign in effect?", "No campaign for country " + ctx.country + " spans " + day + ".",
                           "no campaign"});
    }

    if (threshold) {
        a.items.push_back({"Platform logistics event?", "A logistics shipping event is active; its lowest minimum threshold is " +
                                                            format_amount(*threshold) + ".",
                           "Minimum shipping threshold is " + format_amount(*threshold)});
    } else {
        a.items.push_back({"Platform logistics event?", "No logistics shipping event is active on " + day + ".",
                           "no logistics shipping event"});
    }

    if (!seller.empty()) {
        a.items.push_back({"Top seller incentive or rebate?",
                           std::to_string(seller.size()) + " seller incentive(s) are active on " + day + ".",
                           text::join(seller, " + ")});
    } else {
        a.items.push_back({"Top seller incentive or rebate?", "No seller incentive is active on " + day + ".",
                           "no seller incentive"});
    }

    // Demand trend rule table.
    const bool has_campaign = !ctx.active_campaigns.empty();
    const bool pre_holiday = !ctx.upcoming_holidays.empty();
    bool religious_late = false, decrease = false, cultural = false;
    for (const auto& h : ctx.active_holidays) {
        if (h.entry.kind == HolidayKind::Religious) {
            decrease = true;
            if (h.day_index > 1) religious_late = true;
        } else if (h.entry.kind == HolidayKind::Public) {
            decrease = true;
        } else {
            cultural = true;
        }
    }
    const bool increase = has_campaign || !ctx.active_incentives.empty() || cultural;
    std::string trend, why;
    if (max_level >= 10 || (pre_holiday && has_campaign)) {
        trend = "Demand surge";
        why = max_level >= 10 ? "a high-level campaign is active" : "a campaign runs in the days before a holiday";
    } else if (religious_late && !has_campaign) {
        trend = "Demand drop";
        why = "the date falls inside a religious holiday after its first day";
    } else if (increase && !decrease) {
        trend = "Moderate increase";
        why = "promotional signals are active with nothing pulling demand down";
    } else if (decrease && !increase) {
        trend = "Moderate decrease";
        why = "a holiday reduces orders and no promotion offsets it";
    } else {
        trend = "Demand normal";
        why = increase ? "promotional and holiday effects offset each other" : "no event affects the date";
    }
    a.items.push_back({"Expected overall demand trend?", "Combining all factors: " + why + ".", trend});
    return a;
}

inline std::string render_oracle_trace(const OracleAnswers& a) {
    std::string out = "Let's break down the questions one by one:\n\n";
    for (std::size_t i = 0; i < a.items.size(); ++i) {
        const auto& it = a.items[i];
        out += "Q" + std::to_string(i + 1) + ": " + it.title + "\n";
        out += "- Reason: " + it.reason + "\n";
        out += "- Answer: " + it.answer + ".\n\n";
    }
    out += "Summary:\n<result>" + text::join(a.summary_fields(), "; ") + "</result>\n";
    return out;
}

/// Deterministic stand-in for the remote model. Pure in (ctx, template);
/// the template only enters the audit record's prompt digest.
inline RawReasoning reason_oracle(const DayContext& ctx, const PromptTemplate& tmpl, AuditLog* audit = nullptr) {
    RawReasoning r{render_oracle_trace(answer_questions(ctx)), ReasoningSource::Oracle};
    if (audit) {
        auto digest = sha256_hex(render_prompt(ctx, tmpl).rendered);
        audit->append(ctx.country, ctx.date, r.source, digest, r.text);
    }
    return r;
}

} // namespace eventcast
