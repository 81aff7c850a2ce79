#pragma once

#include "eventcast/date.hpp"
#include "eventcast/error.hpp"
#include "eventcast/io.hpp"
#include "eventcast/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace eventcast {

struct CampaignEntry {
    std::string country;
    std::string name;
    Date start;
    Date end; // inclusive
    std::vector<std::string> scope; // category names, or {"All categories"}
    int level = 1;                  // 1..12

    auto operator<=>(const CampaignEntry&) const = default;
};

enum class HolidayKind { Religious, Cultural, Public };

inline std::string to_string(HolidayKind k) {
    switch (k) {
    case HolidayKind::Religious: return "Religious";
    case HolidayKind::Cultural: return "Cultural";
    case HolidayKind::Public: return "Public";
    }
    return "Public";
}

inline HolidayKind holiday_kind_from_string(const std::string& s) {
    if (s == "Religious") return HolidayKind::Religious;
    if (s == "Cultural") return HolidayKind::Cultural;
    if (s == "Public") return HolidayKind::Public;
    throw DataError("unknown holiday kind '" + s + "'");
}

struct HolidayEntry {
    std::string country;
    std::string name;
    Date start;
    Date end;
    HolidayKind kind = HolidayKind::Public;

    auto operator<=>(const HolidayEntry&) const = default;
};

struct IncentiveRule {
    std::string country;
    std::string incentive_type;
    Date start;
    Date end;
    std::string description;
    std::string condition;

    auto operator<=>(const IncentiveRule&) const = default;
};

struct CampaignReport {
    std::string country;
    Date date;
    std::string title;
    std::string body; // verbatim, typos and all

    auto operator<=>(const CampaignReport&) const = default;
};

/// The business event store. Immutable once loaded.
struct EventDatabase {
    std::vector<CampaignEntry> campaigns;
    std::vector<HolidayEntry> holidays;
    std::vector<IncentiveRule> incentives;
    std::vector<CampaignReport> reports;

    bool operator==(const EventDatabase&) const = default;

    std::size_t size() const {
        return campaigns.size() + holidays.size() + incentives.size() + reports.size();
    }

    bool knows_country(const std::string& country) const {
        auto match = [&](const auto& r) { return r.country == country; };
        return std::any_of(campaigns.begin(), campaigns.end(), match) ||
               std::any_of(holidays.begin(), holidays.end(), match) ||
               std::any_of(incentives.begin(), incentives.end(), match) ||
               std::any_of(reports.begin(), reports.end(), match);
    }
};

struct ActiveHoliday {
    HolidayEntry entry;
    long day_index = 1; // 1 on the first day of the span

    bool operator==(const ActiveHoliday&) const = default;
};

/// A holiday starting shortly after the queried date.
struct UpcomingHoliday {
    HolidayEntry entry;
    long days_until = 1;

    bool operator==(const UpcomingHoliday&) const = default;
};

/// Everything the database knows about one country on one date.
/// Active lists only hold records whose span contains the date; the
/// upcoming list is a separate lookahead used to recognise pre-holiday days.
struct DayContext {
    std::string country;
    Date date;
    std::vector<CampaignEntry> active_campaigns;
    std::vector<ActiveHoliday> active_holidays;
    std::vector<IncentiveRule> active_incentives;
    std::vector<CampaignReport> reports_for_day;
    std::vector<UpcomingHoliday> upcoming_holidays;

    bool operator==(const DayContext&) const = default;

    bool empty() const {
        return active_campaigns.empty() && active_holidays.empty() && active_incentives.empty() &&
               reports_for_day.empty();
    }
};

// ---------------------------------------------------------------------------
// JSON records

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw DataError(std::string("missing field '") + name + "'");
    return *it;
}

inline std::string string_field(const nlohmann::json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_string()) throw DataError(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

inline Date date_field(const nlohmann::json& j, const char* name) {
    return Date::parse(string_field(j, name));
}

inline void require_country(const std::string& c) {
    if (c.empty()) throw DataError("country must be nonempty");
}

} // namespace detail

inline nlohmann::json to_json(const CampaignEntry& c) {
    return {{"country", c.country}, {"name", c.name},   {"start", c.start.str()},
            {"end", c.end.str()},   {"scope", c.scope}, {"level", c.level}};
}

inline nlohmann::json to_json(const HolidayEntry& h) {
    return {{"country", h.country},   {"name", h.name},
            {"start", h.start.str()}, {"end", h.end.str()},
            {"kind", to_string(h.kind)}};
}

inline nlohmann::json to_json(const IncentiveRule& r) {
    return {{"country", r.country},
            {"incentive_type", r.incentive_type},
            {"start", r.start.str()},
            {"end", r.end.str()},
            {"description", r.description},
            {"condition", r.condition}};
}

inline CampaignEntry campaign_from_json(const nlohmann::json& j) {
    CampaignEntry c;
    c.country = detail::string_field(j, "country");
    detail::require_country(c.country);
    c.name = detail::string_field(j, "name");
    c.start = detail::date_field(j, "start");
    c.end = detail::date_field(j, "end");
    const auto& scope = detail::field(j, "scope");
    if (scope.is_string()) {
        c.scope = {scope.get<std::string>()};
    } else if (scope.is_array()) {
        for (const auto& s : scope) {
            if (!s.is_string()) throw DataError("scope entries must be strings");
            c.scope.push_back(s.get<std::string>());
        }
    } else {
        throw DataError("field 'scope' must be a string or an array of strings");
    }
    const auto& level = detail::field(j, "level");
    if (!level.is_number_integer()) throw DataError("field 'level' must be an integer");
    c.level = level.get<int>();
    if (c.level < 1 || c.level > 12) throw DataError("campaign level must be within 1..12");
    return c;
}

inline HolidayEntry holiday_from_json(const nlohmann::json& j) {
    HolidayEntry h;
    h.country = detail::string_field(j, "country");
    detail::require_country(h.country);
    h.name = detail::string_field(j, "name");
    h.start = detail::date_field(j, "start");
    h.end = detail::date_field(j, "end");
    h.kind = holiday_kind_from_string(detail::string_field(j, "kind"));
    return h;
}

inline IncentiveRule incentive_from_json(const nlohmann::json& j) {
    IncentiveRule r;
    r.country = detail::string_field(j, "country");
    detail::require_country(r.country);
    r.incentive_type = detail::string_field(j, "incentive_type");
    r.start = detail::date_field(j, "start");
    r.end = detail::date_field(j, "end");
    r.description = detail::string_field(j, "description");
    r.condition = detail::string_field(j, "condition");
    return r;
}

// ---------------------------------------------------------------------------
// Report files

inline std::string report_header(const CampaignReport& r) {
    return "[Country " + r.country + " | " + r.date.str() + " | " + r.title + "]";
}

/// Parses `[Country NN | YYYY-MM-DD | Title]` followed by a newline and the body.
inline CampaignReport parse_report(std::string_view content) {
    auto nl = content.find('\n');
    std::string_view header = content.substr(0, nl);
    std::string_view body = nl == std::string_view::npos ? std::string_view{} : content.substr(nl + 1);
    constexpr std::string_view prefix = "[Country ";
    constexpr std::string_view sep = " | ";
    if (header.substr(0, prefix.size()) != prefix || header.empty() || header.back() != ']')
        throw DataError("report header must look like [Country NN | YYYY-MM-DD | Title]");
    std::string_view inner = header.substr(prefix.size(), header.size() - prefix.size() - 1);
    auto p1 = inner.find(sep);
    if (p1 == std::string_view::npos) throw DataError("report header is missing ' | ' separators");
    auto rest = inner.substr(p1 + sep.size());
    auto p2 = rest.find(sep);
    if (p2 == std::string_view::npos) throw DataError("report header is missing the title");
    CampaignReport r;
    r.country = std::string(inner.substr(0, p1));
    detail::require_country(r.country);
    r.date = Date::parse(rest.substr(0, p2));
    r.title = std::string(rest.substr(p2 + sep.size()));
    r.body = std::string(body);
    return r;
}

inline std::string serialize_report(const CampaignReport& r) { return report_header(r) + "\n" + r.body; }

// ---------------------------------------------------------------------------
// Load / save

struct LoadOptions {
    /// Skip malformed records instead of failing the whole load.
    bool permissive = false;
};

struct LoadReport {
    std::size_t campaigns = 0;
    std::size_t holidays = 0;
    std::size_t incentives = 0;
    std::size_t reports = 0;
    std::vector<std::string> skipped; // diagnostics for records dropped in permissive mode
};

namespace detail {

inline std::string line_label(const CampaignEntry& c) { return "campaign '" + c.name + "'"; }
inline std::string line_label(const HolidayEntry& h) { return "holiday '" + h.name + "'"; }
inline std::string line_label(const IncentiveRule& r) { return "incentive '" + r.incentive_type + "'"; }

template <class Record, class Parse>
void load_jsonl(const std::filesystem::path& file, Parse parse, std::vector<Record>& out,
                const LoadOptions& opts, LoadReport& report) {
    if (!std::filesystem::exists(file)) return;
    const std::string content = io::read_file(file);
    const std::string name = file.filename().string();
    std::set<Record> seen;
    std::size_t lineno = 0;
    for (const auto& raw : text::split(content, '\n')) {
        ++lineno;
        auto line = text::trim(raw);
        if (line.empty()) continue;
        try {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw MalformedRecord(name, lineno, std::string("invalid JSON: ") + e.what());
            }
            if (!j.is_object()) throw MalformedRecord(name, lineno, "record must be a JSON object");
            Record rec;
            try {
                rec = parse(j);
            } catch (const MalformedRecord&) {
                throw;
            } catch (const DataError& e) {
                throw MalformedRecord(name, lineno, e.what());
            }
            if (rec.end < rec.start) throw DateOrderViolation(name, lineno, line_label(rec));
            if (!seen.insert(rec).second) throw MalformedRecord(name, lineno, "duplicate record");
            out.push_back(std::move(rec));
        } catch (const DataError& e) {
            if (!opts.permissive) throw;
            report.skipped.emplace_back(e.what());
        }
    }
}

} // namespace detail

/// Loads `campaigns.jsonl`, `holidays.jsonl`, `incentives.jsonl` and `reports/*.txt`
/// from a directory. Missing files are treated as empty tables. Without the
/// permissive flag the first bad record aborts the load and nothing is returned.
inline EventDatabase load_database(const std::filesystem::path& root, const LoadOptions& opts = {},
                                   LoadReport* report_out = nullptr) {
    if (!std::filesystem::is_directory(root))
        throw DataError("event database directory not found: " + root.string());
    EventDatabase db;
    LoadReport report;
    detail::load_jsonl(root / "campaigns.jsonl", campaign_from_json, db.campaigns, opts, report);
    detail::load_jsonl(root / "holidays.jsonl", holiday_from_json, db.holidays, opts, report);
    detail::load_jsonl(root / "incentives.jsonl", incentive_from_json, db.incentives, opts, report);

    const auto report_dir = root / "reports";
    if (std::filesystem::is_directory(report_dir)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(report_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        std::set<CampaignReport> seen;
        for (const auto& f : files) {
            try {
                CampaignReport r;
                try {
                    r = parse_report(io::read_file(f));
                } catch (const DataError& e) {
                    throw MalformedRecord("reports/" + f.filename().string(), 1, e.what());
                }
                if (!seen.insert(r).second)
                    throw MalformedRecord("reports/" + f.filename().string(), 1, "duplicate record");
                db.reports.push_back(std::move(r));
            } catch (const DataError& e) {
                if (!opts.permissive) throw;
                report.skipped.emplace_back(e.what());
            }
        }
    }
    report.campaigns = db.campaigns.size();
    report.holidays = db.holidays.size();
    report.incentives = db.incentives.size();
    report.reports = db.reports.size();
    if (report_out) *report_out = std::move(report);
    return db;
}

inline void save_database(const EventDatabase& db, const std::filesystem::path& root) {
    std::filesystem::create_directories(root);
    auto dump = [](const auto& rows) {
        std::string out;
        for (const auto& r : rows) out += to_json(r).dump() + "\n";
        return out;
    };
    io::write_file_atomic(root / "campaigns.jsonl", dump(db.campaigns));
    io::write_file_atomic(root / "holidays.jsonl", dump(db.holidays));
    io::write_file_atomic(root / "incentives.jsonl", dump(db.incentives));
    const auto report_dir = root / "reports";
    std::filesystem::remove_all(report_dir);
    std::filesystem::create_directories(report_dir);
    for (std::size_t i = 0; i < db.reports.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "r%06zu.txt", i);
        io::write_file_atomic(report_dir / name, serialize_report(db.reports[i]));
    }
}

// ---------------------------------------------------------------------------
// Queries

struct QueryOptions {
    /// Throw UnknownCountry for codes the database has never seen.
    bool strict = false;
    /// Holidays starting within this many days after the date are listed as upcoming.
    int lookahead_days = 3;
};

inline bool spans(Date start, Date end, Date d) { return start <= d && d <= end; }

/// Records for one country whose span contains `date`, sorted by start date then name.
inline DayContext events_for(const EventDatabase& db, const std::string& country, Date date,
                             const QueryOptions& opts = {}) {
    if (opts.strict && !db.knows_country(country)) throw UnknownCountry(country);
    DayContext ctx;
    ctx.country = country;
    ctx.date = date;
    for (const auto& c : db.campaigns)
        if (c.country == country && spans(c.start, c.end, date)) ctx.active_campaigns.push_back(c);
    for (const auto& h : db.holidays) {
        if (h.country != country) continue;
        if (spans(h.start, h.end, date)) {
            ctx.active_holidays.push_back({h, (date - h.start) + 1});
        } else if (h.start > date && h.start - date <= opts.lookahead_days) {
            ctx.upcoming_holidays.push_back({h, h.start - date});
        }
    }
    for (const auto& r : db.incentives)
        if (r.country == country && spans(r.start, r.end, date)) ctx.active_incentives.push_back(r);
    for (const auto& r : db.reports)
        if (r.country == country && r.date == date) ctx.reports_for_day.push_back(r);

    auto by_start_name = [](const auto& a, const auto& b) {
        return std::tie(a.start, a.name) < std::tie(b.start, b.name);
    };
    std::stable_sort(ctx.active_campaigns.begin(), ctx.active_campaigns.end(), by_start_name);
    std::stable_sort(ctx.active_holidays.begin(), ctx.active_holidays.end(),
                     [&](const auto& a, const auto& b) { return by_start_name(a.entry, b.entry); });
    std::stable_sort(ctx.upcoming_holidays.begin(), ctx.upcoming_holidays.end(),
                     [&](const auto& a, const auto& b) { return by_start_name(a.entry, b.entry); });
    std::stable_sort(ctx.active_incentives.begin(), ctx.active_incentives.end(),
                     [](const auto& a, const auto& b) {
                         return std::tie(a.start, a.incentive_type) < std::tie(b.start, b.incentive_type);
                     });
    std::stable_sort(ctx.reports_for_day.begin(), ctx.reports_for_day.end(),
                     [](const auto& a, const auto& b) { return a.title < b.title; });
    return ctx;
}

} // namespace eventcast
