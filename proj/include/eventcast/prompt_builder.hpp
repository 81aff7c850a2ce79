#pragma once

#include "eventcast/event_db.hpp"
#include "eventcast/io.hpp"
#include "eventcast/text.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace eventcast {

/// Ordered questions plus the closing format instruction. Questions may use
/// the slots [CountryCode], [Date] and [DayOfWeek]; lowercase slots such as
/// [x] are answer placeholders and are left alone.
struct PromptTemplate {
    std::vector<std::string> questions;
    std::string result_format_line;

    bool operator==(const PromptTemplate&) const = default;
};

struct PromptText {
    std::string rendered;
};

/// Number of `;`-separated fields in the <result> pattern of a format line.
/// Uses the pattern following "Format:" when present, else the last one.
inline std::size_t implied_field_count(const std::string& format_line) {
    std::size_t from = 0;
    if (auto f = format_line.find("Format:"); f != std::string::npos) from = f;
    auto open = format_line.find("<result>", from);
    if (open == std::string::npos || from == 0) open = format_line.rfind("<result>");
    if (open == std::string::npos) return 0;
    auto close = format_line.find("</result>", open);
    if (close == std::string::npos) return 0;
    auto inner = std::string_view(format_line).substr(open + 8, close - open - 8);
    return static_cast<std::size_t>(std::count(inner.begin(), inner.end(), ';')) + 1;
}

inline void validate_template(const PromptTemplate& t, std::size_t k) {
    const auto& f = t.result_format_line;
    if (f.find("<result>") == std::string::npos || f.find("</result>") == std::string::npos)
        throw DataError("template format line must contain <result> and </result>");
    if (auto n = implied_field_count(f); n != k)
        throw DataError("template format line implies " + std::to_string(n) + " fields, expected " +
                        std::to_string(k));
}

/// Template files separate blocks with lines containing only `---`.
/// The last block is the format instruction; the others are questions.
inline PromptTemplate parse_template(std::string_view content) {
    std::vector<std::string> blocks;
    std::string current;
    for (const auto& line : text::split(content, '\n')) {
        if (text::trim(line) == "---") {
            blocks.emplace_back(text::trim(current));
            current.clear();
        } else {
            current += line;
            current += '\n';
        }
    }
    blocks.emplace_back(text::trim(current));
    std::erase_if(blocks, [](const std::string& b) { return b.empty(); });
    if (blocks.empty()) throw DataError("prompt template is empty");
    PromptTemplate t;
    t.result_format_line = blocks.back();
    blocks.pop_back();
    t.questions = std::move(blocks);
    return t;
}

inline std::string serialize_template(const PromptTemplate& t) {
    std::string out;
    for (const auto& q : t.questions) out += q + "\n---\n";
    out += t.result_format_line + "\n";
    return out;
}

inline PromptTemplate load_template(const std::filesystem::path& path) {
    return parse_template(io::read_file(path));
}

inline PromptTemplate default_template() {
    PromptTemplate t;
    t.questions = {
        "What is the country code?",
        "Is [Date] within a holiday? If so, specify the name of the holiday and calculate on which day of "
        "the holiday, then answer 'on the [x]th day of the holiday'. If not, respond 'no holiday'.",
        "Is [Date] within a holiday? If so, determine whether the holiday is a state-level or "
        "national-level, then answer 'state-level holiday' or 'national-level holiday'. If not, respond "
        "'no holiday'.",
        "If [Date] is a holiday, should we expect shopping or travel?",
        "Is there a free-shipping promotion? If so, indicate '[x]th day of the free shipping event'; "
        "otherwise 'non-free shipping event'.",
        "What is the campaign in effect on [Date]? Provide the description of campaign and answer "
        "'campaign level [x]'. If none, respond 'no campaign'.",
        "For [Date], considering if it is platform logistics event? If so, check the minimum threshold "
        "amount for the logistics shipping event, and answer 'Minimum shipping threshold is [x]'. If not, "
        "respond 'no logistics shipping event'.",
        "Is there top sellers' incentive or rebate program active on [Date]? If so, describe the incentive "
        "type (e.g., rebate, seller subsidy). If not, respond 'no seller incentive'.",
        "Considering the combination of all factors above (holiday, campaign, logistics, incentives), what "
        "is the expected overall demand trend for [Date]? Answer 'demand surge', 'moderate increase', "
        "'demand normal', 'moderate decrease', or 'demand drop', and briefly explain why.",
    };
    t.result_format_line =
        "Show your step-by-step reasoning, and then summarize your answer in the following format. "
        "Place the summary inside <result>...</result>.\n"
        "Format: <result>Country code is [CountryCode]; No holiday or on the [x]th day of the holiday; "
        "State-level holiday or national-level holiday or no holiday; Non-free shipping event or [x]th day "
        "of the free shipping event; Campaign level [x] or no campaign; Minimum shipping threshold is [x] "
        "or no logistics shipping event; [SellerIncentive] or no seller incentive; "
        "[DemandTrend]</result>";
    return t;
}

// ---------------------------------------------------------------------------
// One-line record renderings used in the Database section.

inline std::string render_record(const CampaignEntry& c) {
    return "Campaign | " + c.country + " | " + c.name + " | " + c.start.str() + " to " + c.end.str() +
           " | " + text::join(c.scope, ", ") + " | level " + std::to_string(c.level);
}

inline std::string render_record(const HolidayEntry& h) {
    return "Holiday | " + h.country + " | " + h.name + " | " + h.start.str() + " to " + h.end.str() +
           " | " + to_string(h.kind);
}

inline std::string render_record(const IncentiveRule& r) {
    return "Incentive | " + r.country + " | " + r.incentive_type + " | " + r.start.str() + " to " +
           r.end.str() + " | " + r.description + " | " + r.condition;
}

inline std::string render_record(const CampaignReport& r) {
    std::string body = text::replace_all(r.body, "\r", "");
    body = text::replace_all(body, "\n", " ");
    return "Report | " + report_header(r) + " " + std::string(text::trim(body));
}

struct RenderOptions {
    /// Reject templates without questions.
    bool strict = false;
};

namespace detail {

inline std::string substitute_slots(const std::string& question, const DayContext& ctx) {
    std::string out;
    std::size_t i = 0;
    while (i < question.size()) {
        if (question[i] == '[') {
            auto close = question.find(']', i);
            if (close != std::string::npos && close > i + 1 && std::isupper(static_cast<unsigned char>(question[i + 1]))) {
                std::string name = question.substr(i + 1, close - i - 1);
                bool ident = std::all_of(name.begin(), name.end(),
                                         [](unsigned char c) { return std::isalnum(c) != 0; });
                if (ident) {
                    if (name == "CountryCode") out += ctx.country;
                    else if (name == "Date") out += ctx.date.str();
                    else if (name == "DayOfWeek") out += ctx.date.weekday_name();
                    else throw UnboundPlaceholder(name);
                    i = close + 1;
                    continue;
                }
            }
        }
        out += question[i++];
    }
    return out;
}

} // namespace detail

/// Renders the prompt for one country and date: preamble, the same-country
/// same-day records, the numbered questions, then the format instruction.
inline PromptText render_prompt(const DayContext& ctx, const PromptTemplate& tmpl, const RenderOptions& opts = {}) {
    if (opts.strict && tmpl.questions.empty()) throw DataError("prompt template has no questions");
    std::string out;
    out += "Given country code " + ctx.country + " and date " + ctx.date.str() +
           ", answer the following questions. To answer the questions, you can retrieve information "
           "from the Database. Think carefully, and provide the reason:\n\n";
    out += "Database:\n";
    std::size_t n = 0;
    for (const auto& c : ctx.active_campaigns) out += "- " + render_record(c) + "\n", ++n;
    for (const auto& h : ctx.active_holidays) out += "- " + render_record(h.entry) + "\n", ++n;
    for (const auto& r : ctx.active_incentives) out += "- " + render_record(r) + "\n", ++n;
    for (const auto& r : ctx.reports_for_day) out += "- " + render_record(r) + "\n", ++n;
    for (const auto& u : ctx.upcoming_holidays)
        out += "- (starts in " + std::to_string(u.days_until) + " days) " + render_record(u.entry) + "\n", ++n;
    if (n == 0) out += "- (no records)\n";
    out += "\n";
    for (std::size_t i = 0; i < tmpl.questions.size(); ++i)
        out += "Q" + std::to_string(i + 1) + ": " + detail::substitute_slots(tmpl.questions[i], ctx) + "\n\n";
    out += tmpl.result_format_line + "\n";
    return {std::move(out)};
}

} // namespace eventcast
