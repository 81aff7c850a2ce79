#include "eventcast/reasoner.hpp"
#include "eventcast/summary_parser.hpp"
#include "eventcast/synth_market.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace eventcast;

TEST(Reasoner, WorkedExampleSummary) {
    auto ctx = events_for(ectest::worked_example_db(), "01", Date(2025, 3, 23));
    auto raw = reason_oracle(ctx, default_template());
    EXPECT_EQ(raw.source, ReasoningSource::Oracle);
    EXPECT_NE(raw.text.find("<result>" + ectest::kWorkedSummary + "</result>"), std::string::npos);
    auto s = extract_summary(raw.text);
    EXPECT_EQ(s.fields[1], "on the 1st day of the holiday");
    EXPECT_EQ(s.fields[2], "state-level holiday");
    EXPECT_EQ(s.fields[5], "minimum shipping threshold is 1");
}

TEST(Reasoner, TraceAnswersEveryQuestion) {
    auto ctx = events_for(ectest::worked_example_db(), "01", Date(2025, 3, 23));
    auto text = reason_oracle(ctx, default_template()).text;
    for (int i = 1; i <= 9; ++i) EXPECT_NE(text.find("Q" + std::to_string(i) + ": "), std::string::npos);
    EXPECT_NE(text.find("Answer: Expect travel."), std::string::npos);
}

TEST(Reasoner, EmptyContext) {
    DayContext ctx;
    ctx.country = "05";
    ctx.date = Date(2025, 6, 1);
    auto s = extract_summary(reason_oracle(ctx, default_template()).text);
    EXPECT_EQ(s.fields, (std::vector<std::string>{"country code is 05", "no holiday", "no holiday",
                                                  "non-free shipping event", "no campaign",
                                                  "no logistics shipping event", "no seller incentive",
                                                  "demand normal"}));
}

TEST(Reasoner, PureInContext) {
    auto ctx = events_for(ectest::reference_db(), "02", Date(2025, 4, 14));
    EXPECT_EQ(reason_oracle(ctx, default_template()).text, reason_oracle(ctx, default_template()).text);
    auto s = extract_summary(reason_oracle(ctx, default_template()).text);
    EXPECT_EQ(s.fields[1], "on the 2nd day of the holiday");
    EXPECT_EQ(s.fields[2], "national-level holiday");
}

TEST(Reasoner, FreeShippingDayIndex) {
    auto ctx = events_for(ectest::reference_db(), "02", Date(2025, 4, 9));
    auto s = extract_summary(reason_oracle(ctx, default_template()).text);
    EXPECT_EQ(s.fields[3], "3rd day of the free shipping event");
    EXPECT_EQ(s.fields[4], "campaign level 10");
    EXPECT_EQ(s.fields[7], "demand surge");
}

TEST(Reasoner, ReligiousLateDayDrops) {
    auto ctx = events_for(ectest::reference_db(), "04", Date(2025, 4, 1));
    auto s = extract_summary(reason_oracle(ctx, default_template()).text);
    EXPECT_EQ(s.fields[7], "demand drop");
}

// Field values re-derived straight from the raw tables for a month of
// generated data.
TEST(Reasoner, FieldsAgreeWithTables) {
    ScenarioConfig sc;
    sc.days = 120;
    sc.regions_per_country = 1;
    auto db = generate(sc).db;
    for (long i = 0; i < 30; ++i) {
        const Date d = sc.start() + 60 + i;
        for (const std::string country : {"01", "02"}) {
            auto s = extract_summary(reason_oracle(events_for(db, country, d), default_template()).text);
            int level = 0;
            for (const auto& c : db.campaigns)
                if (c.country == country && c.start <= d && d <= c.end) level = std::max(level, c.level);
            EXPECT_EQ(s.fields[4], level ? "campaign level " + std::to_string(level) : "no campaign");
            const HolidayEntry* h = nullptr;
            for (const auto& e : db.holidays)
                if (e.country == country && e.start <= d && d <= e.end && (!h || std::tie(e.start, e.name) < std::tie(h->start, h->name)))
                    h = &e;
            EXPECT_EQ(s.fields[1], h ? "on the " + text::ordinal((d - h->start) + 1) + " day of the holiday"
                                     : std::string("no holiday"));
            EXPECT_EQ(s.fields[0], "country code is " + country);
        }
    }
}

TEST(Reasoner, AuditLogAppendsOneLinePerCall) {
    auto dir = ectest::scratch("audit");
    AuditLog log(dir / "audit.jsonl");
    auto ctx = events_for(ectest::reference_db(), "01", Date(2025, 3, 14));
    reason_oracle(ctx, default_template(), &log);
    reason_oracle(ctx, default_template(), &log);
    auto lines = text::split(io::read_file(dir / "audit.jsonl"), '\n');
    ASSERT_EQ(lines.size(), 3u);
    auto rec = nlohmann::json::parse(lines[0]);
    EXPECT_EQ(rec["country"], "01");
    EXPECT_EQ(rec["date"], "2025-03-14");
    EXPECT_EQ(rec["source"], "oracle");
    EXPECT_EQ(rec["prompt_digest"], sha256_hex(render_prompt(ctx, default_template()).rendered));
    EXPECT_EQ(rec["timestamp"].get<std::string>().size(), 20u);
}
