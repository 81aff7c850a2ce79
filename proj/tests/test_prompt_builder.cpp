#include "eventcast/prompt_builder.hpp"
#include "eventcast/digest.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace eventcast;

namespace {

DayContext worked_ctx() { return events_for(ectest::worked_example_db(), "01", Date(2025, 3, 23)); }

} // namespace

TEST(PromptBuilder, ContainsDatabaseQuestionsAndFormat) {
    auto p = render_prompt(worked_ctx(), default_template()).rendered;
    EXPECT_EQ(p.rfind("Given country code 01 and date 2025-03-23", 0), 0u);
    EXPECT_NE(p.find("Place the summary inside <result>"), std::string::npos);
    EXPECT_NE(p.find("Campaign | 01 | Electronics Mega Sale | 2025-03-01 to 2025-03-31 | All categories | level 12"),
              std::string::npos);
    EXPECT_NE(p.find("Holiday | 01 | Sultan of Johor Birthday"), std::string::npos);
    EXPECT_NE(p.find("Min. threshold 1 USD"), std::string::npos);
    EXPECT_NE(p.find("Q9: "), std::string::npos);
    EXPECT_EQ(p.find("Q10: "), std::string::npos);
    EXPECT_NE(p.find("Is 2025-03-23 within a holiday?"), std::string::npos);
    // answer slots stay literal
    EXPECT_NE(p.find("'on the [x]th day of the holiday'"), std::string::npos);
    // other countries never leak in
    EXPECT_EQ(p.find("| 02 |"), std::string::npos);
}

TEST(PromptBuilder, DatabaseRecordsPrecedeQuestionsInOrder) {
    auto p = render_prompt(worked_ctx(), default_template()).rendered;
    auto db = p.find("Database:");
    auto q1 = p.find("Q1: ");
    auto fmt = p.find("Format: <result>");
    ASSERT_NE(db, std::string::npos);
    EXPECT_LT(db, q1);
    EXPECT_LT(q1, fmt);
    std::size_t last = 0;
    for (int i = 1; i <= 9; ++i) {
        auto at = p.find("Q" + std::to_string(i) + ": ");
        ASSERT_NE(at, std::string::npos);
        EXPECT_GT(at, last);
        last = at;
    }
}

TEST(PromptBuilder, DeterministicBytes) {
    auto a = render_prompt(worked_ctx(), default_template()).rendered;
    auto b = render_prompt(worked_ctx(), default_template()).rendered;
    EXPECT_EQ(sha256_hex(a), sha256_hex(b));
}

TEST(PromptBuilder, UnknownSlotRejected) {
    auto t = default_template();
    t.questions.push_back("What about [Region]?");
    try {
        render_prompt(worked_ctx(), t);
        FAIL();
    } catch (const UnboundPlaceholder& e) {
        EXPECT_EQ(e.name(), "Region");
    }
}

TEST(PromptBuilder, KnownSlotsSubstituted) {
    PromptTemplate t;
    t.questions = {"[CountryCode] on [Date] ([DayOfWeek]) [x] [a b]"};
    t.result_format_line = "<result>a</result>";
    auto p = render_prompt(worked_ctx(), t).rendered;
    EXPECT_NE(p.find("Q1: 01 on 2025-03-23 (Sunday) [x] [a b]"), std::string::npos);
}

TEST(PromptBuilder, EmptyQuestionsOnlyInStrict) {
    PromptTemplate t;
    t.result_format_line = "Format: <result>a; b</result>";
    auto p = render_prompt(worked_ctx(), t).rendered;
    EXPECT_EQ(p.find("Q1:"), std::string::npos);
    EXPECT_NE(p.find("Format: <result>a; b</result>"), std::string::npos);
    EXPECT_THROW(render_prompt(worked_ctx(), t, RenderOptions{true}), DataError);
}

TEST(PromptBuilder, EmptyContextSaysNoRecords) {
    DayContext ctx;
    ctx.country = "09";
    ctx.date = Date(2025, 1, 1);
    auto p = render_prompt(ctx, default_template()).rendered;
    EXPECT_NE(p.find("- (no records)"), std::string::npos);
}

TEST(PromptBuilder, DefaultTemplateImpliesEightFields) {
    auto t = default_template();
    EXPECT_EQ(implied_field_count(t.result_format_line), 8u);
    EXPECT_NO_THROW(validate_template(t, 8));
    EXPECT_THROW(validate_template(t, 7), DataError);
    PromptTemplate bad;
    bad.result_format_line = "no tags here";
    EXPECT_THROW(validate_template(bad, 1), DataError);
}

TEST(PromptBuilder, TemplateFileRoundTrip) {
    auto t = default_template();
    EXPECT_EQ(parse_template(serialize_template(t)), t);
    EXPECT_THROW(parse_template("  \n---\n"), DataError);
}
