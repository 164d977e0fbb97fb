#include "doctest.h"

#include "crashcause/expert.hpp"
#include "crashcause/util.hpp"

using namespace crashcause;
using namespace crashcause::expert;

namespace {

// 6 raters x 6 crashes; 32 yes on Q1 and 31 yes on Q2, mirroring the
// reported agreement percentages.
std::vector<Rating> survey36() {
    std::vector<Rating> ratings;
    int idx = 0;
    for (int rater = 0; rater < 6; ++rater) {
        for (int crash = 0; crash < 6; ++crash) {
            Rating r;
            r.crash_id = "crash" + std::to_string(crash);
            r.rater_id = "rater" + std::to_string(rater);
            r.answers[0] = idx >= 4;   // 4 no, 32 yes
            r.answers[1] = idx >= 5;   // 5 no, 31 yes
            r.answers[2] = true;       // Q3 has no reported target
            ratings.push_back(r);
            ++idx;
        }
    }
    return ratings;
}

}  // namespace

TEST_CASE("aggregate reproduces the questionnaire percentages") {
    const auto ratings = survey36();
    REQUIRE(ratings.size() == 36);
    const AgreementReport report = aggregate(ratings);
    CHECK(report.per_question[0].yes_count == 32);
    CHECK(report.per_question[0].total == 36);
    CHECK(report.per_question[0].percentage == doctest::Approx(88.89));
    CHECK(report.per_question[1].yes_count == 31);
    CHECK(report.per_question[1].percentage == doctest::Approx(86.11));
    CHECK(report.per_question[2].percentage == doctest::Approx(100.00));
}

TEST_CASE("aggregate validation") {
    CHECK_THROWS_AS(aggregate({}), ValidationError);
    auto ratings = survey36();
    ratings.push_back(ratings.front());
    CHECK_THROWS_AS(aggregate(ratings), ValidationError);
}

TEST_CASE("all-yes survey is 100.00 across questions") {
    std::vector<Rating> ratings;
    for (int i = 0; i < 7; ++i) {
        ratings.push_back({"c" + std::to_string(i), "r", {true, true, true}});
    }
    const auto report = aggregate(ratings);
    for (const auto& q : report.per_question) {
        CHECK(q.percentage == doctest::Approx(100.00));
    }
}

TEST_CASE("breakdowns by rater and by crash") {
    SUBCASE("an all-no rater shows 0.00") {
        std::vector<Rating> ratings = {
            {"c1", "r1", {false, false, false}},
            {"c2", "r1", {false, false, false}},
            {"c1", "r2", {true, true, true}},
            {"c2", "r2", {true, false, true}},
        };
        const auto by_rater = breakdown(ratings, BreakdownAxis::by_rater);
        CHECK(by_rater.at("r1")[0].percentage == doctest::Approx(0.00));
        CHECK(by_rater.at("r2")[0].percentage == doctest::Approx(100.00));
        CHECK(by_rater.at("r2")[1].percentage == doctest::Approx(50.00));
        const auto by_crash = breakdown(ratings, BreakdownAxis::by_crash);
        CHECK(by_crash.at("c1")[0].yes_count == 1);
        CHECK(by_crash.at("c1")[0].total == 2);
        CHECK(by_crash.at("c1")[0].percentage == doctest::Approx(50.00));
    }
    SUBCASE("uniform survey: every key equals the global value") {
        const auto ratings = survey36();
        const auto report = aggregate(ratings);
        for (const auto& [key, stats] : report.by_rater) {
            CHECK(stats[2].percentage == report.per_question[2].percentage);
        }
    }
}

TEST_CASE("global percentage equals rating-weighted mean of per-rater percentages") {
    const auto ratings = survey36();
    const auto report = aggregate(ratings);
    for (int q = 0; q < kQuestionCount; ++q) {
        std::uint64_t yes = 0, total = 0;
        for (const auto& [rater, stats] : report.by_rater) {
            yes += stats[static_cast<std::size_t>(q)].yes_count;
            total += stats[static_cast<std::size_t>(q)].total;
        }
        CHECK(yes == report.per_question[static_cast<std::size_t>(q)].yes_count);
        CHECK(total == report.per_question[static_cast<std::size_t>(q)].total);
    }
}

TEST_CASE("aggregate is permutation invariant") {
    auto ratings = survey36();
    const auto before = aggregate(ratings);
    Rng rng(3);
    rng.shuffle(ratings);
    const auto after = aggregate(ratings);
    for (int q = 0; q < kQuestionCount; ++q) {
        CHECK(before.per_question[static_cast<std::size_t>(q)].percentage ==
              after.per_question[static_cast<std::size_t>(q)].percentage);
    }
    CHECK(report_to_json(before) == report_to_json(after));
}

TEST_CASE("survey csv parsing") {
    const auto ratings = parse_survey_csv(
        "crash_id,rater_id,q1,q2,q3\n"
        "c1,r1,yes,no,YES\n"
        "c2,r1,No,no,no\n");
    REQUIRE(ratings.size() == 2);
    CHECK(ratings[0].answers[0]);
    CHECK_FALSE(ratings[0].answers[1]);
    CHECK(ratings[0].answers[2]);

    CHECK_THROWS_AS(parse_survey_csv("crash_id,rater_id,q1,q2,q3\nc1,r1,yes,maybe,no\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_survey_csv("crash_id,rater_id,q1,q2,q3\n"
                                     "c1,r1,yes,yes,yes\nc1,r1,no,no,no\n"),
                    ValidationError);
}

TEST_CASE("single rating reports 100.00 or 0.00") {
    const std::vector<Rating> one_yes = {{"c", "r", {true, true, true}}};
    CHECK(aggregate(one_yes).per_question[0].percentage == doctest::Approx(100.00));
    const std::vector<Rating> one_no = {{"c", "r", {false, false, false}}};
    CHECK(aggregate(one_no).per_question[0].percentage == doctest::Approx(0.00));
}

TEST_CASE("text report lines") {
    const auto report = aggregate(survey36());
    const std::string text = report_to_text(report);
    CHECK(text.find("Is Causation Reasonable? 88.89% (32/36)") != std::string::npos);
    CHECK(text.find("Is Explanation Reasonable? 86.11% (31/36)") != std::string::npos);
}
