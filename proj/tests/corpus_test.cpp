#include "doctest.h"

#include <set>

#include "crashcause/corpus.hpp"
#include "crashcause/util.hpp"

using namespace crashcause;
using corpus::StudyRecord;

namespace {

std::vector<StudyRecord> two_studies() {
    return {
        {"s-001", "Accident Analysis & Prevention", 2020,
         {"Higher traffic volumes correlate with higher crash frequencies.",
          "Narrow lanes limit maneuverability and increase crash likelihood."}},
        {"s-002", "Journal of Safety Research", 2021,
         {"Speeding markedly increases crash injury severity."}},
    };
}

}  // namespace

TEST_CASE("manifest parsing and validation") {
    SUBCASE("two studies, three findings") {
        const std::string json = R"([
            {"study_id": "s-001", "journal": "Accident Analysis & Prevention", "year": 2020,
             "findings": ["Higher traffic volumes correlate with higher crash frequencies.",
                          "Narrow lanes increase crash likelihood."]},
            {"study_id": "s-002", "journal": "Journal of Safety Research", "year": 2021,
             "findings": ["Speeding markedly increases crash injury severity."]}
        ])";
        const auto records = corpus::parse_manifest(json);
        REQUIRE(records.size() == 2);
        CHECK(records[0].findings.size() == 2);
        CHECK(records[1].year == 2021);
    }
    SUBCASE("duplicate study_id names the id") {
        const std::string json = R"([
            {"study_id": "dup", "journal": "J", "year": 2020, "findings": ["a"]},
            {"study_id": "dup", "journal": "J", "year": 2021, "findings": ["b"]}
        ])";
        CHECK_THROWS_WITH_AS(corpus::parse_manifest(json),
                             doctest::Contains("dup"), ValidationError);
    }
    SUBCASE("empty findings rejected") {
        const std::string json = R"([{"study_id": "x", "journal": "J", "year": 2020, "findings": []}])";
        CHECK_THROWS_AS(corpus::parse_manifest(json), ValidationError);
    }
    SUBCASE("malformed json reports a parse error") {
        CHECK_THROWS_AS(corpus::parse_manifest("[{"), ParseError);
        CHECK_THROWS_AS(corpus::parse_manifest("{\"not\": \"array\"}"), ParseError);
    }
}

TEST_CASE("build_dataset emits one pair per finding, deduplicated") {
    SUBCASE("one study, one finding") {
        const std::vector<StudyRecord> records = {{"s", "J", 2020, {"Rain increases crashes."}}};
        const auto built = corpus::build_dataset(records);
        REQUIRE(built.pairs.size() == 1);
        CHECK(built.pairs[0].completion == "Rain increases crashes.");
        CHECK(built.pairs[0].prompt != built.pairs[0].completion);
        CHECK_FALSE(built.pairs[0].prompt.empty());
        CHECK(built.drops.empty());
    }
    SUBCASE("shared identical finding dropped once") {
        const std::vector<StudyRecord> records = {
            {"a", "J", 2020, {"Rain increases crashes."}},
            {"b", "J", 2021, {"rain increases   crashes."}},  // same after normalization
        };
        const auto built = corpus::build_dataset(records);
        CHECK(built.pairs.size() == 1);
        REQUIRE(built.drops.size() == 1);
        CHECK(built.drops[0].study_id == "b");
        CHECK(built.drops[0].duplicate_of_study == "a");
    }
    SUBCASE("deterministic order and idempotent output") {
        const auto records = two_studies();
        const auto a = corpus::build_dataset(records);
        const auto b = corpus::build_dataset(records);
        CHECK(corpus::dataset_to_json(a.pairs) == corpus::dataset_to_json(b.pairs));
        CHECK(a.pairs[0].source_study_id == "s-001");
        CHECK(a.pairs[2].source_study_id == "s-002");
    }
}

TEST_CASE("corpus_stats reproduces the journal distribution") {
    SUBCASE("published journal distribution") {
        std::vector<StudyRecord> records;
        const std::vector<std::pair<std::string, int>> plan = {
            {"Accident Analysis & Prevention", 59},
            {"Analytic Methods in Accident Research", 25},
            {"Transportation Research Record", 24},
            {"Journal of Safety Research", 15},
            {"Transportation Research Part C", 10},
            {"Journal of Transportation Safety & Security", 10},
            {"IEEE Transactions on Intelligent Transportation Systems", 83},
        };
        int n = 0;
        for (const auto& [journal, count] : plan) {
            for (int i = 0; i < count; ++i) {
                records.push_back({"s" + std::to_string(n++), journal, 2020, {"finding"}});
            }
        }
        REQUIRE(records.size() == 226);
        const auto stats = corpus::corpus_stats(records);
        CHECK(stats.total_studies == 226);
        CHECK(stats.per_journal.at("Accident Analysis & Prevention").percentage == 26);
        CHECK(stats.per_journal.at("Analytic Methods in Accident Research").percentage == 11);
        CHECK(stats.per_journal.at("Transportation Research Record").percentage == 11);
        CHECK(stats.per_journal.at("Journal of Safety Research").percentage == 7);
        CHECK(stats.per_journal.at("Transportation Research Part C").percentage == 4);
        CHECK(stats.per_journal.at("Journal of Transportation Safety & Security").percentage == 4);
        CHECK(stats.per_journal.at("Other").count == 83);
        CHECK(stats.per_journal.at("Other").percentage == 37);
        std::uint64_t total = 0;
        for (const auto& [name, js] : stats.per_journal) total += js.count;
        CHECK(total == stats.total_studies);
    }
    SUBCASE("empty list yields zero stats") {
        const auto stats = corpus::corpus_stats({});
        CHECK(stats.total_studies == 0);
        CHECK(stats.per_journal.empty());
    }
}

TEST_CASE("split_dataset partitions deterministically") {
    const auto records = two_studies();
    auto pairs = corpus::build_dataset(records).pairs;
    while (pairs.size() < 10) {
        auto extra = pairs[0];
        extra.completion += " (variant " + std::to_string(pairs.size()) + ")";
        pairs.push_back(extra);
    }

    SUBCASE("10 pairs at 0.2") {
        const auto s1 = corpus::split_dataset(pairs, 0.2, 7);
        const auto s2 = corpus::split_dataset(pairs, 0.2, 7);
        CHECK(s1.train.size() == 8);
        CHECK(s1.eval.size() == 2);
        CHECK(corpus::dataset_to_json(s1.train) == corpus::dataset_to_json(s2.train));
        CHECK(corpus::dataset_to_json(s1.eval) == corpus::dataset_to_json(s2.eval));

        // partition: disjoint and exhaustive
        std::set<std::string> seen;
        for (const auto& p : s1.train) seen.insert(p.completion);
        for (const auto& p : s1.eval) CHECK(seen.insert(p.completion).second);
        CHECK(seen.size() == pairs.size());
    }
    SUBCASE("2 pairs at 0.5 gives 1/1") {
        const std::vector<corpus::PromptCompletionPair> two(pairs.begin(), pairs.begin() + 2);
        const auto s = corpus::split_dataset(two, 0.5, 1);
        CHECK(s.train.size() == 1);
        CHECK(s.eval.size() == 1);
    }
    SUBCASE("226 pairs at 0.1 gives 203/23") {
        std::vector<corpus::PromptCompletionPair> many;
        for (int i = 0; i < 226; ++i) {
            many.push_back({"prompt " + std::to_string(i), "completion " + std::to_string(i), "s"});
        }
        const auto s = corpus::split_dataset(many, 0.1, 3);
        CHECK(s.eval.size() == 23);
        CHECK(s.train.size() == 203);
    }
    SUBCASE("validation") {
        const std::vector<corpus::PromptCompletionPair> one(pairs.begin(), pairs.begin() + 1);
        CHECK_THROWS_AS(corpus::split_dataset(one, 0.5, 1), ValidationError);
        CHECK_THROWS_AS(corpus::split_dataset(pairs, 0.0, 1), ValidationError);
        CHECK_THROWS_AS(corpus::split_dataset(pairs, 1.0, 1), ValidationError);
    }
}

TEST_CASE("dataset json round-trip") {
    const auto built = corpus::build_dataset(two_studies());
    const std::string json = corpus::dataset_to_json(built.pairs);
    const auto back = corpus::dataset_from_json(json);
    REQUIRE(back.size() == built.pairs.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].prompt == built.pairs[i].prompt);
        CHECK(back[i].completion == built.pairs[i].completion);
    }
}
