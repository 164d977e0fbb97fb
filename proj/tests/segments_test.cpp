#include "doctest.h"

#include <cstdlib>

#include "crashcause/segments.hpp"
#include "crashcause/util.hpp"
#include "json.hpp"

using namespace crashcause;
using namespace crashcause::segments;
using classify::CausationLabel;
using classify::CausationResult;
using classify::FactorTag;
using records::CrashCase;
using records::Severity;

namespace {

SegmentSet two_segments() {
    return SegmentSet({{"SEG1", "Downtown", 10.0, 15.0, "EB"},
                       {"SEG2", "Airport", 15.0, 20.0, "EB"}});
}

CrashCase case_at(const std::string& id, double mile, const std::string& direction = "EB",
                  Severity severity = Severity::no_injury, bool with_traffic = true) {
    CrashCase cc;
    cc.report.crash_id = id;
    cc.report.mile_marker = mile;
    cc.report.direction = direction;
    cc.report.severity = severity;
    if (with_traffic) {
        records::TrafficSnapshot at;
        at.segment_id = "any";
        at.mean_speed = 50;
        at.speed_limit = 70;
        at.horizon = records::Horizon::at_crash;
        cc.traffic_at_crash = at;
        cc.speed_category_at_crash = records::speed_category(50, 70);
    }
    return cc;
}

CausationResult result_for(const std::string& case_id, CausationLabel label,
                           std::vector<FactorTag> factors = {}) {
    CausationResult r;
    r.case_id = case_id;
    r.label = label;
    r.explanation = "fixture";
    r.contributing_factors = std::move(factors);
    r.backend_id = "fixture";
    return r;
}

// mirrors the reported per-segment mixes: 36/6/4 over 46 and 12/10/4/2 over 28
struct Fixture {
    std::vector<CrashCase> cases;
    std::vector<CausationResult> results;
};

Fixture segment_fixture() {
    Fixture fx;
    int n = 0;
    const auto add = [&](double mile, CausationLabel label, int count,
                         std::vector<FactorTag> factors = {}) {
        for (int i = 0; i < count; ++i) {
            const std::string id = "c" + std::to_string(n++);
            fx.cases.push_back(case_at(id, mile));
            fx.results.push_back(result_for(id, label, factors));
        }
    };
    // segment 1: 46 analyzed
    add(12.0, CausationLabel::driver_inattention, 36);
    add(12.1, CausationLabel::risky_driving, 6);
    add(12.2, CausationLabel::other, 4);
    // segment 2: 28 analyzed; 6 of 10 inattention tagged lane_change,
    // 3 of 4 risky tagged teen_driver
    add(16.0, CausationLabel::speeding, 12, {FactorTag::speeding});
    add(16.1, CausationLabel::driver_inattention, 6, {FactorTag::lane_change});
    add(16.2, CausationLabel::driver_inattention, 4);
    add(16.3, CausationLabel::risky_driving, 3, {FactorTag::teen_driver});
    add(16.4, CausationLabel::risky_driving, 1);
    add(16.5, CausationLabel::other, 2);
    return fx;
}

}  // namespace

TEST_CASE("segment set validation") {
    CHECK_THROWS_AS(SegmentSet({{"A", "", 5.0, 5.0, "EB"}}), ValidationError);
    CHECK_THROWS_AS(SegmentSet({{"A", "", 0.0, 10.0, "EB"}, {"B", "", 9.0, 12.0, "EB"}}),
                    ValidationError);
    // same range on opposite directions is fine
    CHECK_NOTHROW(SegmentSet({{"A", "", 0.0, 10.0, "EB"}, {"B", "", 0.0, 10.0, "WB"}}));
    CHECK_THROWS_AS(SegmentSet({{"A", "", 0.0, 5.0, "EB"}, {"A", "", 6.0, 7.0, "EB"}}),
                    ValidationError);
}

TEST_CASE("assign_segment uses half-open ranges and direction") {
    const SegmentSet segs = two_segments();
    CHECK(assign_segment(case_at("a", 12.3), segs) == "SEG1");
    CHECK(assign_segment(case_at("b", 15.0), segs) == "SEG2");  // boundary goes right
    CHECK(assign_segment(case_at("c", 99.0), segs) == std::nullopt);
    CHECK(assign_segment(case_at("d", 12.3, "WB"), segs) == std::nullopt);
}

TEST_CASE("summaries count totals, analyzed, severities") {
    const SegmentSet segs = two_segments();
    std::vector<CrashCase> cases = {
        case_at("a", 12.0, "EB", Severity::fatal),
        case_at("b", 12.5, "EB", Severity::no_injury, false),  // no traffic data
        case_at("c", 16.0, "EB", Severity::possible_injury),
        case_at("d", 50.0),  // outside all segments
    };
    const auto summaries = build_summaries(cases, segs);
    REQUIRE(summaries.size() == 2);
    const auto& s1 = summaries[0].segment_id == "SEG1" ? summaries[0] : summaries[1];
    CHECK(s1.total_crashes == 2);
    CHECK(s1.analyzed_crashes == 1);
    CHECK(s1.severity_histogram[static_cast<std::size_t>(Severity::fatal)] == 1);
    std::uint64_t total = 0;
    for (auto c : s1.severity_histogram) total += c;
    CHECK(total == s1.total_crashes);
}

TEST_CASE("rank_hotspots ordering") {
    SegmentSummary a;
    a.segment_id = "A";
    a.total_crashes = 10;
    a.severity_histogram = {0, 0, 0, 0, 10};
    SegmentSummary b;
    b.segment_id = "B";
    b.total_crashes = 10;
    b.severity_histogram = {1, 0, 0, 0, 9};

    SUBCASE("a fatal crash outranks equal counts") {
        const SeverityWeights w = {10, 1, 1, 1, 1};
        const auto ranked = rank_hotspots({a, b}, w, 10);
        REQUIRE(ranked.size() == 2);
        CHECK(ranked[0].segment_id == "B");
        CHECK(ranked[0].hotspot_score == 19.0);
        CHECK(ranked[1].hotspot_score == 10.0);
    }
    SUBCASE("uniform weights rank by total crashes") {
        SegmentSummary c;
        c.segment_id = "C";
        c.total_crashes = 12;
        c.severity_histogram = {0, 0, 0, 0, 12};
        const SeverityWeights w = {1, 1, 1, 1, 1};
        const auto ranked = rank_hotspots({a, c}, w, 10);
        CHECK(ranked[0].segment_id == "C");
    }
    SUBCASE("scaling all weights leaves the order unchanged") {
        SegmentSummary c;
        c.segment_id = "C";
        c.total_crashes = 3;
        c.severity_histogram = {0, 2, 1, 0, 0};
        const SeverityWeights w1 = {10, 5, 3, 2, 1};
        SeverityWeights w2 = w1;
        for (double& x : w2) x *= 7.5;
        const auto r1 = rank_hotspots({a, b, c}, w1, 10);
        const auto r2 = rank_hotspots({a, b, c}, w2, 10);
        REQUIRE(r1.size() == r2.size());
        for (std::size_t i = 0; i < r1.size(); ++i) {
            CHECK(r1[i].segment_id == r2[i].segment_id);
        }
    }
    SUBCASE("top_k truncates") {
        const SeverityWeights w = {10, 5, 3, 2, 1};
        CHECK(rank_hotspots({a, b}, w, 1).size() == 1);
    }
    SUBCASE("weights must be positive") {
        const SeverityWeights w = {10, 5, 0, 2, 1};
        CHECK_THROWS_AS(rank_hotspots({a}, w, 1), ValidationError);
    }
}

TEST_CASE("causation distribution reproduces the reported segment mixes") {
    const SegmentSet segs = two_segments();
    const Fixture fx = segment_fixture();

    const CausationDistribution d1 =
        causation_distribution(fx.results, fx.cases, segs, "SEG1");
    CHECK(d1.denominator == 46);
    REQUIRE(d1.shares.size() == 3);
    CHECK(d1.shares[0].label == CausationLabel::driver_inattention);
    CHECK(d1.shares[0].count == 36);
    CHECK(d1.shares[0].percentage == 78);
    CHECK(d1.shares[1].label == CausationLabel::risky_driving);
    CHECK(d1.shares[1].count == 6);
    CHECK(d1.shares[1].percentage == 13);
    CHECK(d1.shares[2].label == CausationLabel::other);
    CHECK(d1.shares[2].count == 4);
    CHECK(d1.shares[2].percentage == 9);
    std::uint64_t total = 0;
    for (const auto& s : d1.shares) total += s.count;
    CHECK(total == d1.denominator);

    const CausationDistribution d2 =
        causation_distribution(fx.results, fx.cases, segs, "SEG2");
    CHECK(d2.denominator == 28);
    REQUIRE(d2.shares.size() == 4);
    CHECK(d2.shares[0].count == 12);
    CHECK(d2.shares[0].percentage == 43);
    CHECK(d2.shares[1].count == 10);
    CHECK(d2.shares[1].percentage == 36);
    CHECK(d2.shares[2].count == 4);
    CHECK(d2.shares[2].percentage == 14);
    CHECK(d2.shares[3].count == 2);
    CHECK(d2.shares[3].percentage == 7);

    SUBCASE("cases without traffic data are excluded from the denominator") {
        Fixture fx2 = fx;
        fx2.cases.push_back(case_at("extra", 12.9, "EB", Severity::no_injury, false));
        fx2.results.push_back(result_for("extra", CausationLabel::driver_inattention));
        const auto d = causation_distribution(fx2.results, fx2.cases, segs, "SEG1");
        CHECK(d.denominator == 46);
    }
    SUBCASE("empty segment flagged") {
        const auto d = causation_distribution({}, fx.cases, segs, "SEG1");
        CHECK(d.denominator == 0);
        CHECK(d.empty_flag);
        CHECK(d.shares.empty());
    }
}

TEST_CASE("factor tallies and conditional shares") {
    const SegmentSet segs = two_segments();
    const Fixture fx = segment_fixture();
    const auto seg2 = results_for_segment(fx.results, fx.cases, segs, "SEG2");
    REQUIRE(seg2.size() == 28);

    const auto inattention =
        factor_tally(seg2, CausationLabel::driver_inattention);
    CHECK(inattention.at(FactorTag::lane_change) == 6);  // 6 of 10 -> 60%
    CHECK(percent_round(inattention.at(FactorTag::lane_change), 10) == 60);

    const auto risky = factor_tally(seg2, CausationLabel::risky_driving);
    CHECK(risky.at(FactorTag::teen_driver) == 3);  // 3 of 4 -> 75%
    CHECK(percent_round(risky.at(FactorTag::teen_driver), 4) == 75);

    CHECK(factor_tally({}).empty());
}

TEST_CASE("render_report formats") {
    const SegmentSet segs = two_segments();
    const Fixture fx = segment_fixture();
    ReportBundle bundle;
    bundle.summaries = rank_hotspots(build_summaries(fx.cases, segs),
                                     kDefaultSeverityWeights, 10);
    for (const auto& s : bundle.summaries) {
        bundle.distributions[s.segment_id] =
            causation_distribution(fx.results, fx.cases, segs, s.segment_id);
        bundle.tallies[s.segment_id] =
            factor_tally(results_for_segment(fx.results, fx.cases, segs, s.segment_id));
        bundle.segment_names[s.segment_id] = segs.find(s.segment_id)->name;
    }

    SUBCASE("markdown carries the distribution rows") {
        const std::string md = render_report(bundle, ReportFormat::markdown);
        CHECK(md.find("driver_inattention | 36 | 78%") != std::string::npos);
        CHECK(md.find("risky_driving | 6 | 13%") != std::string::npos);
        CHECK(md.find("speeding | 12 | 43%") != std::string::npos);
    }
    SUBCASE("json re-parses to the inputs") {
        const std::string js = render_report(bundle, ReportFormat::json);
        const auto doc = nlohmann::json::parse(js);
        CHECK(doc.at("schema_version") == 1);
        REQUIRE(doc.at("segments").size() == 2);
        for (const auto& seg : doc.at("segments")) {
            const std::string id = seg.at("segment_id");
            const auto& summary =
                bundle.summaries[seg["segment_id"] == bundle.summaries[0].segment_id ? 0 : 1];
            CHECK(seg.at("total_crashes").get<std::uint64_t>() == summary.total_crashes);
            CHECK(seg.at("analyzed_crashes").get<std::uint64_t>() == summary.analyzed_crashes);
            const auto& dist = bundle.distributions.at(id);
            REQUIRE(seg.at("distribution").size() == dist.shares.size());
            for (std::size_t i = 0; i < dist.shares.size(); ++i) {
                CHECK(seg.at("distribution")[i].at("label").get<std::string>() ==
                      classify::to_string(dist.shares[i].label));
                CHECK(seg.at("distribution")[i].at("count").get<std::uint64_t>() ==
                      dist.shares[i].count);
                CHECK(seg.at("distribution")[i].at("percentage").get<int>() ==
                      dist.shares[i].percentage);
            }
        }
    }
    SUBCASE("svg has one labeled bar per share") {
        const std::string svg = render_report(bundle, ReportFormat::svg_bars);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find(">78%</text>") != std::string::npos);
        CHECK(svg.find(">43%</text>") != std::string::npos);
    }
    SUBCASE("csv has a header and one row per share") {
        const std::string csv_text = render_report(bundle, ReportFormat::csv);
        CHECK(csv_text.find("segment_id,total_crashes") == 0);
        CHECK(csv_text.find("SEG1,46,46") != std::string::npos);
    }
    SUBCASE("all formats are byte-deterministic") {
        for (const auto fmt : {ReportFormat::json, ReportFormat::csv, ReportFormat::markdown,
                               ReportFormat::svg_bars}) {
            CHECK(render_report(bundle, fmt) == render_report(bundle, fmt));
        }
    }
    SUBCASE("empty inputs render a valid skeleton") {
        const ReportBundle empty;
        CHECK(render_report(empty, ReportFormat::markdown) == "# Segment causation report\n");
        const auto doc = nlohmann::json::parse(render_report(empty, ReportFormat::json));
        CHECK(doc.at("segments").empty());
        CHECK_NOTHROW(render_report(empty, ReportFormat::svg_bars));
        CHECK_NOTHROW(render_report(empty, ReportFormat::csv));
    }
}

TEST_CASE("report format names") {
    CHECK(parse_report_format("markdown") == ReportFormat::markdown);
    CHECK(parse_report_format("SVG") == ReportFormat::svg_bars);
    CHECK_THROWS_AS(parse_report_format("pdf"), ValidationError);
}
