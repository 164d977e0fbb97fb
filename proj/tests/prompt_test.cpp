#include "doctest.h"

#include <algorithm>
#include <map>
#include <sstream>

#include "crashcause/prompt.hpp"
#include "crashcause/util.hpp"

using namespace crashcause;
using namespace crashcause::prompt;
using namespace crashcause::records;

namespace {

// reference fixture: speeding + aggressive rear-end in clear daylight
CrashCase example2_case() {
    CrashCase cc;
    cc.report.crash_id = "EX2";
    cc.report.datetime = parse_rfc3339("2023-04-20T14:10:00Z");
    cc.report.mile_marker = 5.1;
    cc.report.direction = "EB";
    cc.report.crash_type = CrashType::rear_end;
    cc.report.severity = Severity::non_incapacitating;
    cc.report.light = Light::daylight;
    cc.report.weather = Weather::clear;
    cc.report.surface = Surface::dry;
    cc.report.alignment = Alignment::straight;
    cc.report.speeding_related = true;
    cc.report.aggressive_driving = true;
    cc.report.driver_age = 27;
    cc.report.driver_condition = DriverCondition::normal;
    TrafficSnapshot at;
    at.segment_id = "SEG1";
    at.timestamp = cc.report.datetime;
    at.mean_speed = 55;
    at.speed_limit = 70;
    at.level_of_service = Los::C;
    at.horizon = Horizon::at_crash;
    cc.traffic_at_crash = at;
    cc.speed_category_at_crash = speed_category(55, 70);
    return cc;
}

}  // namespace

TEST_CASE("serialize_case lines and determinism") {
    const PromptTemplate tmpl = default_template();
    const CrashCase cc = example2_case();
    const SerializedCase sc = serialize_case(cc, tmpl);
    CHECK(sc.case_id == "EX2");
    CHECK(sc.template_version == "v1");
    CHECK(sc.token_count >= 1);
    CHECK(sc.text.find("Crash ID: EX2\n") != std::string::npos);
    CHECK(sc.text.find("Is Speeding Related: yes\n") != std::string::npos);
    CHECK(sc.text.find("Is Aggressive Driving: yes\n") != std::string::npos);
    CHECK(sc.text.find("Driver Condition: normal\n") != std::string::npos);
    CHECK(sc.text.find("Weather Condition: Clear\n") != std::string::npos);
    CHECK(sc.text.find("Event Near Crash Location: no event\n") != std::string::npos);

    const SerializedCase again = serialize_case(cc, tmpl);
    CHECK(again.text == sc.text);

    // the full field set appears, one line each, in template order
    std::size_t last_pos = 0;
    for (const auto& key : tmpl.field_order) {
        const std::string line = display_name(key) + ": ";
        const std::size_t pos = sc.text.find(line);
        REQUIRE(pos != std::string::npos);
        CHECK(pos > last_pos);
        last_pos = pos;
    }
}

TEST_CASE("missing traffic renders unknown") {
    const PromptTemplate tmpl = default_template();
    CrashCase cc = example2_case();
    cc.traffic_at_crash.reset();
    cc.traffic_before.reset();
    cc.speed_category_at_crash = SpeedCategory::unknown;
    cc.speed_category_before = SpeedCategory::unknown;
    const SerializedCase sc = serialize_case(cc, tmpl);
    CHECK(sc.text.find("Speed of Roadway Segment at a Time of Crash: unknown\n") !=
          std::string::npos);
    CHECK(sc.text.find("Speed of Roadway Segment 5 Minutes Before Crash: unknown\n") !=
          std::string::npos);
    CHECK(sc.text.find("Level of Service of Roadway Segment at a Time of Crash: unknown\n") !=
          std::string::npos);
}

TEST_CASE("distinct cases serialize to distinct texts") {
    const PromptTemplate tmpl = default_template();
    const CrashCase a = example2_case();
    CrashCase b = example2_case();
    b.report.crash_id = "EX3";
    CHECK(serialize_case(a, tmpl).text != serialize_case(b, tmpl).text);
}

TEST_CASE("round-trip scanner recovers every enum value from the text") {
    const PromptTemplate tmpl = default_template();
    const CrashCase cc = example2_case();
    const SerializedCase sc = serialize_case(cc, tmpl);
    std::map<std::string, std::string> values;
    std::istringstream in(sc.text);
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t colon = line.find(": ");
        REQUIRE(colon != std::string::npos);
        values[line.substr(0, colon)] = line.substr(colon + 2);
    }
    CHECK(parse_crash_type(values.at("Crash Type")) == cc.report.crash_type);
    CHECK(parse_severity(values.at("Crash Severity")) == cc.report.severity);
    CHECK(parse_light(values.at("Light Condition")) == cc.report.light);
    CHECK(parse_weather(values.at("Weather Condition")) == cc.report.weather);
    CHECK(parse_surface(values.at("Road Surface Condition")) == cc.report.surface);
    CHECK(parse_alignment(values.at("Roadway Alignment")) == cc.report.alignment);
    CHECK(parse_yes_no(values.at("Is Speeding Related")) == cc.report.speeding_related);
    CHECK(parse_driver_condition(values.at("Driver Condition")) == cc.report.driver_condition);
    CHECK(parse_event_kind(values.at("Event Near Crash Location")) == cc.nearby_event);
    CHECK(values.at("Speed of Roadway Segment at a Time of Crash") ==
          to_string(cc.speed_category_at_crash));
}

TEST_CASE("maintenance event renders with the catalog wording") {
    const PromptTemplate tmpl = default_template();
    CrashCase cc = example2_case();
    cc.report.crash_id = "EX1-like";
    cc.nearby_event = EventKind::road_maintenance;
    const SerializedCase sc = serialize_case(cc, tmpl);
    const std::string prompt_text = build_classification_prompt(sc, tmpl);
    CHECK(prompt_text.find("Event Near Crash Location: road maintenance operations") !=
          std::string::npos);
}

TEST_CASE("classification prompt carries each taxonomy label exactly once") {
    const PromptTemplate tmpl = default_template();
    const SerializedCase sc = serialize_case(example2_case(), tmpl);
    const std::string prompt_text = build_classification_prompt(sc, tmpl);
    for (const auto& label : tmpl.taxonomy) {
        const std::string entry = "- " + label + "\n";
        std::size_t count = 0;
        std::size_t pos = 0;
        while ((pos = prompt_text.find(entry, pos)) != std::string::npos) {
            ++count;
            pos += entry.size();
        }
        CHECK(count == 1);
    }
    CHECK(prompt_text.find(tmpl.preamble) == 0);
    CHECK(prompt_text.find("Causation:") != std::string::npos);
}

TEST_CASE("template validation") {
    PromptTemplate t = default_template();
    SUBCASE("taxonomy must include other") {
        t.taxonomy.erase(std::remove(t.taxonomy.begin(), t.taxonomy.end(), "other"),
                         t.taxonomy.end());
        CHECK_THROWS_AS(validate_template(t), ValidationError);
    }
    SUBCASE("every field exactly once") {
        t.field_order.pop_back();
        CHECK_THROWS_AS(validate_template(t), ValidationError);
        t = default_template();
        t.field_order.push_back(t.field_order.front());
        CHECK_THROWS_AS(validate_template(t), ValidationError);
    }
}

TEST_CASE("template file round-trip") {
    const PromptTemplate t = default_template();
    std::string text = "VERSION " + t.version + "\n[PREAMBLE]\n" + t.preamble +
                       "\n[FIELD_ORDER]\n";
    for (const auto& k : t.field_order) text += k + "\n";
    text += "[TAXONOMY]\n";
    for (const auto& l : t.taxonomy) text += l + "\n";
    text += "[OUTPUT_FORMAT]\n" + t.output_format + "\n";
    const PromptTemplate parsed = parse_template(text);
    CHECK(parsed.version == t.version);
    CHECK(parsed.preamble == t.preamble);
    CHECK(parsed.field_order == t.field_order);
    CHECK(parsed.taxonomy == t.taxonomy);
    CHECK(parsed.output_format == t.output_format);
}

TEST_CASE("token counting is pluggable behind the same contract") {
    const PromptTemplate tmpl = default_template();
    const CrashCase cc = example2_case();
    const auto byte_counter = [](std::string_view s) { return static_cast<int>(s.size()); };
    const SerializedCase sc = serialize_case(cc, tmpl, byte_counter);
    CHECK(sc.token_count == static_cast<int>(sc.text.size()));
    CHECK(sc.text == serialize_case(cc, tmpl).text);
}

TEST_CASE("reference tokenizer") {
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("   \t\n") == 0);
    CHECK(count_tokens("rear-end collision.") == 3);  // rear-end | collision | .
    CHECK(count_tokens("hello") == 1);
    CHECK(count_tokens("(fast) cars!") == 5);  // ( | fast | ) | cars | !
    CHECK(count_tokens("alcohol/drug use") == 2);

    const auto toks = tokenize_text("Speed: 65 mph.");
    REQUIRE(toks.size() == 5);
    CHECK(toks[0] == "Speed");
    CHECK(toks[1] == ":");
    CHECK(toks[2] == "65");
    CHECK(toks[3] == "mph");
    CHECK(toks[4] == ".");

    // unicode whitespace splits; NBSP between a and b
    CHECK(count_tokens("a\xC2\xA0"
                       "b") == 2);

    // concatenation property
    const std::vector<std::string> chunks = {"rain, wet roads", "a 27-year-old driver",
                                             "LOS F (congested)", "speed== 65"};
    for (const auto& a : chunks) {
        for (const auto& b : chunks) {
            CHECK(count_tokens(a + " " + b) == count_tokens(a) + count_tokens(b));
        }
    }
}
