#include "crashcause/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "crashcause/util.hpp"

namespace crashcause::prompt {

using records::CrashCase;

const std::vector<std::string>& table1_field_keys() {
    static const std::vector<std::string> keys = {
        "crash_date_and_time",
        "crash_type",
        "crash_severity",
        "light_condition",
        "weather_condition",
        "road_surface_condition",
        "roadway_alignment",
        "is_speeding_related",
        "is_aggressive_driving",
        "driver_age",
        "driver_condition",
        "speed_at_crash",
        "los_at_crash",
        "speed_before_crash",
        "los_before_crash",
        "event_near_crash",
    };
    return keys;
}

std::string display_name(const std::string& field_key) {
    static const std::map<std::string, std::string> names = {
        {"crash_date_and_time", "Crash Date and Time"},
        {"crash_type", "Crash Type"},
        {"crash_severity", "Crash Severity"},
        {"light_condition", "Light Condition"},
        {"weather_condition", "Weather Condition"},
        {"road_surface_condition", "Road Surface Condition"},
        {"roadway_alignment", "Roadway Alignment"},
        {"is_speeding_related", "Is Speeding Related"},
        {"is_aggressive_driving", "Is Aggressive Driving"},
        {"driver_age", "Driver Age"},
        {"driver_condition", "Driver Condition"},
        {"speed_at_crash", "Speed of Roadway Segment at a Time of Crash"},
        {"los_at_crash", "Level of Service of Roadway Segment at a Time of Crash"},
        {"speed_before_crash", "Speed of Roadway Segment 5 Minutes Before Crash"},
        {"los_before_crash", "Level of Service of Roadway Segment 5 Minutes Before Crash"},
        {"event_near_crash", "Event Near Crash Location"},
    };
    const auto it = names.find(field_key);
    if (it == names.end()) throw ValidationError("unknown field key: " + field_key);
    return it->second;
}

void validate_template(const PromptTemplate& t) {
    if (t.version.empty()) throw ValidationError("template: missing version");
    if (trim(t.preamble).empty()) throw ValidationError("template: empty preamble");
    if (trim(t.output_format).empty()) throw ValidationError("template: empty output format");
    const auto& keys = table1_field_keys();
    if (t.field_order.size() != keys.size()) {
        throw ValidationError("template: field order must list every crash parameter exactly once");
    }
    for (const auto& k : keys) {
        if (std::count(t.field_order.begin(), t.field_order.end(), k) != 1) {
            throw ValidationError("template: field '" + k + "' must appear exactly once");
        }
    }
    if (t.taxonomy.empty()) throw ValidationError("template: taxonomy is empty");
    for (const auto& label : t.taxonomy) {
        if (std::count(t.taxonomy.begin(), t.taxonomy.end(), label) != 1) {
            throw ValidationError("template: duplicate taxonomy label '" + label + "'");
        }
    }
    if (std::find(t.taxonomy.begin(), t.taxonomy.end(), "other") == t.taxonomy.end()) {
        throw ValidationError("template: taxonomy must include 'other'");
    }
}

PromptTemplate parse_template(const std::string& text) {
    PromptTemplate t;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::string preamble, output_format;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.rfind("VERSION", 0) == 0 && section.empty()) {
            t.version = trim(stripped.substr(7));
            continue;
        }
        if (stripped.size() >= 2 && stripped.front() == '[' && stripped.back() == ']') {
            section = stripped.substr(1, stripped.size() - 2);
            continue;
        }
        if (section == "PREAMBLE") {
            preamble += line;
            preamble += '\n';
        } else if (section == "OUTPUT_FORMAT") {
            output_format += line;
            output_format += '\n';
        } else if (section == "FIELD_ORDER") {
            if (!stripped.empty()) t.field_order.push_back(stripped);
        } else if (section == "TAXONOMY") {
            if (!stripped.empty()) t.taxonomy.push_back(stripped);
        } else if (!stripped.empty()) {
            throw ParseError("template: content outside any section: '" + stripped + "'");
        }
    }
    t.preamble = trim(preamble);
    t.output_format = trim(output_format);
    validate_template(t);
    return t;
}

PromptTemplate load_template(const std::string& path) {
    return parse_template(read_file(path));
}

PromptTemplate default_template() {
    PromptTemplate t;
    t.version = "v1";
    t.preamble =
        "You are a traffic safety expert analyzing freeway crashes. Given the crash "
        "parameters below, identify the single primary causation of the crash and "
        "explain your reasoning using the contributing factors present.";
    t.field_order = table1_field_keys();
    t.taxonomy = {
        "alcohol_or_drug_impairment",
        "speeding",
        "aggressive_driving",
        "speeding_and_aggressive",
        "driver_inattention",
        "driver_distraction",
        "driver_fatigue",
        "risky_driving",
        "congestion_related",
        "other",
    };
    t.output_format =
        "Answer with exactly two fields and nothing else:\n"
        "Causation: <one label from the list above>\n"
        "Explanation: <a short paragraph supporting the causation>";
    validate_template(t);
    return t;
}

namespace {

std::string field_value(const CrashCase& cc, const std::string& key) {
    using records::to_string;
    const records::CrashReport& r = cc.report;
    if (key == "crash_date_and_time") return format_rfc3339(r.datetime, 0);
    if (key == "crash_type") return to_string(r.crash_type);
    if (key == "crash_severity") return to_string(r.severity);
    if (key == "light_condition") return to_string(r.light);
    if (key == "weather_condition") return to_string(r.weather);
    if (key == "road_surface_condition") return to_string(r.surface);
    if (key == "roadway_alignment") return to_string(r.alignment);
    if (key == "is_speeding_related") return r.speeding_related ? "yes" : "no";
    if (key == "is_aggressive_driving") return r.aggressive_driving ? "yes" : "no";
    if (key == "driver_age") return r.driver_age ? std::to_string(*r.driver_age) : "unknown";
    if (key == "driver_condition") return to_string(r.driver_condition);
    if (key == "speed_at_crash") return to_string(cc.speed_category_at_crash);
    if (key == "los_at_crash") {
        return cc.traffic_at_crash ? to_string(cc.traffic_at_crash->level_of_service) : "unknown";
    }
    if (key == "speed_before_crash") return to_string(cc.speed_category_before);
    if (key == "los_before_crash") {
        return cc.traffic_before ? to_string(cc.traffic_before->level_of_service) : "unknown";
    }
    if (key == "event_near_crash") return to_string(cc.nearby_event);
    throw ValidationError("unknown field key: " + key);
}

}  // namespace

SerializedCase serialize_case(const CrashCase& cc, const PromptTemplate& tmpl,
                              TokenCounter counter) {
    std::string text = "Crash ID: " + cc.case_id() + "\n";
    for (const auto& key : tmpl.field_order) {
        text += display_name(key) + ": " + field_value(cc, key) + "\n";
    }
    SerializedCase sc;
    sc.case_id = cc.case_id();
    sc.text = text;
    sc.token_count = counter(text);
    sc.template_version = tmpl.version;
    return sc;
}

std::string build_case_message(const SerializedCase& sc, const PromptTemplate& tmpl) {
    validate_template(tmpl);
    std::string msg = sc.text;
    msg += "\nPossible causation labels:\n";
    for (const auto& label : tmpl.taxonomy) {
        msg += "- " + label + "\n";
    }
    msg += "\n";
    msg += tmpl.output_format;
    msg += "\n";
    return msg;
}

std::string build_classification_prompt(const SerializedCase& sc, const PromptTemplate& tmpl) {
    return tmpl.preamble + "\n\n" + build_case_message(sc, tmpl);
}

namespace {

// minimal UTF-8 decoding, enough to recognize Unicode whitespace
std::uint32_t decode_utf8(std::string_view s, std::size_t& i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
        ++i;
        return c;
    }
    std::size_t len = 1;
    std::uint32_t cp = c;
    if ((c & 0xE0) == 0xC0) {
        len = 2;
        cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
        len = 3;
        cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
        len = 4;
        cp = c & 0x07;
    }
    for (std::size_t k = 1; k < len && i + k < s.size(); ++k) {
        cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    }
    i += len;
    return cp;
}

bool is_unicode_space(std::uint32_t cp) {
    switch (cp) {
        case ' ': case '\t': case '\n': case '\r': case '\f': case '\v':
        case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
        case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_ascii_punct(std::uint32_t cp) {
    return cp < 0x80 && std::ispunct(static_cast<int>(cp)) != 0;
}

}  // namespace

std::vector<std::string> tokenize_text(std::string_view text) {
    std::vector<std::string> tokens;
    std::vector<std::pair<std::uint32_t, std::string>> chunk;  // codepoint + raw bytes
    const auto flush = [&]() {
        if (chunk.empty()) return;
        std::size_t begin = 0;
        std::size_t end = chunk.size();
        while (begin < end && is_ascii_punct(chunk[begin].first)) {
            tokens.push_back(chunk[begin].second);
            ++begin;
        }
        std::size_t core_end = end;
        while (core_end > begin && is_ascii_punct(chunk[core_end - 1].first)) --core_end;
        if (core_end > begin) {
            std::string word;
            for (std::size_t k = begin; k < core_end; ++k) word += chunk[k].second;
            tokens.push_back(std::move(word));
        }
        for (std::size_t k = core_end; k < end; ++k) tokens.push_back(chunk[k].second);
        chunk.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        const std::uint32_t cp = decode_utf8(text, i);
        if (is_unicode_space(cp)) {
            flush();
        } else {
            chunk.emplace_back(cp, std::string(text.substr(start, i - start)));
        }
    }
    flush();
    return tokens;
}

int count_tokens(std::string_view text) {
    return static_cast<int>(tokenize_text(text).size());
}

}  // namespace crashcause::prompt
