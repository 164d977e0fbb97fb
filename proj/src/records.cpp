#include "crashcause/records.hpp"

#include <algorithm>
#include <cmath>

#include "crashcause/csv.hpp"
#include "crashcause/util.hpp"

namespace crashcause::records {

namespace {

std::string canon(const std::string& s) {
    return to_lower(normalize_whitespace(s));
}

}  // namespace

std::string to_string(CrashType v) {
    switch (v) {
        case CrashType::rear_end: return "rear-end";
        case CrashType::sideswipe: return "sideswipe";
        case CrashType::angle: return "angle";
        case CrashType::single_vehicle: return "single vehicle";
        case CrashType::other: return "others";
    }
    return "others";
}

std::string to_string(Severity v) {
    switch (v) {
        case Severity::fatal: return "Fatal";
        case Severity::incapacitating: return "Incapacitating Injury";
        case Severity::non_incapacitating: return "Non-incapacitating injury";
        case Severity::possible_injury: return "Possible injury";
        case Severity::no_injury: return "No injury";
    }
    return "No injury";
}

std::string to_string(Light v) {
    switch (v) {
        case Light::daylight: return "Daylight";
        case Light::dark_with_light: return "Dark with light";
        case Light::dark_without_light: return "Dark without light";
        case Light::other: return "Others";
    }
    return "Others";
}

std::string to_string(Weather v) {
    switch (v) {
        case Weather::clear: return "Clear";
        case Weather::cloudy: return "Cloudy";
        case Weather::rain: return "Rain";
        case Weather::other: return "Others";
    }
    return "Others";
}

std::string to_string(Surface v) {
    switch (v) {
        case Surface::dry: return "Dry";
        case Surface::wet: return "Wet";
        case Surface::other: return "Others";
    }
    return "Others";
}

std::string to_string(Alignment v) {
    switch (v) {
        case Alignment::straight: return "Straight";
        case Alignment::curve: return "Curve";
        case Alignment::other: return "Others";
    }
    return "Others";
}

std::string to_string(DriverCondition v) {
    switch (v) {
        case DriverCondition::normal: return "normal";
        case DriverCondition::impaired_alcohol_or_drug: return "under the influence of alcohol/drug";
        case DriverCondition::other: return "others";
    }
    return "others";
}

std::string to_string(Los v) {
    switch (v) {
        case Los::A: return "A";
        case Los::B: return "B";
        case Los::C: return "C";
        case Los::D: return "D";
        case Los::E: return "E";
        case Los::F: return "F";
    }
    return "A";
}

std::string to_string(EventKind v) {
    switch (v) {
        case EventKind::none: return "no event";
        case EventKind::road_maintenance: return "road maintenance operations";
        case EventKind::traffic_congestion: return "traffic congestion";
        case EventKind::other: return "others";
    }
    return "no event";
}

std::string to_string(SpeedCategory v) {
    switch (v) {
        case SpeedCategory::high: return "high";
        case SpeedCategory::medium: return "medium";
        case SpeedCategory::low: return "low";
        case SpeedCategory::unknown: return "unknown";
    }
    return "unknown";
}

std::string to_string(Horizon v) {
    return v == Horizon::at_crash ? "at_crash" : "five_min_before";
}

CrashType parse_crash_type(const std::string& s) {
    const std::string c = canon(s);
    if (c == "rear-end" || c == "rear end" || c == "rear_end") return CrashType::rear_end;
    if (c == "sideswipe") return CrashType::sideswipe;
    if (c == "angle") return CrashType::angle;
    if (c == "single vehicle" || c == "single-vehicle" || c == "single_vehicle") {
        return CrashType::single_vehicle;
    }
    return CrashType::other;
}

Severity parse_severity(const std::string& s) {
    const std::string c = canon(s);
    if (c == "fatal") return Severity::fatal;
    if (c == "incapacitating injury" || c == "incapacitating") return Severity::incapacitating;
    if (c == "non-incapacitating injury" || c == "non-incapacitating" ||
        c == "non incapacitating injury") {
        return Severity::non_incapacitating;
    }
    if (c == "possible injury" || c == "possible_injury") return Severity::possible_injury;
    if (c == "no injury" || c == "no_injury" || c == "none") return Severity::no_injury;
    throw ValidationError("unknown crash severity: '" + s + "'");
}

Light parse_light(const std::string& s) {
    const std::string c = canon(s);
    if (c == "daylight") return Light::daylight;
    if (c == "dark with light" || c == "dark_with_light") return Light::dark_with_light;
    if (c == "dark without light" || c == "dark_without_light") return Light::dark_without_light;
    return Light::other;
}

Weather parse_weather(const std::string& s) {
    const std::string c = canon(s);
    if (c == "clear") return Weather::clear;
    if (c == "cloudy") return Weather::cloudy;
    if (c == "rain") return Weather::rain;
    return Weather::other;
}

Surface parse_surface(const std::string& s) {
    const std::string c = canon(s);
    if (c == "dry") return Surface::dry;
    if (c == "wet") return Surface::wet;
    return Surface::other;
}

Alignment parse_alignment(const std::string& s) {
    const std::string c = canon(s);
    if (c == "straight") return Alignment::straight;
    if (c == "curve") return Alignment::curve;
    return Alignment::other;
}

DriverCondition parse_driver_condition(const std::string& s) {
    const std::string c = canon(s);
    if (c == "normal") return DriverCondition::normal;
    if (c.find("alcohol") != std::string::npos || c.find("drug") != std::string::npos ||
        c == "impaired" || c == "impaired_alcohol_or_drug") {
        return DriverCondition::impaired_alcohol_or_drug;
    }
    return DriverCondition::other;
}

Los parse_los(const std::string& s) {
    std::string c = canon(s);
    if (c.rfind("los", 0) == 0) c = trim(c.substr(3));
    if (c.size() == 1) {
        switch (c[0]) {
            case 'a': return Los::A;
            case 'b': return Los::B;
            case 'c': return Los::C;
            case 'd': return Los::D;
            case 'e': return Los::E;
            case 'f': return Los::F;
            default: break;
        }
    }
    throw ValidationError("unknown level of service: '" + s + "'");
}

EventKind parse_event_kind(const std::string& s) {
    const std::string c = canon(s);
    if (c == "no event" || c == "none" || c.empty()) return EventKind::none;
    if (c.find("maintenance") != std::string::npos) return EventKind::road_maintenance;
    if (c.find("congestion") != std::string::npos) return EventKind::traffic_congestion;
    return EventKind::other;
}

Horizon parse_horizon(const std::string& s) {
    const std::string c = canon(s);
    if (c == "at_crash" || c == "at crash") return Horizon::at_crash;
    if (c == "five_min_before" || c == "5min_before" || c == "five minutes before") {
        return Horizon::five_min_before;
    }
    throw ValidationError("unknown horizon: '" + s + "' (expected at_crash or five_min_before)");
}

bool parse_yes_no(const std::string& s) {
    const std::string c = canon(s);
    if (c == "yes" || c == "y" || c == "true") return true;
    if (c == "no" || c == "n" || c == "false") return false;
    throw ValidationError("expected yes/no, got '" + s + "'");
}

SpeedCategory speed_category(double mean_speed, double speed_limit) {
    if (!(speed_limit > 0.0)) throw ValidationError("speed_category: speed limit must be > 0");
    if (mean_speed < 0.0) throw ValidationError("speed_category: mean speed must be >= 0");
    const double ratio = mean_speed / speed_limit;
    if (ratio > 0.90) return SpeedCategory::high;
    if (ratio >= 0.60) return SpeedCategory::medium;
    return SpeedCategory::low;
}

EventKind match_event(const CrashReport& report, std::span<const EventRecord> events) {
    const EventRecord* best = nullptr;
    double best_dist = 0.0;
    for (const auto& ev : events) {
        if (ev.end < ev.start) throw ValidationError("event '" + ev.event_id + "': end before start");
        if (report.datetime < ev.start || report.datetime > ev.end) continue;
        const double dist = std::fabs(ev.mile_marker - report.mile_marker);
        if (dist > 1.0) continue;
        if (best == nullptr || dist < best_dist ||
            (dist == best_dist && ev.start < best->start)) {
            best = &ev;
            best_dist = dist;
        }
    }
    return best ? best->kind : EventKind::none;
}

CrashCase join_case(const CrashReport& report,
                    std::span<const TrafficSnapshot> snapshots,
                    std::span<const EventRecord> events,
                    const std::string& segment_id) {
    CrashCase cc;
    cc.report = report;
    if (!segment_id.empty()) {
        const TrafficSnapshot* at = nullptr;
        const TrafficSnapshot* before = nullptr;
        for (const auto& snap : snapshots) {
            if (snap.segment_id != segment_id) continue;
            const TrafficSnapshot*& slot =
                snap.horizon == Horizon::at_crash ? at : before;
            if (slot != nullptr) {
                throw ValidationError("conflicting duplicate traffic snapshots for segment '" +
                                      segment_id + "', horizon " + to_string(snap.horizon));
            }
            slot = &snap;
        }
        if (at) cc.traffic_at_crash = *at;
        if (before) cc.traffic_before = *before;
    }
    if (cc.traffic_at_crash) {
        cc.speed_category_at_crash =
            speed_category(cc.traffic_at_crash->mean_speed, cc.traffic_at_crash->speed_limit);
    }
    if (cc.traffic_before) {
        cc.speed_category_before =
            speed_category(cc.traffic_before->mean_speed, cc.traffic_before->speed_limit);
    }
    cc.nearby_event = match_event(report, events);
    return cc;
}

namespace {

double parse_double_field(const std::string& s, const std::string& what, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
    }
}

}  // namespace

std::vector<CrashReport> parse_crash_csv(const std::string& text) {
    const csv::Table t = csv::parse(text);
    csv::require_columns(t,
                         {"crash_id", "crash_date_and_time", "mile_marker", "direction",
                          "crash_type", "crash_severity", "light_condition", "weather_condition",
                          "road_surface_condition", "roadway_alignment", "is_speeding_related",
                          "is_aggressive_driving", "driver_age", "driver_condition"},
                         "crash csv");
    std::vector<CrashReport> out;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::size_t line = t.row_lines[i];
        CrashReport r;
        r.crash_id = trim(t.at(i, "crash_id"));
        if (r.crash_id.empty()) throw ParseError("line " + std::to_string(line) + ": empty crash_id");
        try {
            r.datetime = parse_rfc3339(trim(t.at(i, "crash_date_and_time")));
            r.crash_type = parse_crash_type(t.at(i, "crash_type"));
            r.severity = parse_severity(t.at(i, "crash_severity"));
            r.light = parse_light(t.at(i, "light_condition"));
            r.weather = parse_weather(t.at(i, "weather_condition"));
            r.surface = parse_surface(t.at(i, "road_surface_condition"));
            r.alignment = parse_alignment(t.at(i, "roadway_alignment"));
            r.speeding_related = parse_yes_no(t.at(i, "is_speeding_related"));
            r.aggressive_driving = parse_yes_no(t.at(i, "is_aggressive_driving"));
            r.driver_condition = parse_driver_condition(t.at(i, "driver_condition"));
        } catch (const std::runtime_error& e) {
            throw ParseError("crash csv line " + std::to_string(line) + ": " + e.what());
        }
        r.mile_marker = parse_double_field(trim(t.at(i, "mile_marker")), "mile_marker", line);
        r.direction = trim(t.at(i, "direction"));
        const std::string age = canon(t.at(i, "driver_age"));
        if (!age.empty() && age != "unknown") {
            int a = 0;
            try {
                a = std::stoi(age);
            } catch (const std::exception&) {
                throw ParseError("crash csv line " + std::to_string(line) + ": bad driver_age '" + age + "'");
            }
            if (a < 10 || a > 120) {
                throw ValidationError("crash csv line " + std::to_string(line) +
                                      ": driver_age out of range [10, 120]");
            }
            r.driver_age = a;
        }
        if (std::find(ids.begin(), ids.end(), r.crash_id) != ids.end()) {
            throw ValidationError("crash csv: duplicate crash_id '" + r.crash_id + "'");
        }
        ids.push_back(r.crash_id);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<TrafficSnapshot> parse_traffic_csv(const std::string& text) {
    const csv::Table t = csv::parse(text);
    csv::require_columns(
        t, {"segment_id", "timestamp", "mean_speed", "speed_limit", "los", "horizon"},
        "traffic csv");
    std::vector<TrafficSnapshot> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::size_t line = t.row_lines[i];
        TrafficSnapshot s;
        s.segment_id = trim(t.at(i, "segment_id"));
        try {
            s.timestamp = parse_rfc3339(trim(t.at(i, "timestamp")));
            s.level_of_service = parse_los(t.at(i, "los"));
            s.horizon = parse_horizon(t.at(i, "horizon"));
        } catch (const std::runtime_error& e) {
            throw ParseError("traffic csv line " + std::to_string(line) + ": " + e.what());
        }
        s.mean_speed = parse_double_field(trim(t.at(i, "mean_speed")), "mean_speed", line);
        s.speed_limit = parse_double_field(trim(t.at(i, "speed_limit")), "speed_limit", line);
        if (s.mean_speed < 0.0) {
            throw ValidationError("traffic csv line " + std::to_string(line) + ": mean_speed < 0");
        }
        if (!(s.speed_limit > 0.0)) {
            throw ValidationError("traffic csv line " + std::to_string(line) + ": speed_limit <= 0");
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<EventRecord> parse_events_csv(const std::string& text) {
    const csv::Table t = csv::parse(text);
    csv::require_columns(t, {"event_id", "kind", "mile_marker", "start", "end"}, "events csv");
    std::vector<EventRecord> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::size_t line = t.row_lines[i];
        EventRecord e;
        e.event_id = trim(t.at(i, "event_id"));
        e.kind = parse_event_kind(t.at(i, "kind"));
        e.mile_marker = parse_double_field(trim(t.at(i, "mile_marker")), "mile_marker", line);
        if (e.mile_marker < 0.0) {
            throw ValidationError("events csv line " + std::to_string(line) + ": mile_marker < 0");
        }
        try {
            e.start = parse_rfc3339(trim(t.at(i, "start")));
            e.end = parse_rfc3339(trim(t.at(i, "end")));
        } catch (const std::runtime_error& err) {
            throw ParseError("events csv line " + std::to_string(line) + ": " + err.what());
        }
        if (e.end < e.start) {
            throw ValidationError("events csv line " + std::to_string(line) + ": end before start");
        }
        out.push_back(std::move(e));
    }
    return out;
}

namespace {

template <typename Fn>
auto load_with_context(const std::string& path, Fn&& parse_fn) {
    try {
        return parse_fn(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

}  // namespace

std::vector<CrashReport> load_crash_csv(const std::string& path) {
    return load_with_context(path, [](const std::string& s) { return parse_crash_csv(s); });
}

std::vector<TrafficSnapshot> load_traffic_csv(const std::string& path) {
    return load_with_context(path, [](const std::string& s) { return parse_traffic_csv(s); });
}

std::vector<EventRecord> load_events_csv(const std::string& path) {
    return load_with_context(path, [](const std::string& s) { return parse_events_csv(s); });
}

}  // namespace crashcause::records
