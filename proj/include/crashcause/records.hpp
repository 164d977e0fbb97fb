#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crashcause::records {

enum class CrashType { rear_end, sideswipe, angle, single_vehicle, other };
enum class Severity { fatal, incapacitating, non_incapacitating, possible_injury, no_injury };
enum class Light { daylight, dark_with_light, dark_without_light, other };
enum class Weather { clear, cloudy, rain, other };
enum class Surface { dry, wet, other };
enum class Alignment { straight, curve, other };
enum class DriverCondition { normal, impaired_alcohol_or_drug, other };
enum class Los { A, B, C, D, E, F };
enum class EventKind { none, road_maintenance, traffic_congestion, other };
enum class SpeedCategory { high, medium, low, unknown };
enum class Horizon { at_crash, five_min_before };

inline constexpr int kSeverityLevels = 5;

// string forms used in CSV files and serialized prompts
std::string to_string(CrashType v);
std::string to_string(Severity v);
std::string to_string(Light v);
std::string to_string(Weather v);
std::string to_string(Surface v);
std::string to_string(Alignment v);
std::string to_string(DriverCondition v);
std::string to_string(Los v);
std::string to_string(EventKind v);
std::string to_string(SpeedCategory v);
std::string to_string(Horizon v);

// Closed deserialization: unknown strings land on the enum's other variant.
// Severity and LOS have no catch-all, so unknown strings are errors there.
CrashType parse_crash_type(const std::string& s);
Severity parse_severity(const std::string& s);
Light parse_light(const std::string& s);
Weather parse_weather(const std::string& s);
Surface parse_surface(const std::string& s);
Alignment parse_alignment(const std::string& s);
DriverCondition parse_driver_condition(const std::string& s);
Los parse_los(const std::string& s);
EventKind parse_event_kind(const std::string& s);
Horizon parse_horizon(const std::string& s);
bool parse_yes_no(const std::string& s);

struct CrashReport {
    std::string crash_id;
    std::int64_t datetime = 0;  // epoch seconds
    double mile_marker = 0.0;
    std::string direction;
    CrashType crash_type = CrashType::other;
    Severity severity = Severity::no_injury;
    Light light = Light::other;
    Weather weather = Weather::other;
    Surface surface = Surface::other;
    Alignment alignment = Alignment::other;
    bool speeding_related = false;
    bool aggressive_driving = false;
    std::optional<int> driver_age;  // empty = unknown
    DriverCondition driver_condition = DriverCondition::other;
};

struct TrafficSnapshot {
    std::string segment_id;
    std::int64_t timestamp = 0;
    double mean_speed = 0.0;
    double speed_limit = 0.0;
    Los level_of_service = Los::A;
    Horizon horizon = Horizon::at_crash;
};

struct EventRecord {
    std::string event_id;
    EventKind kind = EventKind::none;
    double mile_marker = 0.0;
    std::int64_t start = 0;
    std::int64_t end = 0;
};

struct CrashCase {
    CrashReport report;
    std::optional<TrafficSnapshot> traffic_at_crash;
    std::optional<TrafficSnapshot> traffic_before;
    EventKind nearby_event = EventKind::none;
    SpeedCategory speed_category_at_crash = SpeedCategory::unknown;
    SpeedCategory speed_category_before = SpeedCategory::unknown;

    const std::string& case_id() const { return report.crash_id; }
    bool has_traffic_data() const {
        return traffic_at_crash.has_value() || traffic_before.has_value();
    }
};

// Table 1 thresholds: high strictly above 90% of the limit, medium for the
// closed interval [60%, 90%], low strictly below 60%.
SpeedCategory speed_category(double mean_speed, double speed_limit);

// Events match when the crash time lies inside [start, end] and the event is
// within 1 mile of the crash. Nearest wins; ties go to the earliest start.
EventKind match_event(const CrashReport& report, std::span<const EventRecord> events);

// segment_id names the roadway segment the crash sits on (resolved by the
// caller, typically via segment_analytics); empty means unassigned.
CrashCase join_case(const CrashReport& report,
                    std::span<const TrafficSnapshot> snapshots,
                    std::span<const EventRecord> events,
                    const std::string& segment_id);

// CSV loaders per External Interfaces; column names are the Table 1
// parameter names in snake_case.
std::vector<CrashReport> load_crash_csv(const std::string& path);
std::vector<TrafficSnapshot> load_traffic_csv(const std::string& path);
std::vector<EventRecord> load_events_csv(const std::string& path);

std::vector<CrashReport> parse_crash_csv(const std::string& text);
std::vector<TrafficSnapshot> parse_traffic_csv(const std::string& text);
std::vector<EventRecord> parse_events_csv(const std::string& text);

}  // namespace crashcause::records
