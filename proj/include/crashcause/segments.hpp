#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crashcause/classifier.hpp"
#include "crashcause/records.hpp"

namespace crashcause::segments {

struct SegmentDefinition {
    std::string segment_id;
    std::string name;
    double mm_start = 0.0;  // half-open range [mm_start, mm_end)
    double mm_end = 0.0;
    std::string direction;
};

// validated, non-overlapping per direction
class SegmentSet {
public:
    explicit SegmentSet(std::vector<SegmentDefinition> defs);

    const std::vector<SegmentDefinition>& defs() const { return defs_; }
    const SegmentDefinition* find(const std::string& segment_id) const;

private:
    std::vector<SegmentDefinition> defs_;
};

SegmentSet load_segments(const std::string& path);
SegmentSet parse_segments(const std::string& json_text);

// the unique segment whose range contains the crash mile-marker with
// matching direction, or nullopt
std::optional<std::string> assign_segment(const records::CrashCase& cc, const SegmentSet& segments);

using SeverityWeights = std::array<double, records::kSeverityLevels>;  // indexed by Severity

inline constexpr SeverityWeights kDefaultSeverityWeights = {10.0, 5.0, 3.0, 2.0, 1.0};

struct SegmentSummary {
    std::string segment_id;
    std::uint64_t total_crashes = 0;
    std::uint64_t analyzed_crashes = 0;  // crashes with traffic data
    std::array<std::uint64_t, records::kSeverityLevels> severity_histogram{};
    double hotspot_score = 0.0;
};

struct LabelShare {
    classify::CausationLabel label = classify::CausationLabel::other;
    std::uint64_t count = 0;
    int percentage = 0;
};

struct CausationDistribution {
    std::string segment_id;
    std::vector<LabelShare> shares;   // zero-count labels omitted, sorted by
                                      // count desc then label name
    std::uint64_t denominator = 0;    // analyzed crashes in the segment
    bool empty_flag = false;          // set when denominator is zero
};

std::vector<SegmentSummary> build_summaries(std::span<const records::CrashCase> cases,
                                            const SegmentSet& segments);

// hotspot_score = sum over severities of count * weight; descending order,
// ties by total_crashes (more first) then segment_id
std::vector<SegmentSummary> rank_hotspots(std::vector<SegmentSummary> summaries,
                                          const SeverityWeights& weights, std::size_t top_k);

// Results whose case is assigned to the segment and carries traffic data.
std::vector<classify::CausationResult> results_for_segment(
    std::span<const classify::CausationResult> results,
    std::span<const records::CrashCase> cases, const SegmentSet& segments,
    const std::string& segment_id);

CausationDistribution causation_distribution(std::span<const classify::CausationResult> results,
                                             std::span<const records::CrashCase> cases,
                                             const SegmentSet& segments,
                                             const std::string& segment_id);

// counts of contributing-factor tags; pass a label to restrict the tally to
// results with that primary causation
std::map<classify::FactorTag, std::uint64_t> factor_tally(
    std::span<const classify::CausationResult> results,
    std::optional<classify::CausationLabel> given_label = std::nullopt);

enum class ReportFormat { json, csv, markdown, svg_bars };

ReportFormat parse_report_format(const std::string& s);
std::string format_extension(ReportFormat f);

struct ReportBundle {
    std::vector<SegmentSummary> summaries;  // report order
    std::map<std::string, CausationDistribution> distributions;        // by segment
    std::map<std::string, std::map<classify::FactorTag, std::uint64_t>> tallies;  // by segment
    std::map<std::string, std::string> segment_names;
};

std::string render_report(const ReportBundle& bundle, ReportFormat format);

}  // namespace crashcause::segments
