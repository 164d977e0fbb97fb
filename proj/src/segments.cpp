#include "crashcause/segments.hpp"

#include <algorithm>
#include <cmath>

#include "crashcause/csv.hpp"
#include "crashcause/util.hpp"
#include "json.hpp"

namespace crashcause::segments {

using classify::CausationLabel;
using classify::CausationResult;
using classify::FactorTag;
using nlohmann::json;
using records::CrashCase;

SegmentSet::SegmentSet(std::vector<SegmentDefinition> defs) : defs_(std::move(defs)) {
    for (const auto& d : defs_) {
        if (d.segment_id.empty()) throw ValidationError("segment with empty id");
        if (!(d.mm_start < d.mm_end)) {
            throw ValidationError("segment '" + d.segment_id + "': mm_start must be < mm_end");
        }
    }
    for (std::size_t i = 0; i < defs_.size(); ++i) {
        for (std::size_t j = i + 1; j < defs_.size(); ++j) {
            const auto& a = defs_[i];
            const auto& b = defs_[j];
            if (a.segment_id == b.segment_id) {
                throw ValidationError("duplicate segment id '" + a.segment_id + "'");
            }
            if (a.direction != b.direction) continue;
            if (a.mm_start < b.mm_end && b.mm_start < a.mm_end) {
                throw ValidationError("segments '" + a.segment_id + "' and '" + b.segment_id +
                                      "' overlap on direction " + a.direction);
            }
        }
    }
}

const SegmentDefinition* SegmentSet::find(const std::string& segment_id) const {
    for (const auto& d : defs_) {
        if (d.segment_id == segment_id) return &d;
    }
    return nullptr;
}

SegmentSet parse_segments(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("segments: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("segments: top level must be a JSON array");
    std::vector<SegmentDefinition> defs;
    for (const auto& entry : doc) {
        SegmentDefinition d;
        try {
            d.segment_id = entry.at("segment_id").get<std::string>();
            d.name = entry.value("name", d.segment_id);
            d.mm_start = entry.at("mm_start").get<double>();
            d.mm_end = entry.at("mm_end").get<double>();
            d.direction = entry.at("direction").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError(std::string("segments: ") + e.what());
        }
        defs.push_back(std::move(d));
    }
    return SegmentSet(std::move(defs));
}

SegmentSet load_segments(const std::string& path) {
    return parse_segments(read_file(path));
}

std::optional<std::string> assign_segment(const CrashCase& cc, const SegmentSet& segments) {
    for (const auto& d : segments.defs()) {
        if (d.direction != cc.report.direction) continue;
        if (cc.report.mile_marker >= d.mm_start && cc.report.mile_marker < d.mm_end) {
            return d.segment_id;
        }
    }
    return std::nullopt;
}

std::vector<SegmentSummary> build_summaries(std::span<const CrashCase> cases,
                                            const SegmentSet& segments) {
    std::map<std::string, SegmentSummary> by_segment;
    for (const auto& d : segments.defs()) {
        by_segment[d.segment_id].segment_id = d.segment_id;
    }
    for (const auto& cc : cases) {
        const auto seg = assign_segment(cc, segments);
        if (!seg) continue;
        SegmentSummary& s = by_segment[*seg];
        s.total_crashes += 1;
        if (cc.has_traffic_data()) s.analyzed_crashes += 1;
        s.severity_histogram[static_cast<std::size_t>(cc.report.severity)] += 1;
    }
    std::vector<SegmentSummary> out;
    out.reserve(by_segment.size());
    for (auto& [id, s] : by_segment) out.push_back(std::move(s));
    return out;
}

std::vector<SegmentSummary> rank_hotspots(std::vector<SegmentSummary> summaries,
                                          const SeverityWeights& weights, std::size_t top_k) {
    for (double w : weights) {
        if (!(w > 0.0)) throw ValidationError("rank_hotspots: severity weights must be positive");
    }
    for (auto& s : summaries) {
        double score = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            score += static_cast<double>(s.severity_histogram[i]) * weights[i];
        }
        s.hotspot_score = score;
    }
    std::sort(summaries.begin(), summaries.end(),
              [](const SegmentSummary& a, const SegmentSummary& b) {
                  if (a.hotspot_score != b.hotspot_score) return a.hotspot_score > b.hotspot_score;
                  if (a.total_crashes != b.total_crashes) return a.total_crashes > b.total_crashes;
                  return a.segment_id < b.segment_id;
              });
    if (summaries.size() > top_k) summaries.resize(top_k);
    return summaries;
}

std::vector<CausationResult> results_for_segment(std::span<const CausationResult> results,
                                                 std::span<const CrashCase> cases,
                                                 const SegmentSet& segments,
                                                 const std::string& segment_id) {
    std::map<std::string, const CrashCase*> by_id;
    for (const auto& cc : cases) by_id[cc.case_id()] = &cc;
    std::vector<CausationResult> out;
    for (const auto& r : results) {
        const auto it = by_id.find(r.case_id);
        if (it == by_id.end()) continue;
        const CrashCase& cc = *it->second;
        if (!cc.has_traffic_data()) continue;
        const auto seg = assign_segment(cc, segments);
        if (seg && *seg == segment_id) out.push_back(r);
    }
    return out;
}

CausationDistribution causation_distribution(std::span<const CausationResult> results,
                                             std::span<const CrashCase> cases,
                                             const SegmentSet& segments,
                                             const std::string& segment_id) {
    const std::vector<CausationResult> in_segment =
        results_for_segment(results, cases, segments, segment_id);
    CausationDistribution dist;
    dist.segment_id = segment_id;
    dist.denominator = in_segment.size();
    if (dist.denominator == 0) {
        dist.empty_flag = true;
        return dist;
    }
    std::map<std::string, LabelShare> by_label;
    for (const auto& r : in_segment) {
        LabelShare& share = by_label[classify::to_string(r.label)];
        share.label = r.label;
        share.count += 1;
    }
    for (auto& [name, share] : by_label) {
        share.percentage = percent_round(share.count, dist.denominator);
        dist.shares.push_back(share);
    }
    std::sort(dist.shares.begin(), dist.shares.end(), [](const LabelShare& a, const LabelShare& b) {
        if (a.count != b.count) return a.count > b.count;
        return classify::to_string(a.label) < classify::to_string(b.label);
    });
    return dist;
}

std::map<FactorTag, std::uint64_t> factor_tally(std::span<const CausationResult> results,
                                                std::optional<CausationLabel> given_label) {
    std::map<FactorTag, std::uint64_t> tally;
    for (const auto& r : results) {
        if (given_label && r.label != *given_label) continue;
        for (FactorTag t : r.contributing_factors) tally[t] += 1;
    }
    return tally;
}

ReportFormat parse_report_format(const std::string& s) {
    const std::string c = to_lower(trim(s));
    if (c == "json") return ReportFormat::json;
    if (c == "csv") return ReportFormat::csv;
    if (c == "markdown" || c == "md") return ReportFormat::markdown;
    if (c == "svg" || c == "svg_bars") return ReportFormat::svg_bars;
    throw ValidationError("unknown report format: '" + s + "'");
}

std::string format_extension(ReportFormat f) {
    switch (f) {
        case ReportFormat::json: return "json";
        case ReportFormat::csv: return "csv";
        case ReportFormat::markdown: return "md";
        case ReportFormat::svg_bars: return "svg";
    }
    return "json";
}

namespace {

const char* severity_key(std::size_t i) {
    switch (static_cast<records::Severity>(i)) {
        case records::Severity::fatal: return "fatal";
        case records::Severity::incapacitating: return "incapacitating";
        case records::Severity::non_incapacitating: return "non_incapacitating";
        case records::Severity::possible_injury: return "possible_injury";
        case records::Severity::no_injury: return "no_injury";
    }
    return "no_injury";
}

std::string render_json(const ReportBundle& b) {
    json segments_arr = json::array();
    for (const auto& s : b.summaries) {
        json hist = json::object();
        for (std::size_t i = 0; i < s.severity_histogram.size(); ++i) {
            hist[severity_key(i)] = s.severity_histogram[i];
        }
        json dist_arr = json::array();
        if (const auto it = b.distributions.find(s.segment_id); it != b.distributions.end()) {
            for (const auto& share : it->second.shares) {
                dist_arr.push_back({{"label", classify::to_string(share.label)},
                                    {"count", share.count},
                                    {"percentage", share.percentage}});
            }
        }
        json factors = json::object();
        if (const auto it = b.tallies.find(s.segment_id); it != b.tallies.end()) {
            for (const auto& [tag, count] : it->second) {
                factors[classify::to_string(tag)] = count;
            }
        }
        std::string name = s.segment_id;
        if (const auto it = b.segment_names.find(s.segment_id); it != b.segment_names.end()) {
            name = it->second;
        }
        segments_arr.push_back({{"segment_id", s.segment_id},
                                {"name", name},
                                {"total_crashes", s.total_crashes},
                                {"analyzed_crashes", s.analyzed_crashes},
                                {"severity_histogram", hist},
                                {"hotspot_score", s.hotspot_score},
                                {"distribution", dist_arr},
                                {"factors", factors}});
    }
    const json doc = {{"schema_version", 1}, {"segments", segments_arr}};
    return doc.dump(2) + "\n";
}

std::string render_csv(const ReportBundle& b) {
    std::string out = "segment_id,total_crashes,analyzed_crashes,hotspot_score,label,count,percentage\n";
    for (const auto& s : b.summaries) {
        const auto base = [&]() {
            return csv::escape(s.segment_id) + "," + std::to_string(s.total_crashes) + "," +
                   std::to_string(s.analyzed_crashes) + "," + format_double(s.hotspot_score);
        };
        const auto it = b.distributions.find(s.segment_id);
        if (it == b.distributions.end() || it->second.shares.empty()) {
            out += base() + ",,,\n";
            continue;
        }
        for (const auto& share : it->second.shares) {
            out += base() + "," + classify::to_string(share.label) + "," +
                   std::to_string(share.count) + "," + std::to_string(share.percentage) + "\n";
        }
    }
    return out;
}

std::string render_markdown(const ReportBundle& b) {
    std::string out = "# Segment causation report\n";
    for (const auto& s : b.summaries) {
        std::string name = s.segment_id;
        if (const auto it = b.segment_names.find(s.segment_id); it != b.segment_names.end()) {
            name = it->second;
        }
        out += "\n## " + s.segment_id;
        if (name != s.segment_id) out += " - " + name;
        out += "\n\n";
        out += "- total crashes: " + std::to_string(s.total_crashes) + "\n";
        out += "- analyzed (with traffic data): " + std::to_string(s.analyzed_crashes) + "\n";
        out += "- hotspot score: " + format_double(s.hotspot_score) + "\n";
        out += "- severity: ";
        for (std::size_t i = 0; i < s.severity_histogram.size(); ++i) {
            if (i) out += ", ";
            out += std::string(severity_key(i)) + " " + std::to_string(s.severity_histogram[i]);
        }
        out += "\n";
        const auto dit = b.distributions.find(s.segment_id);
        if (dit != b.distributions.end() && !dit->second.shares.empty()) {
            out += "\n| causation | count | share |\n|---|---|---|\n";
            for (const auto& share : dit->second.shares) {
                out += "| " + classify::to_string(share.label) + " | " +
                       std::to_string(share.count) + " | " + std::to_string(share.percentage) +
                       "% |\n";
            }
        } else {
            out += "\nNo analyzed crashes with traffic data in this segment.\n";
        }
        const auto tit = b.tallies.find(s.segment_id);
        if (tit != b.tallies.end() && !tit->second.empty()) {
            std::vector<std::pair<FactorTag, std::uint64_t>> ordered(tit->second.begin(),
                                                                     tit->second.end());
            std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b2) {
                if (a.second != b2.second) return a.second > b2.second;
                return classify::to_string(a.first) < classify::to_string(b2.first);
            });
            out += "\nTop contributing factors: ";
            for (std::size_t i = 0; i < ordered.size(); ++i) {
                if (i) out += ", ";
                out += classify::to_string(ordered[i].first) + " (" +
                       std::to_string(ordered[i].second) + ")";
            }
            out += "\n";
        }
    }
    return out;
}

std::string render_svg(const ReportBundle& b) {
    const int bar_height = 22;
    const int gap = 6;
    const int label_width = 230;
    const int chart_width = 420;
    const int header = 28;
    const int section_gap = 24;

    // measure
    int total_height = 10;
    for (const auto& s : b.summaries) {
        const auto it = b.distributions.find(s.segment_id);
        const std::size_t nbars = it == b.distributions.end() ? 0 : it->second.shares.size();
        total_height += header + static_cast<int>(nbars) * (bar_height + gap) + section_gap;
    }
    const int width = label_width + chart_width + 80;

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           std::to_string(width) + "\" height=\"" + std::to_string(total_height) + "\">\n";
    out += "<style>text{font-family:sans-serif;font-size:13px;}</style>\n";
    int y = 10;
    for (const auto& s : b.summaries) {
        std::string name = s.segment_id;
        if (const auto it = b.segment_names.find(s.segment_id); it != b.segment_names.end()) {
            name = it->second;
        }
        out += "<text x=\"10\" y=\"" + std::to_string(y + 14) +
               "\" font-weight=\"bold\">" + s.segment_id + " - " + name + " (analyzed " +
               std::to_string(s.analyzed_crashes) + " of " + std::to_string(s.total_crashes) +
               ")</text>\n";
        y += header;
        const auto dit = b.distributions.find(s.segment_id);
        if (dit != b.distributions.end()) {
            for (const auto& share : dit->second.shares) {
                const int w = share.percentage * chart_width / 100;
                out += "<text x=\"10\" y=\"" + std::to_string(y + 15) + "\">" +
                       classify::to_string(share.label) + "</text>\n";
                out += "<rect x=\"" + std::to_string(label_width) + "\" y=\"" +
                       std::to_string(y) + "\" width=\"" + std::to_string(w) + "\" height=\"" +
                       std::to_string(bar_height) + "\" fill=\"#4878a8\"/>\n";
                out += "<text x=\"" + std::to_string(label_width + w + 6) + "\" y=\"" +
                       std::to_string(y + 15) + "\">" + std::to_string(share.percentage) +
                       "%</text>\n";
                y += bar_height + gap;
            }
        }
        y += section_gap;
    }
    out += "</svg>\n";
    return out;
}

}  // namespace

std::string render_report(const ReportBundle& bundle, ReportFormat format) {
    switch (format) {
        case ReportFormat::json: return render_json(bundle);
        case ReportFormat::csv: return render_csv(bundle);
        case ReportFormat::markdown: return render_markdown(bundle);
        case ReportFormat::svg_bars: return render_svg(bundle);
    }
    throw ValidationError("unknown report format");
}

}  // namespace crashcause::segments
