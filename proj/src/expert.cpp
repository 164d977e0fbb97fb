#include "crashcause/expert.hpp"

#include <set>

#include "crashcause/csv.hpp"
#include "crashcause/records.hpp"
#include "crashcause/util.hpp"
#include "json.hpp"

namespace crashcause::expert {

using nlohmann::json;

const char* question_name(int index) {
    switch (index) {
        case 0: return "Is Causation Reasonable?";
        case 1: return "Is Explanation Reasonable?";
        case 2: return "Is Explanation Descriptive and Clear?";
        default: throw ValidationError("question index out of range");
    }
}

namespace {

void check_unique(std::span<const Rating> ratings) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : ratings) {
        if (!seen.emplace(r.crash_id, r.rater_id).second) {
            throw ValidationError("duplicate rating for crash '" + r.crash_id + "' by rater '" +
                                  r.rater_id + "'");
        }
    }
}

std::array<QuestionStat, kQuestionCount> tally(std::span<const Rating> ratings) {
    std::array<QuestionStat, kQuestionCount> stats{};
    for (const auto& r : ratings) {
        for (int q = 0; q < kQuestionCount; ++q) {
            stats[static_cast<std::size_t>(q)].total += 1;
            if (r.answers[static_cast<std::size_t>(q)]) {
                stats[static_cast<std::size_t>(q)].yes_count += 1;
            }
        }
    }
    for (auto& s : stats) {
        s.percentage = s.total == 0 ? 0.0 : percent_2dp(s.yes_count, s.total);
    }
    return stats;
}

}  // namespace

AgreementReport aggregate(std::span<const Rating> ratings) {
    if (ratings.empty()) throw ValidationError("survey is empty");
    check_unique(ratings);
    AgreementReport report;
    report.per_question = tally(ratings);
    report.by_rater = breakdown(ratings, BreakdownAxis::by_rater);
    report.by_crash = breakdown(ratings, BreakdownAxis::by_crash);
    return report;
}

std::map<std::string, std::array<QuestionStat, kQuestionCount>> breakdown(
    std::span<const Rating> ratings, BreakdownAxis axis) {
    check_unique(ratings);
    std::map<std::string, std::vector<Rating>> groups;
    for (const auto& r : ratings) {
        groups[axis == BreakdownAxis::by_rater ? r.rater_id : r.crash_id].push_back(r);
    }
    std::map<std::string, std::array<QuestionStat, kQuestionCount>> out;
    for (const auto& [key, group] : groups) out[key] = tally(group);
    return out;
}

std::vector<Rating> parse_survey_csv(const std::string& text) {
    const csv::Table t = csv::parse(text);
    csv::require_columns(t, {"crash_id", "rater_id", "q1", "q2", "q3"}, "survey csv");
    std::vector<Rating> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        Rating r;
        r.crash_id = trim(t.at(i, "crash_id"));
        r.rater_id = trim(t.at(i, "rater_id"));
        if (r.crash_id.empty() || r.rater_id.empty()) {
            throw ParseError("survey csv line " + std::to_string(t.row_lines[i]) +
                             ": empty crash_id or rater_id");
        }
        try {
            r.answers[0] = records::parse_yes_no(t.at(i, "q1"));
            r.answers[1] = records::parse_yes_no(t.at(i, "q2"));
            r.answers[2] = records::parse_yes_no(t.at(i, "q3"));
        } catch (const std::runtime_error& e) {
            throw ParseError("survey csv line " + std::to_string(t.row_lines[i]) + ": " +
                             e.what());
        }
        out.push_back(std::move(r));
    }
    check_unique(out);
    return out;
}

std::vector<Rating> load_survey_csv(const std::string& path) {
    try {
        return parse_survey_csv(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

namespace {

json stats_to_json(const std::array<QuestionStat, kQuestionCount>& stats) {
    json out = json::object();
    for (int q = 0; q < kQuestionCount; ++q) {
        const auto& s = stats[static_cast<std::size_t>(q)];
        out["q" + std::to_string(q + 1)] = {{"yes", s.yes_count},
                                            {"total", s.total},
                                            {"percentage", s.percentage}};
    }
    return out;
}

}  // namespace

std::string report_to_json(const AgreementReport& report) {
    json by_rater = json::object();
    for (const auto& [k, v] : report.by_rater) by_rater[k] = stats_to_json(v);
    json by_crash = json::object();
    for (const auto& [k, v] : report.by_crash) by_crash[k] = stats_to_json(v);
    const json doc = {{"per_question", stats_to_json(report.per_question)},
                      {"by_rater", by_rater},
                      {"by_crash", by_crash}};
    return doc.dump(2) + "\n";
}

std::string report_to_text(const AgreementReport& report) {
    std::string out;
    for (int q = 0; q < kQuestionCount; ++q) {
        const auto& s = report.per_question[static_cast<std::size_t>(q)];
        out += std::string(question_name(q)) + " " + format_fixed(s.percentage, 2) + "% (" +
               std::to_string(s.yes_count) + "/" + std::to_string(s.total) + ")\n";
    }
    return out;
}

}  // namespace crashcause::expert
