#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace crashcause::expert {

inline constexpr int kQuestionCount = 3;

// The three questionnaire items, per rating: is the causation reasonable, is
// the explanation reasonable, is the explanation descriptive and clear.
struct Rating {
    std::string crash_id;
    std::string rater_id;
    std::array<bool, kQuestionCount> answers{};
};

struct QuestionStat {
    std::uint64_t yes_count = 0;
    std::uint64_t total = 0;
    double percentage = 0.0;  // 2 decimals, round-half-up
};

struct AgreementReport {
    std::array<QuestionStat, kQuestionCount> per_question{};
    std::map<std::string, std::array<QuestionStat, kQuestionCount>> by_rater;
    std::map<std::string, std::array<QuestionStat, kQuestionCount>> by_crash;
};

const char* question_name(int index);

AgreementReport aggregate(std::span<const Rating> ratings);

enum class BreakdownAxis { by_rater, by_crash };
std::map<std::string, std::array<QuestionStat, kQuestionCount>> breakdown(
    std::span<const Rating> ratings, BreakdownAxis axis);

std::vector<Rating> parse_survey_csv(const std::string& text);
std::vector<Rating> load_survey_csv(const std::string& path);

std::string report_to_json(const AgreementReport& report);
std::string report_to_text(const AgreementReport& report);

}  // namespace crashcause::expert
