#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crashcause/prompt.hpp"
#include "crashcause/records.hpp"
#include "crashcause/util.hpp"

namespace crashcause::classify {

enum class CausationLabel {
    alcohol_or_drug_impairment,
    speeding,
    aggressive_driving,
    speeding_and_aggressive,
    driver_inattention,
    driver_distraction,
    driver_fatigue,
    risky_driving,
    congestion_related,
    other,
};

const std::vector<CausationLabel>& all_labels();
std::string to_string(CausationLabel v);
std::optional<CausationLabel> label_from_string(const std::string& s);

enum class FactorTag {
    impairment,
    speeding,
    aggressive,
    congestion,
    maintenance_event,
    dark,
    wet_surface,
    high_speed_segment,
    lane_change,
    teen_driver,
    elderly_driver,
    fatigue,
    distraction,
};

std::string to_string(FactorTag v);
std::optional<FactorTag> factor_from_string(const std::string& s);

struct CausationResult {
    std::string case_id;
    CausationLabel label = CausationLabel::other;
    std::string explanation;
    std::vector<FactorTag> contributing_factors;  // deduplicated, in tag order
    std::string backend_id;
    std::string raw_response;
};

enum class BackendKind { oracle, http_llm };

struct BackendConfig {
    BackendKind kind = BackendKind::oracle;
    std::string endpoint;        // e.g. http://host:port/v1/chat/completions
    std::string model;           // model name sent in the request body
    double timeout_seconds = 30.0;
    int max_tries = 3;           // total attempts per request
    double backoff_base_seconds = 1.0;
    std::string auth_header = "Authorization";
    std::string credential_env = "CRASHCAUSE_API_KEY";
    double temperature = 0.0;    // fixed at 0; kept for the wire format
    std::string cache_dir;       // empty disables caching

    std::string backend_id() const;
};

// Thrown when a response cannot be parsed even after the reprompt; carries
// the raw text for audit.
struct ResponseParseError : ParseError {
    std::string raw_response;
    ResponseParseError(const std::string& msg, std::string raw)
        : ParseError(msg), raw_response(std::move(raw)) {}
};

// Scans for the first "Causation:" line, matches the value against taxonomy
// names and their human-readable aliases, then takes the trailing
// "Explanation:" block. Prose outside the two fields is ignored.
std::pair<CausationLabel, std::string> parse_response(const std::string& raw,
                                                      const std::vector<std::string>& taxonomy);

// Deterministic stand-in for the fine-tuned model: a fixed-priority rule
// table over the case fields, with templated explanation sentences.
CausationResult rule_oracle_classify(const records::CrashCase& cc);

// Canonical two-field rendering of a result ("Causation:" / "Explanation:").
std::string render_response(const CausationResult& result);

struct CaseFailure {
    std::string case_id;
    std::string error;
    std::string raw_response;
};

struct BatchOutcome {
    std::vector<CausationResult> results;  // input order, failures skipped
    std::vector<CaseFailure> failures;
    std::size_t ok = 0;
    std::size_t failed = 0;
    std::size_t cached = 0;
};

class Classifier {
public:
    Classifier(prompt::PromptTemplate tmpl, BackendConfig backend);

    CausationResult classify(const records::CrashCase& cc);
    BatchOutcome classify_batch(std::span<const records::CrashCase> cases,
                                std::size_t parallelism);

    // number of times the backend (oracle or HTTP) was actually invoked;
    // cache hits do not count
    std::uint64_t backend_calls() const { return backend_calls_.load(); }

    const prompt::PromptTemplate& tmpl() const { return template_; }

private:
    struct ClassifyOutput {
        CausationResult result;
        bool from_cache = false;
    };
    ClassifyOutput classify_impl(const records::CrashCase& cc);
    std::string cache_path(const std::string& case_id) const;
    std::string http_complete(const std::string& prompt_text);

    prompt::PromptTemplate template_;
    BackendConfig backend_;
    std::atomic<std::uint64_t> backend_calls_{0};
};

std::string results_to_json(std::span<const CausationResult> results);
std::vector<CausationResult> results_from_json(const std::string& json_text);

}  // namespace crashcause::classify
