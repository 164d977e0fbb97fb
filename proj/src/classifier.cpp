#include "crashcause/classifier.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>
#include <thread>
#include <tuple>

#include "httplib.h"
#include "json.hpp"

namespace crashcause::classify {

using nlohmann::json;
using records::CrashCase;

const std::vector<CausationLabel>& all_labels() {
    static const std::vector<CausationLabel> labels = {
        CausationLabel::alcohol_or_drug_impairment,
        CausationLabel::speeding,
        CausationLabel::aggressive_driving,
        CausationLabel::speeding_and_aggressive,
        CausationLabel::driver_inattention,
        CausationLabel::driver_distraction,
        CausationLabel::driver_fatigue,
        CausationLabel::risky_driving,
        CausationLabel::congestion_related,
        CausationLabel::other,
    };
    return labels;
}

std::string to_string(CausationLabel v) {
    switch (v) {
        case CausationLabel::alcohol_or_drug_impairment: return "alcohol_or_drug_impairment";
        case CausationLabel::speeding: return "speeding";
        case CausationLabel::aggressive_driving: return "aggressive_driving";
        case CausationLabel::speeding_and_aggressive: return "speeding_and_aggressive";
        case CausationLabel::driver_inattention: return "driver_inattention";
        case CausationLabel::driver_distraction: return "driver_distraction";
        case CausationLabel::driver_fatigue: return "driver_fatigue";
        case CausationLabel::risky_driving: return "risky_driving";
        case CausationLabel::congestion_related: return "congestion_related";
        case CausationLabel::other: return "other";
    }
    return "other";
}

std::optional<CausationLabel> label_from_string(const std::string& s) {
    for (CausationLabel l : all_labels()) {
        if (iequals(trim(s), to_string(l))) return l;
    }
    return std::nullopt;
}

std::string to_string(FactorTag v) {
    switch (v) {
        case FactorTag::impairment: return "impairment";
        case FactorTag::speeding: return "speeding";
        case FactorTag::aggressive: return "aggressive";
        case FactorTag::congestion: return "congestion";
        case FactorTag::maintenance_event: return "maintenance_event";
        case FactorTag::dark: return "dark";
        case FactorTag::wet_surface: return "wet_surface";
        case FactorTag::high_speed_segment: return "high_speed_segment";
        case FactorTag::lane_change: return "lane_change";
        case FactorTag::teen_driver: return "teen_driver";
        case FactorTag::elderly_driver: return "elderly_driver";
        case FactorTag::fatigue: return "fatigue";
        case FactorTag::distraction: return "distraction";
    }
    return "distraction";
}

namespace {

const std::vector<FactorTag>& all_factors() {
    static const std::vector<FactorTag> tags = {
        FactorTag::impairment, FactorTag::speeding, FactorTag::aggressive,
        FactorTag::congestion, FactorTag::maintenance_event, FactorTag::dark,
        FactorTag::wet_surface, FactorTag::high_speed_segment, FactorTag::lane_change,
        FactorTag::teen_driver, FactorTag::elderly_driver, FactorTag::fatigue,
        FactorTag::distraction,
    };
    return tags;
}

}  // namespace

std::optional<FactorTag> factor_from_string(const std::string& s) {
    for (FactorTag t : all_factors()) {
        if (iequals(trim(s), to_string(t))) return t;
    }
    return std::nullopt;
}

std::string BackendConfig::backend_id() const {
    if (kind == BackendKind::oracle) return "oracle";
    return "http_llm:" + model;
}

// ---------------------------------------------------------------------------
// response parsing

namespace {

// lowercase, map non-alphanumerics to single spaces
std::string fold(std::string_view s) {
    std::string out;
    bool pending = false;
    for (char ch : s) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            if (pending && !out.empty()) out.push_back(' ');
            pending = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending = true;
        }
    }
    return out;
}

bool contains_word_phrase(const std::string& folded_hay, const std::string& folded_needle) {
    if (folded_needle.empty()) return false;
    std::size_t pos = 0;
    while ((pos = folded_hay.find(folded_needle, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || folded_hay[pos - 1] == ' ';
        const std::size_t end = pos + folded_needle.size();
        const bool right_ok = end == folded_hay.size() || folded_hay[end] == ' ';
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

// human-readable alias(es) accepted for each canonical label name
std::vector<std::string> label_aliases(const std::string& name) {
    std::vector<std::string> out = {fold(name)};
    if (name == "alcohol_or_drug_impairment") {
        out.push_back(fold("alcohol or drug impairment"));
        out.push_back(fold("alcohol/drug impairment"));
        out.push_back(fold("alcohol impairment"));
        out.push_back(fold("impaired driving"));
    } else if (name == "speeding_and_aggressive") {
        out.push_back(fold("speeding and aggressive driving"));
        out.push_back(fold("speeding and aggressive"));
    } else if (name == "congestion_related") {
        out.push_back(fold("traffic congestion"));
        out.push_back(fold("congestion"));
    } else {
        std::string spaced = name;
        std::replace(spaced.begin(), spaced.end(), '_', ' ');
        out.push_back(fold(spaced));
    }
    return out;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    lines.push_back(cur);
    return lines;
}

std::optional<std::string> field_after_prefix(const std::string& line, const char* prefix) {
    const std::string t = trim(line);
    const std::size_t n = std::strlen(prefix);
    if (t.size() >= n && iequals(std::string_view(t).substr(0, n), prefix)) {
        return trim(t.substr(n));
    }
    return std::nullopt;
}

}  // namespace

std::pair<CausationLabel, std::string> parse_response(const std::string& raw,
                                                      const std::vector<std::string>& taxonomy) {
    const std::vector<std::string> lines = split_lines(raw);
    std::size_t causation_line = lines.size();
    std::string value;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (auto v = field_after_prefix(lines[i], "causation:")) {
            causation_line = i;
            value = *v;
            break;
        }
    }
    if (causation_line == lines.size()) {
        throw ResponseParseError("no 'Causation:' line found in response", raw);
    }

    const std::string folded_value = fold(value);
    struct Match {
        std::string label;
        std::string matched_form;
    };
    std::vector<Match> matches;
    bool exact = false;
    for (const auto& name : taxonomy) {
        std::string best_form;
        for (const auto& alias : label_aliases(name)) {
            if (alias == folded_value) {
                // exact match trumps everything
                matches.assign(1, {name, alias});
                exact = true;
                break;
            }
            if (contains_word_phrase(folded_value, alias) && alias.size() > best_form.size()) {
                best_form = alias;
            }
        }
        if (exact) break;
        if (!best_form.empty()) matches.push_back({name, best_form});
    }
    if (!exact && matches.size() > 1) {
        // keep a single match whose alias subsumes all the others
        // (e.g. "speeding and aggressive driving" covers "speeding")
        for (std::size_t k = 0; k < matches.size(); ++k) {
            const bool covers_all = std::all_of(
                matches.begin(), matches.end(), [&](const Match& other) {
                    return matches[k].matched_form.find(other.matched_form) != std::string::npos;
                });
            if (covers_all) {
                Match keep = matches[k];
                matches.assign(1, std::move(keep));
                break;
            }
        }
    }
    if (matches.empty()) {
        throw ResponseParseError("causation line does not name a taxonomy label: '" + value + "'",
                                 raw);
    }
    if (matches.size() > 1) {
        throw ResponseParseError("ambiguous causation line (multiple taxonomy labels): '" +
                                     value + "'",
                                 raw);
    }
    const auto label = label_from_string(matches.front().label);
    if (!label) {
        throw ResponseParseError("taxonomy label '" + matches.front().label +
                                     "' is not a known causation label",
                                 raw);
    }

    std::string explanation;
    for (std::size_t i = causation_line; i < lines.size(); ++i) {
        if (auto v = field_after_prefix(lines[i], "explanation:")) {
            explanation = *v;
            for (std::size_t j = i + 1; j < lines.size(); ++j) {
                explanation += "\n" + lines[j];
            }
            explanation = trim(explanation);
            break;
        }
    }
    if (explanation.empty()) {
        throw ResponseParseError("no 'Explanation:' block found in response", raw);
    }
    return {*label, explanation};
}

// ---------------------------------------------------------------------------
// rule oracle

namespace {

void add_factor(std::vector<FactorTag>& tags, FactorTag t) {
    if (std::find(tags.begin(), tags.end(), t) == tags.end()) tags.push_back(t);
}

bool congested(const CrashCase& cc) {
    if (cc.nearby_event == records::EventKind::traffic_congestion) return true;
    const auto los_ef = [](const std::optional<records::TrafficSnapshot>& s) {
        return s && (s->level_of_service == records::Los::E ||
                     s->level_of_service == records::Los::F);
    };
    return los_ef(cc.traffic_at_crash) || los_ef(cc.traffic_before);
}

bool high_speed_segment(const CrashCase& cc) {
    return cc.speed_category_at_crash == records::SpeedCategory::high ||
           (cc.speed_category_at_crash == records::SpeedCategory::unknown &&
            cc.speed_category_before == records::SpeedCategory::high);
}

std::vector<FactorTag> collect_factors(const CrashCase& cc) {
    std::vector<FactorTag> tags;
    const records::CrashReport& r = cc.report;
    if (r.driver_condition == records::DriverCondition::impaired_alcohol_or_drug) {
        add_factor(tags, FactorTag::impairment);
    }
    if (r.speeding_related) add_factor(tags, FactorTag::speeding);
    if (r.aggressive_driving) add_factor(tags, FactorTag::aggressive);
    if (congested(cc)) add_factor(tags, FactorTag::congestion);
    if (cc.nearby_event == records::EventKind::road_maintenance) {
        add_factor(tags, FactorTag::maintenance_event);
    }
    if (r.light == records::Light::dark_with_light ||
        r.light == records::Light::dark_without_light) {
        add_factor(tags, FactorTag::dark);
    }
    if (r.surface == records::Surface::wet) add_factor(tags, FactorTag::wet_surface);
    if (high_speed_segment(cc)) add_factor(tags, FactorTag::high_speed_segment);
    if (r.crash_type == records::CrashType::sideswipe) add_factor(tags, FactorTag::lane_change);
    if (r.driver_age && *r.driver_age <= 19) add_factor(tags, FactorTag::teen_driver);
    if (r.driver_age && *r.driver_age >= 65) add_factor(tags, FactorTag::elderly_driver);
    return tags;
}

std::string cause_sentence(CausationLabel label) {
    switch (label) {
        case CausationLabel::alcohol_or_drug_impairment:
            return "The driver was under the influence of alcohol or drugs, which delays "
                   "reaction times and impairs judgment, and this abnormal driver state was "
                   "the major cause of the crash.";
        case CausationLabel::speeding_and_aggressive:
            return "The driver was speeding and engaging in aggressive driving behavior, and "
                   "together these were the primary causes of the crash.";
        case CausationLabel::speeding:
            return "The driver was speeding, which reduced the time available to react and "
                   "was the primary cause of the crash.";
        case CausationLabel::aggressive_driving:
            return "The driver was engaging in aggressive driving behavior, such as sudden "
                   "braking or changing lanes without signaling, which was the primary cause "
                   "of the crash.";
        case CausationLabel::congestion_related:
            return "The crash occurred under congested traffic conditions, where sudden stops "
                   "and slowdowns are common and driver inattention is especially hazardous, "
                   "making congestion the primary underlying cause.";
        case CausationLabel::risky_driving:
            return "The driver's profile is consistent with risky driving behaviors such as "
                   "unsafe maneuvers, which were the most likely primary cause of the crash.";
        case CausationLabel::driver_inattention:
        default:
            return "No impairment, speeding, or aggressive-driving flag is present, so the "
                   "crash is most consistent with driver inattention as the primary cause.";
    }
}

std::string context_sentences(const CrashCase& cc, const std::vector<FactorTag>& tags) {
    const auto has = [&](FactorTag t) {
        return std::find(tags.begin(), tags.end(), t) != tags.end();
    };
    std::string out;
    if (has(FactorTag::maintenance_event)) {
        out += " The crash occurred during a road maintenance operation, which can narrow the "
               "roadway and create irregular driving conditions, further increasing the risk.";
    }
    if (cc.nearby_event == records::EventKind::traffic_congestion) {
        out += " A traffic congestion event was active near the crash location.";
    }
    if (has(FactorTag::dark)) {
        out += " Dark lighting conditions limited the driver's visibility.";
    }
    if (has(FactorTag::wet_surface)) {
        out += " The wet road surface increased stopping distances.";
    }
    if (has(FactorTag::high_speed_segment)) {
        out += " The roadway segment was operating at high speed at the time of the crash, "
               "which increases the energy involved in a collision and the resulting severity.";
    }
    if (has(FactorTag::congestion) && cc.nearby_event != records::EventKind::traffic_congestion) {
        out += " The segment was operating at a congested level of service, a condition that "
               "exacerbates driver inattention.";
    }
    if (has(FactorTag::lane_change)) {
        out += " The sideswipe collision pattern points to a lane-change maneuver.";
    }
    if (has(FactorTag::teen_driver)) {
        out += " The driver was a teenager, a group with limited driving experience and a "
               "higher tendency toward unsafe maneuvers.";
    }
    if (has(FactorTag::elderly_driver)) {
        out += " The driver's advanced age is associated with more severe crash outcomes.";
    }
    if (cc.speed_category_at_crash == records::SpeedCategory::low && has(FactorTag::congestion)) {
        out += " Slow segment speeds are consistent with stop-and-go traffic.";
    }
    if (!cc.has_traffic_data()) {
        out += " No traffic data accompanied this crash, so segment speed and level of "
               "service could not be considered.";
    }
    return out;
}

}  // namespace

CausationResult rule_oracle_classify(const CrashCase& cc) {
    const records::CrashReport& r = cc.report;
    const std::vector<FactorTag> tags = collect_factors(cc);

    CausationLabel label;
    if (r.driver_condition == records::DriverCondition::impaired_alcohol_or_drug) {
        label = CausationLabel::alcohol_or_drug_impairment;
    } else if (r.speeding_related && r.aggressive_driving) {
        label = CausationLabel::speeding_and_aggressive;
    } else if (r.speeding_related) {
        label = CausationLabel::speeding;
    } else if (r.aggressive_driving) {
        label = CausationLabel::aggressive_driving;
    } else if (congested(cc)) {
        label = CausationLabel::congestion_related;
    } else if (r.driver_age && *r.driver_age <= 19) {
        label = CausationLabel::risky_driving;
    } else {
        label = CausationLabel::driver_inattention;
    }

    CausationResult result;
    result.case_id = cc.case_id();
    result.label = label;
    result.contributing_factors = tags;
    result.backend_id = "oracle";
    result.explanation = cause_sentence(label) + context_sentences(cc, tags);
    result.raw_response = render_response(result);
    return result;
}

std::string render_response(const CausationResult& result) {
    return "Causation: " + to_string(result.label) + "\nExplanation: " + result.explanation +
           "\n";
}

// ---------------------------------------------------------------------------
// classifier with cache and backends

Classifier::Classifier(prompt::PromptTemplate tmpl, BackendConfig backend)
    : template_(std::move(tmpl)), backend_(std::move(backend)) {
    prompt::validate_template(template_);
    if (backend_.kind == BackendKind::http_llm) {
        if (backend_.endpoint.empty()) {
            throw ValidationError("http_llm backend requires an endpoint");
        }
        if (backend_.max_tries < 1) throw ValidationError("max_tries must be >= 1");
    }
    if (!backend_.cache_dir.empty()) {
        std::filesystem::create_directories(backend_.cache_dir);
    }
}

std::string Classifier::cache_path(const std::string& case_id) const {
    const std::string key =
        case_id + "\x1f" + template_.version + "\x1f" + backend_.backend_id();
    return (std::filesystem::path(backend_.cache_dir) / (hex64(fnv1a64(key)) + ".json"))
        .string();
}

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError("endpoint must be an http(s) URL: " + url);
    }
    const std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::vector<FactorTag> factors_from_text(const std::string& explanation) {
    static const std::vector<std::pair<const char*, FactorTag>> keywords = {
        {"alcohol", FactorTag::impairment},
        {"drug", FactorTag::impairment},
        {"impair", FactorTag::impairment},
        {"speeding", FactorTag::speeding},
        {"aggressive", FactorTag::aggressive},
        {"congest", FactorTag::congestion},
        {"maintenance", FactorTag::maintenance_event},
        {"dark", FactorTag::dark},
        {"wet", FactorTag::wet_surface},
        {"high speed", FactorTag::high_speed_segment},
        {"high-speed", FactorTag::high_speed_segment},
        {"lane change", FactorTag::lane_change},
        {"lane-change", FactorTag::lane_change},
        {"teen", FactorTag::teen_driver},
        {"elderly", FactorTag::elderly_driver},
        {"fatigue", FactorTag::fatigue},
        {"distract", FactorTag::distraction},
    };
    const std::string low = to_lower(explanation);
    std::vector<FactorTag> tags;
    for (const auto& [needle, tag] : keywords) {
        if (low.find(needle) != std::string::npos) add_factor(tags, tag);
    }
    return tags;
}

json result_to_json_obj(const CausationResult& r) {
    json factors = json::array();
    for (FactorTag t : r.contributing_factors) factors.push_back(to_string(t));
    return json{{"case_id", r.case_id},
                {"label", to_string(r.label)},
                {"explanation", r.explanation},
                {"contributing_factors", factors},
                {"backend_id", r.backend_id},
                {"raw_response", r.raw_response}};
}

CausationResult result_from_json_obj(const json& obj) {
    CausationResult r;
    r.case_id = obj.at("case_id").get<std::string>();
    const std::string label = obj.at("label").get<std::string>();
    const auto parsed = label_from_string(label);
    if (!parsed) throw ParseError("results: unknown causation label '" + label + "'");
    r.label = *parsed;
    r.explanation = obj.at("explanation").get<std::string>();
    for (const auto& f : obj.at("contributing_factors")) {
        const auto tag = factor_from_string(f.get<std::string>());
        if (!tag) throw ParseError("results: unknown factor tag '" + f.get<std::string>() + "'");
        add_factor(r.contributing_factors, *tag);
    }
    r.backend_id = obj.at("backend_id").get<std::string>();
    r.raw_response = obj.value("raw_response", "");
    if (r.explanation.empty()) throw ValidationError("results: empty explanation");
    return r;
}

}  // namespace

std::string Classifier::http_complete(const std::string& user_message) {
    const char* cred = std::getenv(backend_.credential_env.c_str());
    if (cred == nullptr || *cred == '\0') {
        throw ValidationError("http_llm backend requires credentials in $" +
                              backend_.credential_env);
    }
    const ParsedUrl url = split_url(backend_.endpoint);

    json body = {
        {"model", backend_.model},
        {"messages",
         json::array({json{{"role", "system"}, {"content", template_.preamble}},
                      json{{"role", "user"}, {"content", user_message}}})},
        {"temperature", backend_.temperature},
    };
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt < backend_.max_tries; ++attempt) {
        if (attempt > 0) {
            const double delay =
                backend_.backoff_base_seconds * static_cast<double>(1ULL << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        backend_calls_.fetch_add(1);
        httplib::Client cli(url.base);
        const auto timeout = std::chrono::duration<double>(backend_.timeout_seconds);
        cli.set_connection_timeout(timeout);
        cli.set_read_timeout(timeout);
        cli.set_write_timeout(timeout);
        httplib::Headers headers = {
            {backend_.auth_header, "Bearer " + std::string(cred)},
        };
        auto res = cli.Post(url.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        try {
            const json reply = json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw BackendError("malformed backend response: " + std::string(e.what()));
        }
    }
    throw BackendError("backend unreachable after " + std::to_string(backend_.max_tries) +
                       " attempts (" + last_error + ")");
}

Classifier::ClassifyOutput Classifier::classify_impl(const CrashCase& cc) {
    const bool use_cache = !backend_.cache_dir.empty();
    const std::string cpath = use_cache ? cache_path(cc.case_id()) : std::string();
    if (use_cache && std::filesystem::exists(cpath)) {
        const json obj = json::parse(read_file(cpath));
        return {result_from_json_obj(obj), true};
    }

    const prompt::SerializedCase sc = prompt::serialize_case(cc, template_);
    CausationResult result;
    if (backend_.kind == BackendKind::oracle) {
        backend_calls_.fetch_add(1);
        const CausationResult oracle = rule_oracle_classify(cc);
        const auto [label, explanation] = parse_response(oracle.raw_response, template_.taxonomy);
        result = oracle;
        result.label = label;
        result.explanation = explanation;
        result.backend_id = backend_.backend_id();
    } else {
        const std::string user_message = prompt::build_case_message(sc, template_);
        std::string raw = http_complete(user_message);
        CausationLabel label;
        std::string explanation;
        try {
            std::tie(label, explanation) = parse_response(raw, template_.taxonomy);
        } catch (const ResponseParseError&) {
            // one reprompt with a stricter format reminder
            raw = http_complete(user_message +
                                "\nReminder: reply with exactly two lines, 'Causation: "
                                "<label>' and 'Explanation: <text>', and no other prose.\n");
            std::tie(label, explanation) = parse_response(raw, template_.taxonomy);
        }
        result.case_id = cc.case_id();
        result.label = label;
        result.explanation = explanation;
        result.contributing_factors = factors_from_text(explanation);
        result.backend_id = backend_.backend_id();
        result.raw_response = raw;
    }

    if (use_cache) {
        write_file_atomic(cpath, result_to_json_obj(result).dump(2) + "\n");
    }
    return {result, false};
}

CausationResult Classifier::classify(const CrashCase& cc) {
    return classify_impl(cc).result;
}

BatchOutcome Classifier::classify_batch(std::span<const CrashCase> cases,
                                        std::size_t parallelism) {
    if (parallelism < 1) throw ValidationError("classify_batch: parallelism must be >= 1");
    struct Slot {
        std::optional<CausationResult> result;
        std::optional<CaseFailure> failure;
        bool cached = false;
    };
    std::vector<Slot> slots(cases.size());
    std::atomic<std::size_t> next{0};

    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cases.size()) return;
            try {
                ClassifyOutput out = classify_impl(cases[i]);
                slots[i].cached = out.from_cache;
                slots[i].result = std::move(out.result);
            } catch (const ResponseParseError& e) {
                slots[i].failure = CaseFailure{cases[i].case_id(), e.what(), e.raw_response};
            } catch (const std::exception& e) {
                slots[i].failure = CaseFailure{cases[i].case_id(), e.what(), ""};
            }
        }
    };

    std::vector<std::thread> threads;
    const std::size_t nthreads = std::min(parallelism, std::max<std::size_t>(cases.size(), 1));
    threads.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    BatchOutcome out;
    for (auto& slot : slots) {
        if (slot.result) {
            out.results.push_back(std::move(*slot.result));
            ++out.ok;
            if (slot.cached) ++out.cached;
        } else if (slot.failure) {
            out.failures.push_back(std::move(*slot.failure));
            ++out.failed;
        }
    }
    return out;
}

std::string results_to_json(std::span<const CausationResult> results) {
    json arr = json::array();
    for (const auto& r : results) arr.push_back(result_to_json_obj(r));
    return arr.dump(2) + "\n";
}

std::vector<CausationResult> results_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("results: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("results: top level must be a JSON array");
    std::vector<CausationResult> out;
    for (const auto& obj : doc) out.push_back(result_from_json_obj(obj));
    return out;
}

}  // namespace crashcause::classify
