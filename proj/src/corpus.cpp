#include "crashcause/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "crashcause/util.hpp"
#include "json.hpp"

namespace crashcause::corpus {

namespace {

using nlohmann::json;

// The question half of a pair is synthesized from the finding text: the
// manifest carries plain finding strings, so the subject of the question is
// the finding's leading words.
std::string question_for(const std::string& finding) {
    std::istringstream in(finding);
    std::string word;
    std::vector<std::string> words;
    while (in >> word && words.size() < 8) words.push_back(word);
    std::string subject;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) subject += ' ';
        subject += words[i];
    }
    while (!subject.empty() && (subject.back() == '.' || subject.back() == ',' ||
                                subject.back() == ';' || subject.back() == ':')) {
        subject.pop_back();
    }
    if (!subject.empty()) subject[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(subject[0])));
    return "What have freeway traffic safety studies found regarding " + subject + "?";
}

std::string dedup_key(const PromptCompletionPair& p) {
    return to_lower(normalize_whitespace(p.prompt)) + "\x1f" +
           to_lower(normalize_whitespace(p.completion));
}

void validate_record(const StudyRecord& r) {
    if (trim(r.study_id).empty()) throw ValidationError("manifest: empty study_id");
    if (r.findings.empty()) {
        throw ValidationError("manifest: study '" + r.study_id + "' has no findings");
    }
    for (const auto& f : r.findings) {
        if (trim(f).empty()) {
            throw ValidationError("manifest: study '" + r.study_id + "' has an empty finding");
        }
    }
}

}  // namespace

const std::vector<std::string>& known_journals() {
    static const std::vector<std::string> names = {
        "Accident Analysis & Prevention",
        "Analytic Methods in Accident Research",
        "Transportation Research Record",
        "Journal of Safety Research",
        "Transportation Research Part C",
        "Journal of Transportation Safety & Security",
    };
    return names;
}

std::vector<StudyRecord> parse_manifest(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("manifest: top level must be a JSON array");
    std::vector<StudyRecord> records;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& entry = doc[i];
        if (!entry.is_object()) {
            throw ParseError("manifest: entry " + std::to_string(i) + " is not an object");
        }
        StudyRecord r;
        try {
            r.study_id = entry.at("study_id").get<std::string>();
            r.journal = entry.at("journal").get<std::string>();
            r.year = entry.at("year").get<int>();
            r.findings = entry.at("findings").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw ParseError("manifest: entry " + std::to_string(i) + ": " + e.what());
        }
        validate_record(r);
        if (!seen.insert(r.study_id).second) {
            throw ValidationError("manifest: duplicate study_id '" + r.study_id +
                                  "' (entries share the same id)");
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<StudyRecord> ingest_manifest(const std::string& path) {
    return parse_manifest(read_file(path));
}

DatasetBuildResult build_dataset(const std::vector<StudyRecord>& records) {
    std::vector<const StudyRecord*> ordered;
    ordered.reserve(records.size());
    for (const auto& r : records) {
        validate_record(r);
        ordered.push_back(&r);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const StudyRecord* a, const StudyRecord* b) { return a->study_id < b->study_id; });

    DatasetBuildResult out;
    std::map<std::string, std::string> retained;  // dedup key -> study holding it
    for (const StudyRecord* r : ordered) {
        for (std::size_t i = 0; i < r->findings.size(); ++i) {
            PromptCompletionPair p;
            p.completion = trim(r->findings[i]);
            p.prompt = trim(question_for(p.completion));
            p.source_study_id = r->study_id;
            if (p.prompt == p.completion) {
                throw ValidationError("dataset: prompt equals completion for study '" +
                                      r->study_id + "'");
            }
            const std::string key = dedup_key(p);
            const auto [it, inserted] = retained.emplace(key, r->study_id);
            if (!inserted) {
                out.drops.push_back({r->study_id, i, it->second});
                continue;
            }
            out.pairs.push_back(std::move(p));
        }
    }
    return out;
}

CorpusStats corpus_stats(const std::vector<StudyRecord>& records, std::uint64_t total_pairs) {
    CorpusStats stats;
    stats.total_studies = records.size();
    stats.total_pairs = total_pairs;
    for (const auto& r : records) {
        std::string bucket = "Other";
        for (const auto& j : known_journals()) {
            if (iequals(trim(r.journal), j)) {
                bucket = j;
                break;
            }
        }
        stats.per_journal[bucket].count += 1;
    }
    for (auto& [name, js] : stats.per_journal) {
        js.percentage = percent_round(js.count, stats.total_studies);
    }
    return stats;
}

SplitResult split_dataset(const std::vector<PromptCompletionPair>& pairs,
                          double eval_fraction, std::uint64_t seed) {
    if (pairs.size() < 2) throw ValidationError("split_dataset: need at least 2 pairs");
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
        throw ValidationError("split_dataset: eval_fraction must be in (0, 1)");
    }
    const std::size_t n = pairs.size();
    std::size_t eval_n = static_cast<std::size_t>(
        std::llround(eval_fraction * static_cast<double>(n)));
    eval_n = std::clamp<std::size_t>(eval_n, 1, n - 1);

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);

    std::vector<bool> is_eval(n, false);
    for (std::size_t i = 0; i < eval_n; ++i) is_eval[idx[i]] = true;

    SplitResult out;
    for (std::size_t i = 0; i < n; ++i) {
        (is_eval[i] ? out.eval : out.train).push_back(pairs[i]);
    }
    return out;
}

std::string dataset_to_json(const std::vector<PromptCompletionPair>& pairs) {
    json arr = json::array();
    for (const auto& p : pairs) {
        arr.push_back({{"prompt", p.prompt}, {"completion", p.completion}});
    }
    return arr.dump(2) + "\n";
}

std::vector<PromptCompletionPair> dataset_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("dataset: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("dataset: top level must be a JSON array");
    std::vector<PromptCompletionPair> pairs;
    for (const auto& entry : doc) {
        PromptCompletionPair p;
        p.prompt = entry.at("prompt").get<std::string>();
        p.completion = entry.at("completion").get<std::string>();
        if (entry.contains("source_study_id")) {
            p.source_study_id = entry["source_study_id"].get<std::string>();
        }
        if (trim(p.prompt).empty() || trim(p.completion).empty()) {
            throw ValidationError("dataset: prompt and completion must be non-empty");
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::string sidecar_to_json(const std::vector<PromptCompletionPair>& pairs) {
    json arr = json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        arr.push_back({{"index", i}, {"source_study_id", pairs[i].source_study_id}});
    }
    return arr.dump(2) + "\n";
}

std::string stats_to_json(const CorpusStats& stats) {
    json per = json::object();
    for (const auto& [name, js] : stats.per_journal) {
        per[name] = {{"count", js.count}, {"percentage", js.percentage}};
    }
    json doc = {{"total_studies", stats.total_studies},
                {"total_pairs", stats.total_pairs},
                {"per_journal", per}};
    return doc.dump(2) + "\n";
}

}  // namespace crashcause::corpus
