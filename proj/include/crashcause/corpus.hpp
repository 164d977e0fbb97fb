#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace crashcause::corpus {

struct StudyRecord {
    std::string study_id;
    std::string journal;
    int year = 0;
    std::vector<std::string> findings;
};

struct PromptCompletionPair {
    std::string prompt;
    std::string completion;
    std::string source_study_id;
};

struct JournalStat {
    std::uint64_t count = 0;
    int percentage = 0;  // round-half-up integer
};

struct CorpusStats {
    std::uint64_t total_studies = 0;
    std::map<std::string, JournalStat> per_journal;
    std::uint64_t total_pairs = 0;
};

struct DropRecord {
    std::string study_id;
    std::size_t finding_index = 0;
    std::string duplicate_of_study;  // study holding the retained copy
};

struct DatasetBuildResult {
    std::vector<PromptCompletionPair> pairs;
    std::vector<DropRecord> drops;
};

// The six journals named in the corpus; anything else is grouped as "Other".
const std::vector<std::string>& known_journals();

std::vector<StudyRecord> ingest_manifest(const std::string& path);
std::vector<StudyRecord> parse_manifest(const std::string& json_text);

DatasetBuildResult build_dataset(const std::vector<StudyRecord>& records);

CorpusStats corpus_stats(const std::vector<StudyRecord>& records,
                         std::uint64_t total_pairs = 0);

struct SplitResult {
    std::vector<PromptCompletionPair> train;
    std::vector<PromptCompletionPair> eval;
};

SplitResult split_dataset(const std::vector<PromptCompletionPair>& pairs,
                          double eval_fraction, std::uint64_t seed);

// Dataset JSON: array of {"prompt", "completion"} objects, plus an optional
// sidecar mapping pair index -> source study id.
std::string dataset_to_json(const std::vector<PromptCompletionPair>& pairs);
std::vector<PromptCompletionPair> dataset_from_json(const std::string& json_text);
std::string sidecar_to_json(const std::vector<PromptCompletionPair>& pairs);
std::string stats_to_json(const CorpusStats& stats);

}  // namespace crashcause::corpus
