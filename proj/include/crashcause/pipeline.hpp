#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crashcause/classifier.hpp"
#include "crashcause/lora.hpp"
#include "crashcause/nf4.hpp"
#include "crashcause/records.hpp"
#include "crashcause/segments.hpp"

namespace crashcause::pipeline {

// One key/value document with a section per module; every value can be
// overridden from the command line.
struct PipelineConfig {
    // [paths]
    std::string manifest;
    std::string crashes;
    std::string traffic;
    std::string events;
    std::string segments_path;
    std::string template_path;  // empty -> built-in template
    std::string dataset;        // prompt/completion JSON for finetune-toy
    std::string results;        // classification results for analyze
    std::string survey;
    std::string cache_dir = "cache";
    std::string output_dir = "out";

    classify::BackendConfig backend;
    lora::AdapterConfig adapter;
    nf4::QuantConfig quant{64, 256, true};
    bool quantize_base = true;
    std::size_t embed_dim = 16;

    // [split]
    double eval_fraction = 0.1;
    std::uint64_t seed = 7;

    segments::SeverityWeights severity_weights = segments::kDefaultSeverityWeights;
    std::size_t top_k = 16;
    std::size_t parallelism = 4;
    bool strict = false;
};

PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& text);

prompt::PromptTemplate resolve_template(const PipelineConfig& cfg);

// load the three CSV sources plus the segment config and join every crash
// into a CrashCase (segment resolved by mile marker and direction)
std::vector<records::CrashCase> load_and_join_cases(const PipelineConfig& cfg);

segments::ReportBundle analyze_results(std::span<const records::CrashCase> cases,
                                       std::span<const classify::CausationResult> results,
                                       const segments::SegmentSet& segset,
                                       const segments::SeverityWeights& weights,
                                       std::size_t top_k);

segments::ReportBundle bundle_from_json(const std::string& json_text);

// Subcommand bodies. They throw; the CLI front-end maps exception types to
// exit codes and renders the machine-readable error JSON.
void cmd_build_corpus(const PipelineConfig& cfg);
void cmd_finetune_toy(const PipelineConfig& cfg);
void cmd_classify(const PipelineConfig& cfg);
void cmd_analyze(const PipelineConfig& cfg);
void cmd_evaluate(const PipelineConfig& cfg);
void cmd_report(const PipelineConfig& cfg, const std::string& analysis_json,
                const std::string& format);

// exit-code contract: 0 ok, 2 config/validation, 3 numeric, 4 backend
int exit_code_for(const std::exception& e);
std::string error_json(int code, const std::string& message, const std::string& context);

}  // namespace crashcause::pipeline
