#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "crashcause/pipeline.hpp"

namespace {

using crashcause::pipeline::PipelineConfig;

struct GlobalOpts {
    std::string config_path;
    std::string output_dir;
    std::string backend;
    std::string cache_dir;
    long long seed = -1;
    bool strict = false;
};

PipelineConfig make_config(const GlobalOpts& g) {
    PipelineConfig cfg;
    if (!g.config_path.empty()) cfg = crashcause::pipeline::load_config(g.config_path);
    if (!g.output_dir.empty()) cfg.output_dir = g.output_dir;
    if (!g.cache_dir.empty()) cfg.cache_dir = g.cache_dir;
    if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
    if (g.strict) cfg.strict = true;
    if (!g.backend.empty()) {
        if (g.backend == "oracle") {
            cfg.backend.kind = crashcause::classify::BackendKind::oracle;
        } else if (g.backend == "http" || g.backend == "http_llm") {
            cfg.backend.kind = crashcause::classify::BackendKind::http_llm;
        } else {
            throw crashcause::ValidationError("unknown backend '" + g.backend +
                                              "' (expected oracle or http_llm)");
        }
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Freeway crash causation analysis toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags remain valid after the subcommand name

    GlobalOpts g;
    app.add_option("--config", g.config_path, "pipeline config file (key = value sections)");
    app.add_option("--output-dir", g.output_dir, "override output directory");
    app.add_option("--cache-dir", g.cache_dir, "override classification cache directory");
    app.add_option("--seed", g.seed, "override the pipeline seed");
    app.add_option("--backend", g.backend, "classification backend: oracle or http_llm");
    app.add_flag("--strict", g.strict, "fail (exit 4) when any case fails classification");

    std::string manifest, dataset, crashes, traffic, events, segments_path, template_path,
        survey, results, analysis, format = "markdown";

    CLI::App* build = app.add_subcommand("build-corpus", "ingest a study manifest and emit the "
                                                         "prompt/completion dataset plus stats");
    build->add_option("--manifest", manifest, "study manifest JSON");

    CLI::App* finetune = app.add_subcommand(
        "finetune-toy", "train the LoRA adapter over the quantized toy model");
    finetune->add_option("--dataset", dataset, "prompt/completion dataset JSON "
                                               "(default: bundled synthetic corpus)");

    CLI::App* classify = app.add_subcommand("classify", "join crash cases and assign causation");
    CLI::App* analyze = app.add_subcommand("analyze", "per-segment distributions and reports");
    for (CLI::App* sub : {classify, analyze}) {
        sub->add_option("--crashes", crashes, "crash report CSV");
        sub->add_option("--traffic", traffic, "traffic snapshot CSV");
        sub->add_option("--events", events, "roadside event CSV");
        sub->add_option("--segments", segments_path, "segment config JSON");
    }
    classify->add_option("--template", template_path, "prompt template file");
    analyze->add_option("--results", results, "classification results JSON");

    CLI::App* evaluate = app.add_subcommand("evaluate", "aggregate the expert questionnaire");
    evaluate->add_option("survey", survey, "survey CSV (crash_id,rater_id,q1,q2,q3)");

    CLI::App* report = app.add_subcommand("report", "re-render an analysis JSON in another format");
    report->add_option("analysis", analysis, "analysis report.json produced by analyze");
    report->add_option("--format", format, "json, csv, markdown, or svg_bars");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        if (rc == 0) return 0;  // --help and friends
        std::cerr << crashcause::pipeline::error_json(2, e.what(), "usage");
        return 2;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        PipelineConfig cfg = make_config(g);
        if (!manifest.empty()) cfg.manifest = manifest;
        if (!dataset.empty()) cfg.dataset = dataset;
        if (!crashes.empty()) cfg.crashes = crashes;
        if (!traffic.empty()) cfg.traffic = traffic;
        if (!events.empty()) cfg.events = events;
        if (!segments_path.empty()) cfg.segments_path = segments_path;
        if (!template_path.empty()) cfg.template_path = template_path;
        if (!survey.empty()) cfg.survey = survey;
        if (!results.empty()) cfg.results = results;

        if (build->parsed()) {
            crashcause::pipeline::cmd_build_corpus(cfg);
        } else if (finetune->parsed()) {
            crashcause::pipeline::cmd_finetune_toy(cfg);
        } else if (classify->parsed()) {
            crashcause::pipeline::cmd_classify(cfg);
        } else if (analyze->parsed()) {
            crashcause::pipeline::cmd_analyze(cfg);
        } else if (evaluate->parsed()) {
            crashcause::pipeline::cmd_evaluate(cfg);
        } else if (report->parsed()) {
            crashcause::pipeline::cmd_report(cfg, analysis, format);
        }
    } catch (const std::exception& e) {
        const int code = crashcause::pipeline::exit_code_for(e);
        std::cerr << crashcause::pipeline::error_json(code, e.what(), sub);
        return code;
    }
    return 0;
}
