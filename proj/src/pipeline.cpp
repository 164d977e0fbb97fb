#include "crashcause/pipeline.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include "crashcause/corpus.hpp"
#include "crashcause/expert.hpp"
#include "crashcause/util.hpp"
#include "json.hpp"

namespace crashcause::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- minimal TOML-style reader: [section], key = value, # comments ---

struct KvDoc {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& sec, const std::string& key) const {
        const auto s = sections.find(sec);
        return s != sections.end() && s->second.count(key) > 0;
    }
    std::string get(const std::string& sec, const std::string& key,
                    const std::string& fallback) const {
        const auto s = sections.find(sec);
        if (s == sections.end()) return fallback;
        const auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }
};

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

KvDoc parse_kv(const std::string& text) {
    KvDoc doc;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(strip_comment(line));
        if (stripped.empty()) continue;
        if (stripped.front() == '[' && stripped.back() == ']') {
            section = trim(stripped.substr(1, stripped.size() - 2));
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ParseError("config line " + std::to_string(lineno) +
                             ": expected key = value, got '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = unquote(trim(stripped.substr(eq + 1)));
        if (key.empty()) {
            throw ParseError("config line " + std::to_string(lineno) + ": empty key");
        }
        doc.sections[section][key] = value;
    }
    return doc;
}

double to_double(const std::string& v, const std::string& what) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ParseError("config: bad numeric value for " + what + ": '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& v, const std::string& what) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size() || x < 0) throw std::invalid_argument(v);
        return static_cast<std::uint64_t>(x);
    } catch (const std::exception&) {
        throw ParseError("config: bad integer value for " + what + ": '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& what) {
    const std::string c = to_lower(trim(v));
    if (c == "true" || c == "yes" || c == "1") return true;
    if (c == "false" || c == "no" || c == "0") return false;
    throw ParseError("config: bad boolean value for " + what + ": '" + v + "'");
}

void ensure_output_dir(const PipelineConfig& cfg) {
    fs::create_directories(cfg.output_dir);
}

std::string out_path(const PipelineConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
}

void require_path(const std::string& path, const std::string& what) {
    if (path.empty()) throw ValidationError("config: missing required path for " + what);
    if (!fs::exists(path)) throw ValidationError("config: " + what + " not found: " + path);
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
    const KvDoc doc = parse_kv(text);
    PipelineConfig cfg;

    const auto path = [&](const char* key, std::string& slot) {
        if (doc.has("paths", key)) slot = doc.get("paths", key, "");
    };
    path("manifest", cfg.manifest);
    path("crashes", cfg.crashes);
    path("traffic", cfg.traffic);
    path("events", cfg.events);
    path("segments", cfg.segments_path);
    path("template", cfg.template_path);
    path("dataset", cfg.dataset);
    path("results", cfg.results);
    path("survey", cfg.survey);
    path("cache_dir", cfg.cache_dir);
    path("output_dir", cfg.output_dir);

    const std::string kind = doc.get("backend", "kind", "oracle");
    if (kind == "oracle") {
        cfg.backend.kind = classify::BackendKind::oracle;
    } else if (kind == "http_llm" || kind == "http") {
        cfg.backend.kind = classify::BackendKind::http_llm;
    } else {
        throw ParseError("config: unknown backend kind '" + kind + "'");
    }
    cfg.backend.endpoint = doc.get("backend", "endpoint", cfg.backend.endpoint);
    cfg.backend.model = doc.get("backend", "model", cfg.backend.model);
    if (doc.has("backend", "timeout_seconds")) {
        cfg.backend.timeout_seconds =
            to_double(doc.get("backend", "timeout_seconds", ""), "backend.timeout_seconds");
    }
    if (doc.has("backend", "max_tries")) {
        cfg.backend.max_tries =
            static_cast<int>(to_u64(doc.get("backend", "max_tries", ""), "backend.max_tries"));
    }
    if (doc.has("backend", "backoff_base_seconds")) {
        cfg.backend.backoff_base_seconds = to_double(
            doc.get("backend", "backoff_base_seconds", ""), "backend.backoff_base_seconds");
    }
    cfg.backend.auth_header = doc.get("backend", "auth_header", cfg.backend.auth_header);
    cfg.backend.credential_env = doc.get("backend", "credential_env", cfg.backend.credential_env);

    if (doc.has("adapter", "rank")) {
        cfg.adapter.rank = to_u64(doc.get("adapter", "rank", ""), "adapter.rank");
    }
    if (doc.has("adapter", "alpha")) {
        cfg.adapter.alpha = to_double(doc.get("adapter", "alpha", ""), "adapter.alpha");
    }
    if (doc.has("adapter", "init_seed")) {
        cfg.adapter.init_seed = to_u64(doc.get("adapter", "init_seed", ""), "adapter.init_seed");
    }
    if (doc.has("adapter", "learning_rate")) {
        cfg.adapter.learning_rate =
            to_double(doc.get("adapter", "learning_rate", ""), "adapter.learning_rate");
    }
    if (doc.has("adapter", "steps")) {
        cfg.adapter.steps = to_u64(doc.get("adapter", "steps", ""), "adapter.steps");
    }
    if (doc.has("adapter", "eval_every")) {
        cfg.adapter.eval_every =
            to_u64(doc.get("adapter", "eval_every", ""), "adapter.eval_every");
    }
    if (doc.has("model", "embed_dim")) {
        cfg.embed_dim = to_u64(doc.get("model", "embed_dim", ""), "model.embed_dim");
    }

    if (doc.has("quant", "block_size")) {
        cfg.quant.block_size = to_u64(doc.get("quant", "block_size", ""), "quant.block_size");
    }
    if (doc.has("quant", "dq_block_size")) {
        cfg.quant.dq_block_size =
            to_u64(doc.get("quant", "dq_block_size", ""), "quant.dq_block_size");
    }
    if (doc.has("quant", "double_quantize")) {
        cfg.quant.double_quantize =
            to_bool(doc.get("quant", "double_quantize", ""), "quant.double_quantize");
    }
    if (doc.has("quant", "quantize_base")) {
        cfg.quantize_base = to_bool(doc.get("quant", "quantize_base", ""), "quant.quantize_base");
    }

    if (doc.has("split", "eval_fraction")) {
        cfg.eval_fraction = to_double(doc.get("split", "eval_fraction", ""), "split.eval_fraction");
    }
    if (doc.has("split", "seed")) {
        cfg.seed = to_u64(doc.get("split", "seed", ""), "split.seed");
    }

    static const char* weight_keys[] = {"fatal", "incapacitating", "non_incapacitating",
                                        "possible_injury", "no_injury"};
    for (std::size_t i = 0; i < 5; ++i) {
        if (doc.has("severity_weights", weight_keys[i])) {
            cfg.severity_weights[i] = to_double(doc.get("severity_weights", weight_keys[i], ""),
                                                std::string("severity_weights.") + weight_keys[i]);
        }
    }

    if (doc.has("analytics", "top_k")) {
        cfg.top_k = to_u64(doc.get("analytics", "top_k", ""), "analytics.top_k");
    }
    if (doc.has("classify", "parallelism")) {
        cfg.parallelism = to_u64(doc.get("classify", "parallelism", ""), "classify.parallelism");
        if (cfg.parallelism < 1) throw ValidationError("config: parallelism must be >= 1");
    }
    if (doc.has("classify", "strict")) {
        cfg.strict = to_bool(doc.get("classify", "strict", ""), "classify.strict");
    }
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::string text;
    PipelineConfig cfg;
    try {
        text = read_file(path);
        cfg = parse_config(text);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
    // paths set in a config file are resolved against the file's directory,
    // so a config bundled with its data works from any working directory;
    // defaulted paths stay relative to the invocation
    const KvDoc doc = parse_kv(text);
    const fs::path base = fs::absolute(path).parent_path();
    const std::vector<std::pair<const char*, std::string*>> slots = {
        {"manifest", &cfg.manifest},       {"crashes", &cfg.crashes},
        {"traffic", &cfg.traffic},         {"events", &cfg.events},
        {"segments", &cfg.segments_path},  {"template", &cfg.template_path},
        {"dataset", &cfg.dataset},         {"results", &cfg.results},
        {"survey", &cfg.survey},           {"cache_dir", &cfg.cache_dir},
        {"output_dir", &cfg.output_dir},
    };
    for (const auto& [key, slot] : slots) {
        if (doc.has("paths", key) && !slot->empty() && fs::path(*slot).is_relative()) {
            *slot = (base / *slot).lexically_normal().string();
        }
    }
    return cfg;
}

prompt::PromptTemplate resolve_template(const PipelineConfig& cfg) {
    if (cfg.template_path.empty()) return prompt::default_template();
    return prompt::load_template(cfg.template_path);
}

std::vector<records::CrashCase> load_and_join_cases(const PipelineConfig& cfg) {
    require_path(cfg.crashes, "crash csv");
    require_path(cfg.traffic, "traffic csv");
    require_path(cfg.events, "events csv");
    require_path(cfg.segments_path, "segment config");
    const auto reports = records::load_crash_csv(cfg.crashes);
    const auto snapshots = records::load_traffic_csv(cfg.traffic);
    const auto events = records::load_events_csv(cfg.events);
    const segments::SegmentSet segset = segments::load_segments(cfg.segments_path);

    std::vector<records::CrashCase> cases;
    cases.reserve(reports.size());
    for (const auto& report : reports) {
        records::CrashCase probe;
        probe.report = report;
        const auto seg = segments::assign_segment(probe, segset);
        cases.push_back(records::join_case(report, snapshots, events, seg.value_or("")));
    }
    return cases;
}

segments::ReportBundle analyze_results(std::span<const records::CrashCase> cases,
                                       std::span<const classify::CausationResult> results,
                                       const segments::SegmentSet& segset,
                                       const segments::SeverityWeights& weights,
                                       std::size_t top_k) {
    segments::ReportBundle bundle;
    bundle.summaries =
        segments::rank_hotspots(segments::build_summaries(cases, segset), weights, top_k);
    for (const auto& s : bundle.summaries) {
        bundle.distributions[s.segment_id] =
            segments::causation_distribution(results, cases, segset, s.segment_id);
        const auto seg_results =
            segments::results_for_segment(results, cases, segset, s.segment_id);
        bundle.tallies[s.segment_id] = segments::factor_tally(seg_results);
        if (const auto* def = segset.find(s.segment_id)) {
            bundle.segment_names[s.segment_id] = def->name;
        }
    }
    return bundle;
}

segments::ReportBundle bundle_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("analysis json: ") + e.what());
    }
    if (doc.value("schema_version", 0) != 1) {
        throw ParseError("analysis json: unsupported schema_version");
    }
    segments::ReportBundle bundle;
    for (const auto& seg : doc.at("segments")) {
        segments::SegmentSummary s;
        s.segment_id = seg.at("segment_id").get<std::string>();
        s.total_crashes = seg.at("total_crashes").get<std::uint64_t>();
        s.analyzed_crashes = seg.at("analyzed_crashes").get<std::uint64_t>();
        s.hotspot_score = seg.at("hotspot_score").get<double>();
        static const char* severity_keys[] = {"fatal", "incapacitating", "non_incapacitating",
                                              "possible_injury", "no_injury"};
        const json& hist = seg.at("severity_histogram");
        for (std::size_t i = 0; i < 5; ++i) {
            s.severity_histogram[i] = hist.value(severity_keys[i], std::uint64_t{0});
        }
        segments::CausationDistribution dist;
        dist.segment_id = s.segment_id;
        dist.denominator = s.analyzed_crashes;
        for (const auto& share : seg.at("distribution")) {
            segments::LabelShare ls;
            const std::string name = share.at("label").get<std::string>();
            const auto label = classify::label_from_string(name);
            if (!label) throw ParseError("analysis json: unknown label '" + name + "'");
            ls.label = *label;
            ls.count = share.at("count").get<std::uint64_t>();
            ls.percentage = share.at("percentage").get<int>();
            dist.shares.push_back(ls);
        }
        dist.empty_flag = dist.shares.empty();
        std::map<classify::FactorTag, std::uint64_t> tally;
        for (const auto& [key, value] : seg.at("factors").items()) {
            const auto tag = classify::factor_from_string(key);
            if (!tag) throw ParseError("analysis json: unknown factor '" + key + "'");
            tally[*tag] = value.get<std::uint64_t>();
        }
        bundle.segment_names[s.segment_id] = seg.value("name", s.segment_id);
        bundle.distributions[s.segment_id] = std::move(dist);
        bundle.tallies[s.segment_id] = std::move(tally);
        bundle.summaries.push_back(std::move(s));
    }
    return bundle;
}

void cmd_build_corpus(const PipelineConfig& cfg) {
    require_path(cfg.manifest, "manifest");
    const auto records = corpus::ingest_manifest(cfg.manifest);
    if (records.empty()) {
        std::cerr << "warning: manifest is empty; writing an empty dataset\n";
    }
    const corpus::DatasetBuildResult built = corpus::build_dataset(records);
    const corpus::CorpusStats stats = corpus::corpus_stats(records, built.pairs.size());
    ensure_output_dir(cfg);
    write_file(out_path(cfg, "dataset.json"), corpus::dataset_to_json(built.pairs));
    write_file(out_path(cfg, "dataset_meta.json"), corpus::sidecar_to_json(built.pairs));
    write_file(out_path(cfg, "corpus_stats.json"), corpus::stats_to_json(stats));
    std::cout << "studies=" << stats.total_studies << " pairs=" << built.pairs.size()
              << " duplicates_dropped=" << built.drops.size() << "\n";
}

void cmd_finetune_toy(const PipelineConfig& cfg) {
    std::vector<corpus::PromptCompletionPair> pairs;
    if (cfg.dataset.empty()) {
        pairs = lora::toy_corpus();
    } else {
        require_path(cfg.dataset, "dataset");
        pairs = corpus::dataset_from_json(read_file(cfg.dataset));
    }
    const corpus::SplitResult split = corpus::split_dataset(pairs, cfg.eval_fraction, cfg.seed);

    std::vector<corpus::PromptCompletionPair> all_pairs = split.train;
    all_pairs.insert(all_pairs.end(), split.eval.begin(), split.eval.end());
    const std::vector<std::string> vocabulary = lora::build_vocabulary(all_pairs);
    const std::optional<nf4::QuantConfig> quant =
        cfg.quantize_base ? std::optional<nf4::QuantConfig>(cfg.quant) : std::nullopt;
    const lora::ToyModel model = lora::ToyModel::build(vocabulary, cfg.embed_dim, cfg.seed, quant);

    const lora::FinetuneResult result = lora::finetune(model, split.train, split.eval, cfg.adapter);
    ensure_output_dir(cfg);
    const auto bytes = lora::save_checkpoint(model, result.adapter, cfg.seed);
    write_file(out_path(cfg, "checkpoint.bin"),
               std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    write_file(out_path(cfg, "loss_curve.csv"), result.curve.to_csv());
    const auto& first = result.curve.points.front();
    const auto& last = result.curve.points.back();
    std::cout << "steps=" << last.step << " initial_train_loss=" << format_double(first.train_loss)
              << " initial_eval_loss=" << format_double(first.eval_loss)
              << " final_train_loss=" << format_double(last.train_loss)
              << " final_eval_loss=" << format_double(last.eval_loss) << "\n";
}

void cmd_classify(const PipelineConfig& cfg) {
    const auto cases = load_and_join_cases(cfg);
    classify::BackendConfig backend = cfg.backend;
    backend.cache_dir = cfg.cache_dir;
    classify::Classifier classifier(resolve_template(cfg), backend);
    const classify::BatchOutcome outcome = classifier.classify_batch(cases, cfg.parallelism);
    ensure_output_dir(cfg);
    write_file(out_path(cfg, "results.json"), classify::results_to_json(outcome.results));
    if (!outcome.failures.empty()) {
        json failures = json::array();
        for (const auto& f : outcome.failures) {
            failures.push_back({{"case_id", f.case_id},
                                {"error", f.error},
                                {"raw_response", f.raw_response}});
        }
        write_file(out_path(cfg, "failures.json"), failures.dump(2) + "\n");
    }
    std::cout << "ok=" << outcome.ok << " failed=" << outcome.failed
              << " cached=" << outcome.cached << "\n";
    if (cfg.strict && outcome.failed > 0) {
        throw BackendError(std::to_string(outcome.failed) +
                           " case(s) failed classification (strict mode)");
    }
}

void cmd_analyze(const PipelineConfig& cfg) {
    const auto cases = load_and_join_cases(cfg);
    std::string results_path = cfg.results;
    if (results_path.empty()) results_path = out_path(cfg, "results.json");
    require_path(results_path, "results json");
    const auto results = classify::results_from_json(read_file(results_path));
    const segments::SegmentSet segset = segments::load_segments(cfg.segments_path);
    const segments::ReportBundle bundle =
        analyze_results(cases, results, segset, cfg.severity_weights, cfg.top_k);
    ensure_output_dir(cfg);
    for (const auto format : {segments::ReportFormat::json, segments::ReportFormat::csv,
                              segments::ReportFormat::markdown, segments::ReportFormat::svg_bars}) {
        write_file(out_path(cfg, "report." + segments::format_extension(format)),
                   segments::render_report(bundle, format));
    }
    std::cout << "segments=" << bundle.summaries.size() << " results=" << results.size() << "\n";
}

void cmd_evaluate(const PipelineConfig& cfg) {
    require_path(cfg.survey, "survey csv");
    const auto ratings = expert::load_survey_csv(cfg.survey);
    const expert::AgreementReport report = expert::aggregate(ratings);
    ensure_output_dir(cfg);
    write_file(out_path(cfg, "agreement.json"), expert::report_to_json(report));
    std::cout << expert::report_to_text(report);
}

void cmd_report(const PipelineConfig&, const std::string& analysis_json,
                const std::string& format) {
    require_path(analysis_json, "analysis json");
    const segments::ReportBundle bundle = bundle_from_json(read_file(analysis_json));
    const segments::ReportFormat fmt = segments::parse_report_format(format);
    std::cout << segments::render_report(bundle, fmt);
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericError*>(&e) != nullptr) return 3;
    if (dynamic_cast<const BackendError*>(&e) != nullptr) return 4;
    if (dynamic_cast<const ParseError*>(&e) != nullptr) return 2;
    if (dynamic_cast<const ValidationError*>(&e) != nullptr) return 2;
    return 2;
}

std::string error_json(int code, const std::string& message, const std::string& context) {
    const json doc = {{"code", code}, {"message", message}, {"context", context}};
    return doc.dump() + "\n";
}

}  // namespace crashcause::pipeline
