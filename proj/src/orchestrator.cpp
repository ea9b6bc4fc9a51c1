#include "groundcheck/orchestrator.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "groundcheck/benchmark.hpp"
#include "groundcheck/errors.hpp"
#include "groundcheck/eval_select.hpp"
#include "groundcheck/hashing.hpp"
#include "groundcheck/hypothesis_generator.hpp"
#include "groundcheck/knowhd.hpp"

namespace groundcheck {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::pair<Command, std::string_view>, 7> kCommands{{
    {Command::BuildIndex, "build-index"},
    {Command::BuildBenchmark, "build-benchmark"},
    {Command::Generate, "generate"},
    {Command::Detect, "detect"},
    {Command::Select, "select"},
    {Command::Evaluate, "evaluate"},
    {Command::Pipeline, "pipeline"},
}};

void require_file(const fs::path& path, std::string_view what) {
    if (path.empty()) throw ConfigError(std::string(what) + " is not configured");
    if (!fs::exists(path)) throw ConfigError("missing " + std::string(what) + ": " + path.string());
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

/// Runs fn(0..n-1) on up to `workers` threads. The first exception stops the
/// hand-out of new items and is rethrown once every thread has finished.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex mu;
    auto body = [&] {
        while (!stop.load()) {
            const auto i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                stop = true;
            }
        }
    };
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(body);
    }
    if (error) std::rethrow_exception(error);
}

/// Per-unit work with a checkpoint file: finished units are appended to the
/// partial file as {"unit": id, "records": [...]} and reloaded on a rerun
/// whose meta matches. Results come back in `ids` order.
std::vector<json> run_resumable(const fs::path& artifact, const ArtifactMeta& meta, const std::vector<std::string>& ids,
                                int workers, const std::function<std::vector<json>(std::size_t)>& work,
                                std::ostream& log) {
    const auto partial = ArtifactPaths::partial(artifact);
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < ids.size(); ++i) position.emplace(ids[i], i);

    std::vector<std::optional<json>> done(ids.size());
    std::size_t resumed = 0;
    if (fs::exists(partial) && peek_meta(partial) == meta) {
        std::ifstream in(partial);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            const auto j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("unit") || !j.contains("records")) continue;
            const auto it = position.find(j.at("unit").get<std::string>());
            if (it == position.end() || done[it->second]) continue;
            done[it->second] = j.at("records");
            ++resumed;
        }
    }
    // Rewrite the checkpoint so a torn last line cannot merge with new ones.
    {
        std::string text = json{{"meta", meta.to_json()}}.dump() + "\n";
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (done[i]) text += json{{"unit", ids[i]}, {"records", *done[i]}}.dump() + "\n";
        }
        write_atomic(partial, text);
    }
    if (resumed > 0) log << "  resuming: " << resumed << " of " << ids.size() << " instances already done\n";

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!done[i]) todo.push_back(i);
    }
    std::ofstream out(partial, std::ios::app);
    std::mutex mu;
    parallel_for(todo.size(), workers, [&](std::size_t t) {
        const auto i = todo[t];
        json records = work(i);
        std::lock_guard lock(mu);
        out << json{{"unit", ids[i]}, {"records", records}}.dump() << "\n";
        out.flush();
        done[i] = std::move(records);
    });

    std::vector<json> all;
    for (auto& d : done) {
        for (auto& r : *d) all.push_back(std::move(r));
    }
    return all;
}

std::string one_json_file(const ArtifactMeta& meta, json body) {
    body["meta"] = meta.to_json();
    return body.dump(2) + "\n";
}

std::optional<ArtifactMeta> read_meta(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    const auto whole = json::parse(in, nullptr, false);
    if (!whole.is_discarded() && whole.is_object() && whole.contains("meta")) {
        try {
            return ArtifactMeta::from_json(whole.at("meta"));
        } catch (const Error&) {
            return std::nullopt;
        }
    }
    return peek_meta(path);
}

}  // namespace

std::string_view to_string(Command command) {
    for (const auto& [c, name] : kCommands) {
        if (c == command) return name;
    }
    return "unknown";
}

std::optional<Command> parse_command(std::string_view text) {
    for (const auto& [c, name] : kCommands) {
        if (name == text) return c;
    }
    return std::nullopt;
}

fs::path ArtifactPaths::partial(const fs::path& artifact) {
    auto p = artifact;
    p.replace_extension(".partial.jsonl");
    return p;
}

Orchestrator::Orchestrator(RunConfig config, std::ostream& log, std::shared_ptr<Provider> provider)
    : config_(std::move(config)), paths_{config_.output_dir}, log_(log), provider_(std::move(provider)) {}

Orchestrator::~Orchestrator() = default;

ArtifactMeta Orchestrator::meta(std::string_view artifact) const {
    const auto& s = config_.source;
    auto pick = [&](std::initializer_list<const char*> keys) {
        json j = json::object();
        for (const auto* k : keys) {
            if (s.contains(k)) j[k] = s.at(k);
        }
        return j;
    };
    // Later artifacts depend on everything upstream of them.
    const int rank = artifact == "index" ? 0
                     : (artifact == "benchmark" || artifact == "benchmark_stats") ? 1
                     : artifact == "candidates" ? 2
                     : artifact == "reports" ? 3
                                             : 4;
    json inputs = json::object();
    if (rank != 1) {
        inputs["index"] = pick({"corpus_path"});
        if (!config_.corpus_path.empty() && fs::exists(config_.corpus_path)) {
            inputs["corpus_file"] = file_digest(config_.corpus_path);
        }
    }
    if (rank >= 1) {
        inputs["benchmark"] = pick({"entities_path", "edges_path", "split", "tasks", "seed"});
        for (const auto& p : {config_.entities_path, config_.edges_path}) {
            if (!p.empty() && fs::exists(p)) inputs["kg_files"].push_back(file_digest(p));
        }
    }
    if (rank >= 2) {
        inputs["generation"] = pick({"retrieval", "generation", "provider"});
        if (config_.provider.kind == "mock" && !config_.provider.mock_script.empty() &&
            fs::exists(config_.provider.mock_script)) {
            inputs["mock_script"] = file_digest(config_.provider.mock_script);
        }
    }
    if (rank >= 3) inputs["detection"] = pick({"detection"});
    if (rank >= 4) inputs["selection"] = pick({"selection", "evaluation"});
    return {std::string(artifact), config_.hash(), sha256_hex(inputs.dump()), config_.seed};
}

bool Orchestrator::up_to_date(const fs::path& artifact, std::string_view name) const {
    const auto m = read_meta(artifact);
    return m && *m == meta(name);
}

void Orchestrator::check_inputs(Command command) const {
    const bool needs_provider_script = !provider_ && config_.provider.kind == "mock";
    auto provider_inputs = [&] {
        if (needs_provider_script) require_file(config_.provider.mock_script, "provider.mock_script");
    };
    auto graph_inputs = [&] {
        require_file(config_.entities_path, "entities_path");
        require_file(config_.edges_path, "edges_path");
    };
    switch (command) {
        case Command::BuildIndex:
            require_file(config_.corpus_path, "corpus_path");
            break;
        case Command::BuildBenchmark:
            graph_inputs();
            break;
        case Command::Generate:
            require_file(paths_.benchmark(), "benchmark artifact");
            graph_inputs();
            if (uses_literature(config_.setting)) require_file(paths_.index_dir(), "corpus index");
            provider_inputs();
            break;
        case Command::Detect:
            require_file(paths_.candidates(), "candidates artifact");
            if (config_.detection_mode != SourceMode::KG) require_file(paths_.index_dir(), "corpus index");
            if (config_.detection_mode != SourceMode::Lit) graph_inputs();
            provider_inputs();
            break;
        case Command::Select:
            require_file(paths_.benchmark(), "benchmark artifact");
            require_file(paths_.candidates(), "candidates artifact");
            if (config_.strategy == Strategy::MaxGroundedness) require_file(paths_.reports(), "reports artifact");
            break;
        case Command::Evaluate:
            require_file(paths_.predictions(), "predictions artifact");
            require_file(config_.gold_path.empty() ? paths_.benchmark() : config_.gold_path, "gold file");
            break;
        case Command::Pipeline:
            graph_inputs();
            if (uses_literature(config_.setting) || config_.detection_mode != SourceMode::KG) {
                require_file(config_.corpus_path, "corpus_path");
            }
            provider_inputs();
            if (!config_.gold_path.empty()) require_file(config_.gold_path, "gold file");
            break;
    }
}

void Orchestrator::run(Command command) {
    check_inputs(command);
    switch (command) {
        case Command::BuildIndex: return build_index();
        case Command::BuildBenchmark: return build_benchmark();
        case Command::Generate: return generate();
        case Command::Detect: return detect();
        case Command::Select: return select();
        case Command::Evaluate: return evaluate();
        case Command::Pipeline: return pipeline();
    }
}

const KnowledgeGraph& Orchestrator::seen_graph() {
    if (!seen_) {
        std::ifstream ents(config_.entities_path), edges(config_.edges_path);
        if (!ents || !edges) throw ConfigError("cannot open the knowledge graph files");
        const auto graph = KnowledgeGraph::load(ents, edges);
        seen_.emplace(temporal_split(graph, config_.seen_max_pmid, config_.unseen_min_pmid).seen);
    }
    return *seen_;
}

const CorpusStore& Orchestrator::corpus() {
    if (!corpus_) corpus_.emplace(CorpusStore::load(paths_.index_dir()));
    return *corpus_;
}

const MentionIndex& Orchestrator::linker() {
    if (!linker_) linker_.emplace(MentionIndex::build(seen_graph()));
    return *linker_;
}

Gateway& Orchestrator::gateway() {
    if (!gateway_) {
        auto provider = provider_ ? provider_
                                  : make_provider(config_.provider.kind, config_.provider.config,
                                                  config_.provider.mock_script.string());
        gateway_ = std::make_unique<Gateway>(std::move(provider), config_.provider.config);
    }
    return *gateway_;
}

void Orchestrator::build_index() {
    std::ifstream in(config_.corpus_path);
    if (!in) throw ConfigError("cannot open corpus file " + config_.corpus_path.string());
    const auto store = CorpusStore::ingest(in);

    auto staging = paths_.index_dir();
    staging += ".tmp";
    fs::remove_all(staging);
    store.save(staging);
    write_atomic(staging / "meta.json", json{{"meta", meta("index").to_json()},
                                             {"documents", store.size()}}.dump() + "\n");
    fs::remove_all(paths_.index_dir());
    fs::rename(staging, paths_.index_dir());
    corpus_.reset();
    log_ << "build-index: " << store.size() << " documents -> " << paths_.index_dir().string() << "\n";
}

void Orchestrator::build_benchmark() {
    std::ifstream ents(config_.entities_path), edges(config_.edges_path);
    if (!ents || !edges) throw ConfigError("cannot open the knowledge graph files");
    const auto graph = KnowledgeGraph::load(ents, edges);
    const auto split = temporal_split(graph, config_.seen_max_pmid, config_.unseen_min_pmid);
    const auto bench = groundcheck::build_benchmark(split.seen, split.unseen, config_.tasks, config_.seed);

    std::vector<json> records;
    for (const auto& i : bench.instances) records.push_back(to_json(i));
    json stats = json::array();
    for (const auto& s : bench.stats) stats.push_back(to_json(s));

    const auto m = meta("benchmark");
    const auto stats_meta = meta("benchmark_stats");
    const auto stats_text = "# config_hash " + stats_meta.config_hash + " seed " + std::to_string(stats_meta.seed) +
                            "\n" + format_stats_table(bench.stats);
    write_atomic(paths_.benchmark(), json_lines_text(m, records));
    write_atomic(paths_.benchmark_stats(), one_json_file(stats_meta, json{{"tasks", stats}}));
    write_atomic(paths_.benchmark_stats_text(), stats_text);
    seen_.emplace(split.seen);
    linker_.reset();
    log_ << "build-benchmark: " << bench.instances.size() << " instances -> " << paths_.benchmark().string() << "\n";
}

void Orchestrator::generate() {
    const auto bench = read_json_lines(paths_.benchmark());
    std::vector<BenchmarkInstance> instances;
    std::vector<std::string> ids;
    for (const auto& r : bench.records) {
        instances.push_back(instance_from_json(r));
        ids.push_back(instances.back().id);
    }
    KnowledgeSources sources{&seen_graph(), uses_literature(config_.setting) ? &corpus() : nullptr};
    auto& gw = gateway();
    const auto m = meta("candidates");

    const auto records = run_resumable(
        paths_.candidates(), m, ids, config_.workers,
        [&](std::size_t i) {
            std::vector<json> out;
            for (const auto& c : groundcheck::generate(instances[i], config_.setting, config_.generation, gw, sources)) {
                out.push_back(to_json(c));
            }
            return out;
        },
        log_);
    write_atomic(paths_.candidates(), json_lines_text(m, records));
    fs::remove(ArtifactPaths::partial(paths_.candidates()));
    log_ << "generate: " << instances.size() << " instances, " << records.size() << " candidates ("
         << to_string(config_.setting) << ") -> " << paths_.candidates().string() << "\n";
}

void Orchestrator::detect() {
    const auto cands = read_json_lines(paths_.candidates());
    std::vector<std::string> ids;
    std::vector<std::vector<HypothesisCandidate>> groups;
    std::unordered_map<std::string, std::size_t> group_of;
    for (const auto& r : cands.records) {
        auto c = candidate_from_json(r);
        auto [it, fresh] = group_of.emplace(c.instance_id, groups.size());
        if (fresh) {
            ids.push_back(c.instance_id);
            groups.emplace_back();
        }
        groups[it->second].push_back(std::move(c));
    }

    const bool lit = config_.detection_mode != SourceMode::KG;
    const bool kg = config_.detection_mode != SourceMode::Lit;
    DetectorOptions options;
    options.k = config_.k_verify;
    options.tau = config_.tau;
    options.pmid_cutoff = config_.pmid_cutoff;
    options.max_output_tokens = config_.detection_max_output_tokens;
    const Detector detector(gateway(), lit ? &corpus() : nullptr, kg ? &seen_graph() : nullptr,
                            kg ? &linker() : nullptr, options);
    const auto m = meta("reports");

    const auto records = run_resumable(
        paths_.reports(), m, ids, config_.workers,
        [&](std::size_t i) {
            std::vector<json> out;
            for (const auto& c : groups[i]) {
                out.push_back(to_json(detector.groundedness(c.instance_id, c.sample_index, c.rationale, c.statement,
                                                            config_.detection_mode)));
            }
            return out;
        },
        log_);
    write_atomic(paths_.reports(), json_lines_text(m, records));
    fs::remove(ArtifactPaths::partial(paths_.reports()));
    log_ << "detect: " << records.size() << " reports (" << to_string(config_.detection_mode) << ") -> "
         << paths_.reports().string() << "\n";
}

void Orchestrator::select() {
    const auto bench = read_json_lines(paths_.benchmark());
    const auto cands = read_json_lines(paths_.candidates());

    std::map<std::string, std::vector<HypothesisCandidate>> by_instance;
    for (const auto& r : cands.records) {
        auto c = candidate_from_json(r);
        by_instance[c.instance_id].push_back(std::move(c));
    }

    // Scores are read when the strategy needs them or the reports match this run.
    std::map<std::pair<std::string, int>, double> scores;
    const bool need_scores = config_.strategy == Strategy::MaxGroundedness;
    if (need_scores || up_to_date(paths_.reports(), "reports")) {
        for (const auto& r : read_json_lines(paths_.reports()).records) {
            const auto rep = report_from_json(r);
            scores[{rep.instance_id, rep.sample_index}] = rep.score;
        }
    }

    std::vector<json> records;
    for (const auto& r : bench.records) {
        const auto inst = instance_from_json(r);
        const auto it = by_instance.find(inst.id);
        if (it == by_instance.end()) throw FormatError("no candidates for instance " + inst.id);
        const auto& group = it->second;

        std::vector<double> s;
        if (need_scores) {
            for (const auto& c : group) {
                const auto sc = scores.find({c.instance_id, c.sample_index});
                if (sc == scores.end()) {
                    throw FormatError("no groundedness report for " + c.instance_id + " sample " +
                                      std::to_string(c.sample_index));
                }
                s.push_back(sc->second);
            }
        }
        const auto items = selection_items(group, s);
        const auto& chosen = group[groundcheck::select(items, config_.strategy)];

        PredictionRecord p{inst.id, inst.task, chosen.predicted_label, {}, std::nullopt, chosen.sample_index};
        if (const auto sc = scores.find({chosen.instance_id, chosen.sample_index}); sc != scores.end()) {
            p.groundedness = sc->second;
        }
        records.push_back(to_json(p, config_.strategy));
    }
    write_atomic(paths_.predictions(), json_lines_text(meta("predictions"), records));
    log_ << "select: " << records.size() << " predictions (" << to_string(config_.strategy) << ") -> "
         << paths_.predictions().string() << "\n";
}

void Orchestrator::evaluate() {
    const auto preds = read_json_lines(paths_.predictions());
    const auto gold_path = config_.gold_path.empty() ? paths_.benchmark() : config_.gold_path;
    const auto gold = read_json_lines(gold_path, false);

    std::unordered_map<std::string, BenchmarkInstance> gold_by_id;
    for (const auto& r : gold.records) {
        auto inst = instance_from_json(r);
        if (!is_task_label(inst.task, inst.label)) {
            throw FormatError("gold instance " + inst.id + " has label '" + inst.label + "' outside its task");
        }
        const auto id = inst.id;
        if (!gold_by_id.emplace(id, std::move(inst)).second) throw FormatError("gold file repeats instance " + id);
    }

    std::vector<PredictionRecord> records;
    for (const auto& r : preds.records) {
        auto p = prediction_from_json(r);
        const auto it = gold_by_id.find(p.instance_id);
        if (it == gold_by_id.end()) throw Error("gold file does not match predictions: no gold for " + p.instance_id);
        if (it->second.task != p.task) throw Error("gold file does not match predictions: task differs for " + p.instance_id);
        p.gold_label = it->second.label;
        records.push_back(std::move(p));
    }
    if (records.size() != gold_by_id.size()) {
        throw Error("gold file does not match predictions: " + std::to_string(gold_by_id.size()) + " gold instances, " +
                    std::to_string(records.size()) + " predictions");
    }

    const auto report = build_report(records, config_.macro_average);
    const auto m = meta("metrics");
    json body = report_json(report);
    body["strategy"] = std::string(to_string(config_.strategy));
    const auto table = "# config_hash " + m.config_hash + " seed " + std::to_string(m.seed) + " strategy " +
                       std::string(to_string(config_.strategy)) + "\n" + format_report_table(report);
    const auto csv = predictions_csv(records, config_.strategy);

    write_atomic(paths_.metrics(), one_json_file(m, body));
    write_atomic(paths_.metrics_text(), table);
    write_atomic(paths_.predictions_csv(), csv);
    log_ << table;
}

void Orchestrator::pipeline() {
    const bool need_index = uses_literature(config_.setting) || config_.detection_mode != SourceMode::KG;
    auto stage = [&](Command c, const fs::path& artifact, std::string_view name) {
        if (up_to_date(artifact, name)) {
            log_ << to_string(c) << ": up to date, reusing " << artifact.string() << "\n";
            return;
        }
        run(c);
    };
    if (need_index) stage(Command::BuildIndex, paths_.index_meta(), "index");
    stage(Command::BuildBenchmark, paths_.benchmark(), "benchmark");
    stage(Command::Generate, paths_.candidates(), "candidates");
    stage(Command::Detect, paths_.reports(), "reports");
    run(Command::Select);
    run(Command::Evaluate);
}

}  // namespace groundcheck
