#include "groundcheck/run_config.hpp"

#include <fstream>
#include <set>

#include "groundcheck/errors.hpp"
#include "groundcheck/hashing.hpp"

namespace groundcheck {

namespace {

using nlohmann::json;

/// Typed access to one JSON object with unknown-key detection.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("'" + label() + "' must be an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        const std::set<std::string> known(keys.begin(), keys.end());
        for (const auto& [key, value] : j_.items()) {
            if (!known.contains(key)) throw ConfigError("unknown config key '" + path(key) + "'");
        }
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    std::string str(const char* key, std::string fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError("'" + path(key) + "' must be a string");
        return v.get<std::string>();
    }

    std::int64_t integer(const char* key, std::int64_t fallback, std::int64_t min) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError("'" + path(key) + "' must be an integer");
        const auto x = v.get<std::int64_t>();
        if (x < min) throw ConfigError("'" + path(key) + "' must be at least " + std::to_string(min));
        return x;
    }

    double number(const char* key, double fallback, double min) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError("'" + path(key) + "' must be a number");
        const auto x = v.get<double>();
        if (x < min) throw ConfigError("'" + path(key) + "' must be at least " + std::to_string(min));
        return x;
    }

    bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError("'" + path(key) + "' must be true or false");
        return v.get<bool>();
    }

    Section sub(const char* key) const {
        static const json empty = json::object();
        return Section(has(key) ? j_.at(key) : empty, path(key));
    }

    const json& raw(const char* key) const { return j_.at(key); }
    std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

private:
    std::string label() const { return name_.empty() ? "config" : name_; }

    const json& j_;
    std::string name_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

std::string RunConfig::hash() const {
    auto copy = source;
    copy.erase("output_dir");
    return sha256_hex(copy.dump());
}

void apply_override(json& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    std::string pointer;
    std::size_t start = 0;
    while (start <= key.size()) {
        const auto dot = std::min(key.find('.', start), key.size());
        const auto part = key.substr(start, dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
        pointer += "/" + part;
        start = dot + 1;
    }
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    try {
        config[json::json_pointer(pointer)] = std::move(value);
    } catch (const json::exception& e) {
        throw ConfigError("cannot apply override '" + key + "': " + e.what());
    }
}

RunConfig parse_run_config(const json& config, const std::filesystem::path& base_dir) {
    const Section root(config, "");
    root.allow({"corpus_path", "entities_path", "edges_path", "output_dir", "seed", "workers", "tasks", "provider",
                "retrieval", "split", "generation", "detection", "selection", "evaluation"});

    RunConfig rc;
    rc.source = config;
    rc.corpus_path = resolve(base_dir, root.str("corpus_path", ""));
    rc.entities_path = resolve(base_dir, root.str("entities_path", ""));
    rc.edges_path = resolve(base_dir, root.str("edges_path", ""));
    rc.output_dir = resolve(base_dir, root.str("output_dir", ""));
    if (rc.output_dir.empty()) throw ConfigError("'output_dir' is required");
    rc.seed = static_cast<std::uint64_t>(root.integer("seed", 42, 0));
    rc.workers = static_cast<int>(root.integer("workers", 4, 1));

    if (root.has("tasks")) {
        const auto& tasks = root.raw("tasks");
        if (!tasks.is_array() || tasks.empty()) throw ConfigError("'tasks' must be a non-empty array");
        rc.tasks.clear();
        for (const auto& t : tasks) {
            const auto task = t.is_string() ? parse_task(t.get<std::string>()) : std::nullopt;
            if (!task) throw ConfigError("'tasks' has an unknown task " + t.dump());
            rc.tasks.push_back(*task);
        }
    }

    const auto provider = root.sub("provider");
    provider.allow({"kind", "mock_script", "base_url", "model", "api_key_env", "timeout_seconds", "max_retries",
                    "max_concurrent_requests", "backoff_ms"});
    rc.provider.kind = provider.str("kind", "mock");
    if (rc.provider.kind != "mock" && rc.provider.kind != "http") {
        throw ConfigError("'provider.kind' must be \"mock\" or \"http\"");
    }
    rc.provider.mock_script = resolve(base_dir, provider.str("mock_script", ""));
    auto& pc = rc.provider.config;
    pc.base_url = provider.str("base_url", "");
    pc.model_name = provider.str("model", "");
    pc.api_key_env_name = provider.str("api_key_env", "");
    pc.timeout_seconds = provider.number("timeout_seconds", 60.0, 0.001);
    pc.max_retries = static_cast<int>(provider.integer("max_retries", 3, 0));
    pc.max_concurrent_requests = static_cast<int>(provider.integer("max_concurrent_requests", 4, 1));
    pc.backoff_ms = static_cast<int>(provider.integer("backoff_ms", 500, 0));

    const auto retrieval = root.sub("retrieval");
    retrieval.allow({"k_generate", "k_verify", "tau", "pmid_cutoff"});
    rc.k_generate = static_cast<std::size_t>(retrieval.integer("k_generate", 32, 1));
    rc.k_verify = static_cast<std::size_t>(retrieval.integer("k_verify", 8, 1));
    rc.tau = retrieval.number("tau", 0.0, 0.0);
    rc.pmid_cutoff = static_cast<std::uint64_t>(retrieval.integer("pmid_cutoff", 36600000, 1));

    const auto split = root.sub("split");
    split.allow({"seen_max_pmid", "unseen_min_pmid"});
    rc.seen_max_pmid = static_cast<std::uint64_t>(split.integer("seen_max_pmid", 36600000, 1));
    rc.unseen_min_pmid = static_cast<std::uint64_t>(split.integer("unseen_min_pmid", 38200000, 1));
    if (rc.seen_max_pmid >= rc.unseen_min_pmid) {
        throw ConfigError("'split.seen_max_pmid' must be below 'split.unseen_min_pmid'");
    }

    const auto gen = root.sub("generation");
    gen.allow({"setting", "n", "greedy_temperature", "sample_temperature", "max_output_tokens", "max_hops", "max_chains"});
    const auto setting = parse_setting(gen.str("setting", "parametric"));
    if (!setting) throw ConfigError("'generation.setting' is not a known knowledge setting");
    rc.setting = *setting;
    auto& go = rc.generation;
    go.n = static_cast<int>(gen.integer("n", 1, 1));
    go.greedy_temperature = gen.number("greedy_temperature", 0.0, 0.0);
    go.sample_temperature = gen.number("sample_temperature", 1.0, 0.0);
    go.max_output_tokens = static_cast<int>(gen.integer("max_output_tokens", 1024, 1));
    go.max_hops = static_cast<std::size_t>(gen.integer("max_hops", 3, 1));
    go.max_chains = static_cast<std::size_t>(gen.integer("max_chains", 10, 1));
    go.k = rc.k_generate;
    go.tau = rc.tau;
    go.pmid_cutoff = rc.pmid_cutoff;

    const auto det = root.sub("detection");
    det.allow({"mode", "max_output_tokens"});
    const auto mode = parse_source_mode(det.str("mode", "lit"));
    if (!mode) throw ConfigError("'detection.mode' must be \"lit\", \"kg\" or \"both\"");
    rc.detection_mode = *mode;
    rc.detection_max_output_tokens = static_cast<int>(det.integer("max_output_tokens", 1024, 1));

    const auto sel = root.sub("selection");
    sel.allow({"strategy"});
    const auto strategy = parse_strategy(sel.str("strategy", "greedy"));
    if (!strategy) throw ConfigError("'selection.strategy' must be greedy, self_consistency or max_groundedness");
    rc.strategy = *strategy;

    const auto eval = root.sub("evaluation");
    eval.allow({"gold_path", "macro"});
    rc.gold_path = resolve(base_dir, eval.str("gold_path", ""));
    rc.macro_average = eval.boolean("macro", false);
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json config = json::parse(in, nullptr, false);
    if (config.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
    if (!config.is_object()) throw ConfigError("config file " + path.string() + " must hold a JSON object");
    for (const auto& o : overrides) apply_override(config, o);
    return parse_run_config(config, path.parent_path());
}

}  // namespace groundcheck
