#include "groundcheck/artifacts.hpp"

#include <fstream>

#include "groundcheck/errors.hpp"

namespace groundcheck {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw FormatError(std::string("artifact record lacks '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw FormatError(std::string("artifact field '") + key + "' has the wrong type");
    }
}

json edge_json(const KgEdge& e) { return {{"head", e.head}, {"relation", e.relation}, {"tail", e.tail}, {"pmids", e.pmids}}; }

json entity_ids(const LinkedEntitySet& set) {
    json out = json::array();
    for (const auto& m : set.resolved) out.push_back({{"mention", m.mention}, {"entity_id", m.entity_id}});
    return out;
}

}  // namespace

json ArtifactMeta::to_json() const {
    return {{"artifact", artifact}, {"config_hash", config_hash}, {"inputs_hash", inputs_hash}, {"seed", seed}};
}

ArtifactMeta ArtifactMeta::from_json(const json& j) {
    return {field<std::string>(j, "artifact"), field<std::string>(j, "config_hash"), field<std::string>(j, "inputs_hash"),
            field<std::uint64_t>(j, "seed")};
}

json to_json(const BenchmarkInstance& i) {
    return {{"id", i.id},
            {"task", std::string(task_spec(i.task).code)},
            {"head", i.head},
            {"tail", i.tail},
            {"label", i.label},
            {"pmids", i.pmids}};
}

BenchmarkInstance instance_from_json(const json& j) {
    BenchmarkInstance i;
    i.id = field<std::string>(j, "id");
    const auto task = parse_task(field<std::string>(j, "task"));
    if (!task) throw FormatError("instance " + i.id + " has an unknown task");
    i.task = *task;
    i.head = field<std::string>(j, "head");
    i.tail = field<std::string>(j, "tail");
    i.label = field<std::string>(j, "label");
    i.pmids = field<std::vector<std::uint64_t>>(j, "pmids");
    return i;
}

json to_json(const TaskStats& s) {
    json labels = json::array();
    for (const auto& l : s.labels) labels.push_back({{"label", l.label}, {"count", l.count}});
    return {{"task", std::string(task_spec(s.task).code)}, {"labels", labels}, {"total", s.total}};
}

json to_json(const HypothesisCandidate& c) {
    return {{"instance_id", c.instance_id},
            {"setting", std::string(to_string(c.setting))},
            {"sample_index", c.sample_index},
            {"predicted_label", c.predicted_label},
            {"statement", c.statement},
            {"rationale", c.rationale},
            {"parse_failed", c.parse_failed},
            {"raw_text", c.raw_text}};
}

HypothesisCandidate candidate_from_json(const json& j) {
    HypothesisCandidate c;
    c.instance_id = field<std::string>(j, "instance_id");
    const auto setting = parse_setting(field<std::string>(j, "setting"));
    if (!setting) throw FormatError("candidate for " + c.instance_id + " has an unknown setting");
    c.setting = *setting;
    c.sample_index = field<int>(j, "sample_index");
    c.predicted_label = field<std::string>(j, "predicted_label");
    c.statement = field<std::string>(j, "statement");
    c.rationale = field<std::string>(j, "rationale");
    c.parse_failed = field<bool>(j, "parse_failed");
    c.raw_text = field<std::string>(j, "raw_text");
    return c;
}

json to_json(const GroundednessReport& r) {
    json claims = json::array();
    for (std::size_t i = 0; i < r.claims.size(); ++i) {
        const auto& c = r.claims[i];
        json item{{"index", c.index}, {"text", c.text}};
        if (i < r.verdicts.size()) {
            const auto& v = r.verdicts[i];
            json docs = json::array(), edges = json::array();
            for (const auto& d : v.docs) docs.push_back({{"doc_id", d.doc_id}, {"score", d.score}});
            for (const auto& e : v.edges) edges.push_back(edge_json(e));
            item["grounded"] = v.grounded;
            item["judge_failed"] = v.judge_failed;
            item["docs"] = docs;
            item["edges"] = edges;
        }
        item["entities"] = entity_ids(c.entities);
        claims.push_back(std::move(item));
    }
    return {{"instance_id", r.instance_id},
            {"sample_index", r.sample_index},
            {"mode", std::string(to_string(r.mode))},
            {"score", r.score},
            {"flags",
             {{"decomposition_failure", r.flags.decomposition_failure},
              {"unverifiable", r.flags.unverifiable},
              {"judge_failure", r.flags.judge_failure},
              {"extraction_failure", r.flags.extraction_failure}}},
            {"claims", claims}};
}

GroundednessReport report_from_json(const json& j) {
    GroundednessReport r;
    r.instance_id = field<std::string>(j, "instance_id");
    r.sample_index = field<int>(j, "sample_index");
    const auto mode = parse_source_mode(field<std::string>(j, "mode"));
    if (!mode) throw FormatError("report for " + r.instance_id + " has an unknown mode");
    r.mode = *mode;
    r.score = field<double>(j, "score");
    const auto flags = field<json>(j, "flags");
    r.flags.decomposition_failure = field<bool>(flags, "decomposition_failure");
    r.flags.unverifiable = field<bool>(flags, "unverifiable");
    r.flags.judge_failure = field<bool>(flags, "judge_failure");
    r.flags.extraction_failure = field<bool>(flags, "extraction_failure");
    return r;
}

json to_json(const PredictionRecord& p, Strategy strategy) {
    json j{{"instance_id", p.instance_id},
           {"task", std::string(task_spec(p.task).code)},
           {"predicted_label", p.predicted_label},
           {"sample_index", p.sample_index},
           {"strategy", std::string(to_string(strategy))}};
    j["groundedness"] = p.groundedness ? json(*p.groundedness) : json(nullptr);
    return j;
}

PredictionRecord prediction_from_json(const json& j) {
    PredictionRecord p;
    p.instance_id = field<std::string>(j, "instance_id");
    const auto task = parse_task(field<std::string>(j, "task"));
    if (!task) throw FormatError("prediction for " + p.instance_id + " has an unknown task");
    p.task = *task;
    p.predicted_label = field<std::string>(j, "predicted_label");
    p.sample_index = field<int>(j, "sample_index");
    if (const auto g = j.find("groundedness"); g != j.end() && !g->is_null()) p.groundedness = g->get<double>();
    return p;
}

JsonLines read_json_lines(const std::filesystem::path& path, bool require_meta) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("missing artifact " + path.string());
    JsonLines out;
    std::string line;
    std::size_t n = 0;
    bool have_meta = false;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw FormatError(path.string() + " line " + std::to_string(n) + " is not a JSON object");
        }
        if (!have_meta && (require_meta || j.contains("meta"))) {
            if (!j.contains("meta")) throw FormatError(path.string() + " does not start with a meta record");
            out.meta = ArtifactMeta::from_json(j.at("meta"));
            have_meta = true;
            continue;
        }
        out.records.push_back(std::move(j));
    }
    if (require_meta && !have_meta) throw FormatError(path.string() + " is empty");
    return out;
}

std::optional<ArtifactMeta> peek_meta(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    if (!in || !std::getline(in, line)) return std::nullopt;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    try {
        if (j.contains("meta")) return ArtifactMeta::from_json(j.at("meta"));
    } catch (const Error&) {
    }
    return std::nullopt;
}

std::string json_lines_text(const ArtifactMeta& meta, const std::vector<json>& records) {
    std::string out = json{{"meta", meta.to_json()}}.dump() + "\n";
    for (const auto& r : records) out += r.dump() + "\n";
    return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out.flush()) throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace groundcheck
