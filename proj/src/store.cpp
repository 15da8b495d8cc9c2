#include "pft/store.hpp"

#include <stdexcept>

#include <json.hpp>

#include "pft/rng.hpp"

namespace pft {

namespace {

nlohmann::ordered_json spec_json(const TrialSpec& spec) {
    nlohmann::ordered_json j;
    j["config_id"] = spec.config_id;
    j["speaker"] = spec.speaker;
    j["emotion"] = spec.emotion;
    j["k"] = spec.k;
    j["trial_index"] = spec.trial_index;
    j["seed"] = spec.seed;
    return j;
}

TrialSpec spec_from_json(const nlohmann::json& j) {
    TrialSpec spec;
    spec.config_id = j.at("config_id").get<int>();
    spec.speaker = j.at("speaker").get<std::string>();
    spec.emotion = j.at("emotion").get<std::string>();
    spec.k = j.at("k").get<int>();
    spec.trial_index = j.at("trial_index").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

}  // namespace

std::string seal_line(const std::string& payload) {
    return payload + "\t#" + hex64(fnv1a64(payload));
}

std::optional<std::string> unseal_line(const std::string& line) {
    const auto pos = line.rfind("\t#");
    if (pos == std::string::npos) return std::nullopt;
    const std::string payload = line.substr(0, pos);
    const std::string marker = line.substr(pos + 2);
    if (marker.size() != 16 || marker != hex64(fnv1a64(payload))) return std::nullopt;
    return payload;
}

std::string serialize_trial_spec(const TrialSpec& spec) { return spec_json(spec).dump(); }

TrialSpec parse_trial_spec(const std::string& json_text) {
    return spec_from_json(nlohmann::json::parse(json_text));
}

std::string serialize_record(const TrialRecord& record) {
    nlohmann::ordered_json j = spec_json(record.spec);
    j["status"] = record.status;
    if (record.ok()) {
        j["macro_f1"] = record.macro_f1;
        j["per_class_f1"] = {record.f1_class0, record.f1_class1};
        j["baseline_f1"] = record.baseline_f1;
    } else {
        j["macro_f1"] = nullptr;
        j["per_class_f1"] = nullptr;
        j["baseline_f1"] = nullptr;
        j["error"] = record.error;
    }
    j["epochs"] = record.epochs;
    j["wall_ms"] = record.wall_ms;
    return j.dump();
}

TrialRecord parse_record(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    TrialRecord record;
    record.spec = spec_from_json(j);
    record.status = j.at("status").get<std::string>();
    if (record.ok()) {
        record.macro_f1 = j.at("macro_f1").get<double>();
        const auto& per_class = j.at("per_class_f1");
        record.f1_class0 = per_class.at(0).get<double>();
        record.f1_class1 = per_class.at(1).get<double>();
        record.baseline_f1 = j.at("baseline_f1").get<double>();
    } else {
        record.error = j.value("error", "");
    }
    record.epochs = j.at("epochs").get<std::size_t>();
    record.wall_ms = j.at("wall_ms").get<std::int64_t>();
    return record;
}

ResultStore::ResultStore(std::filesystem::path path, const StoreMeta& meta)
    : path_(std::move(path)) {
    const bool existed = std::filesystem::exists(path_);
    bool torn_tail = false;
    if (existed) {
        const LoadResult prior = load(path_);
        if (prior.meta && prior.meta->plan_hash != meta.plan_hash) {
            throw std::runtime_error("store '" + path_.string() + "' was written for plan " +
                                     prior.meta->plan_hash + ", current plan is " + meta.plan_hash);
        }
        // A crash mid-write can leave a final line with no newline. Terminate it
        // so the next append starts fresh and only the fragment is discarded.
        std::ifstream in(path_, std::ios::binary);
        if (in) {
            in.seekg(0, std::ios::end);
            if (in.tellg() > 0) {
                in.seekg(-1, std::ios::end);
                char last = '\n';
                in.get(last);
                torn_tail = last != '\n';
            }
        }
    }
    if (!path_.parent_path().empty()) std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::app);
    if (!out_) throw std::runtime_error("cannot open store for appending: " + path_.string());
    if (torn_tail) {
        out_ << "\n";
        out_.flush();
    }
    if (!existed) {
        nlohmann::ordered_json j;
        j["type"] = "meta";
        j["plan_hash"] = meta.plan_hash;
        j["config_hash"] = meta.config_hash;
        out_ << seal_line(j.dump()) << "\n";
        out_.flush();
    }
}

void ResultStore::append(const TrialRecord& record) {
    const std::string line = seal_line(serialize_record(record));
    std::lock_guard<std::mutex> lock(mutex_);
    out_ << line << "\n";
    out_.flush();
    if (!out_) throw std::runtime_error("store append failed: " + path_.string());
}

ResultStore::LoadResult ResultStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open store: " + path.string());

    LoadResult result;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto payload = unseal_line(line);
        if (!payload) {
            ++result.discarded_lines;
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(*payload);
            if (j.value("type", "") == "meta") {
                StoreMeta meta;
                meta.plan_hash = j.at("plan_hash").get<std::string>();
                meta.config_hash = j.at("config_hash").get<std::string>();
                result.meta = meta;
            } else {
                result.records.push_back(parse_record(*payload));
            }
        } catch (const nlohmann::json::exception&) {
            ++result.discarded_lines;
        }
    }
    return result;
}

}  // namespace pft
