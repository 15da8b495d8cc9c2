#include "pft/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "pft/metrics.hpp"
#include "pft/rng.hpp"
#include "pft/sampler.hpp"

namespace pft {

bool ConfigSubset::contains(const std::string& name) const {
    return std::find(corpora.begin(), corpora.end(), name) != corpora.end();
}

std::vector<ConfigSubset> enumerate_powerset(const std::vector<std::string>& corpus_names) {
    std::vector<std::string> names = corpus_names;
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
        throw std::invalid_argument("duplicate corpus name in power set input");
    }
    if (names.size() > 20) {
        throw std::invalid_argument("power set over " + std::to_string(names.size()) +
                                    " corpora is not sensible");
    }

    const std::size_t m = names.size();
    std::vector<ConfigSubset> subsets;
    subsets.reserve(std::size_t{1} << m);
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
        ConfigSubset subset;
        for (std::size_t i = 0; i < m; ++i) {
            if (mask & (std::size_t{1} << i)) subset.corpora.push_back(names[i]);
        }
        subsets.push_back(std::move(subset));
    }
    std::sort(subsets.begin(), subsets.end(), [](const ConfigSubset& a, const ConfigSubset& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a.corpora < b.corpora;
    });
    for (std::size_t i = 0; i < subsets.size(); ++i) subsets[i].config_id = static_cast<int>(i + 1);
    return subsets;
}

namespace {

void require_unique(const std::vector<std::string>& values, const std::string& what) {
    std::set<std::string> seen(values.begin(), values.end());
    if (seen.size() != values.size()) throw std::invalid_argument("duplicate " + what + " in grid");
}

}  // namespace

std::string plan_hash_of(const std::vector<TrialSpec>& trials) {
    std::string canon;
    canon.reserve(trials.size() * 64);
    for (const auto& t : trials) {
        canon += std::to_string(t.config_id);
        canon += '|';
        canon += t.speaker;
        canon += '|';
        canon += t.emotion;
        canon += '|';
        canon += std::to_string(t.k);
        canon += '|';
        canon += std::to_string(t.trial_index);
        canon += '|';
        canon += std::to_string(t.seed);
        canon += '\n';
    }
    return hex64(fnv1a64(canon));
}

GridPlan plan_grid(const std::vector<ConfigSubset>& configs, const Corpus& downstream,
                   const GridDims& dims, std::uint64_t global_seed) {
    if (configs.empty()) throw std::invalid_argument("grid has no configs");
    {
        std::set<int> ids;
        for (const auto& c : configs) {
            if (!ids.insert(c.config_id).second) {
                throw std::invalid_argument("duplicate config_id " +
                                            std::to_string(c.config_id) + " in grid");
            }
        }
    }
    if (dims.k_values.empty()) throw std::invalid_argument("grid has no k values");
    require_unique(dims.speakers, "speaker");
    require_unique(dims.emotions, "emotion");
    for (int k : dims.k_values) {
        if (!is_valid_k(k)) throw std::invalid_argument("k=" + std::to_string(k) +
                                                        " is not a supported few-shot size");
    }
    if (std::set<int>(dims.k_values.begin(), dims.k_values.end()).size() != dims.k_values.size()) {
        throw std::invalid_argument("duplicate k in grid");
    }
    if (dims.trials_per_condition < 1) throw std::invalid_argument("trials_per_condition must be >= 1");

    const std::vector<std::string> all_speakers = downstream.speakers();
    std::vector<std::string> speakers = dims.speakers.empty() ? all_speakers : dims.speakers;
    for (const auto& s : speakers) {
        if (std::find(all_speakers.begin(), all_speakers.end(), s) == all_speakers.end()) {
            throw std::invalid_argument("speaker '" + s + "' not present in corpus '" +
                                        downstream.name + "'");
        }
    }
    std::vector<std::string> emotions =
        dims.emotions.empty() ? downstream.label_space.names : dims.emotions;
    for (const auto& e : emotions) {
        if (!downstream.label_space.contains(e)) {
            throw std::invalid_argument("emotion '" + e + "' not present in corpus '" +
                                        downstream.name + "'");
        }
    }
    if (speakers.empty()) throw std::invalid_argument("grid has no speakers");
    if (emotions.empty()) throw std::invalid_argument("grid has no emotions");

    GridPlan plan;
    plan.trials.reserve(configs.size() * speakers.size() * emotions.size() *
                        dims.k_values.size() * static_cast<std::size_t>(dims.trials_per_condition));
    for (const auto& config : configs) {
        for (const auto& speaker : speakers) {
            for (const auto& emotion : emotions) {
                for (int k : dims.k_values) {
                    for (int t = 0; t < dims.trials_per_condition; ++t) {
                        TrialSpec spec;
                        spec.config_id = config.config_id;
                        spec.speaker = speaker;
                        spec.emotion = emotion;
                        spec.k = k;
                        spec.trial_index = t;
                        spec.seed = trial_seed(global_seed, config.config_id, speaker, emotion, k, t);
                        plan.trials.push_back(std::move(spec));
                    }
                }
            }
        }
    }
    plan.plan_hash = plan_hash_of(plan.trials);
    return plan;
}

void save_plan(const GridPlan& plan, const std::filesystem::path& path) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write plan: " + path.string());
    nlohmann::ordered_json meta;
    meta["type"] = "meta";
    meta["plan_hash"] = plan.plan_hash;
    meta["trials"] = plan.trials.size();
    out << seal_line(meta.dump()) << "\n";
    for (const auto& spec : plan.trials) {
        out << seal_line(serialize_trial_spec(spec)) << "\n";
    }
    if (!out) throw std::runtime_error("plan write failed: " + path.string());
}

GridPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open plan: " + path.string());

    GridPlan plan;
    std::string stated_hash;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto payload = unseal_line(line);
        if (!payload) {
            throw std::runtime_error("plan line " + std::to_string(line_no) +
                                     " is corrupt: " + path.string());
        }
        const auto j = nlohmann::json::parse(*payload);
        if (j.value("type", "") == "meta") {
            stated_hash = j.at("plan_hash").get<std::string>();
        } else {
            plan.trials.push_back(parse_trial_spec(*payload));
        }
    }
    if (stated_hash.empty()) throw std::runtime_error("plan has no meta line: " + path.string());
    plan.plan_hash = plan_hash_of(plan.trials);
    if (plan.plan_hash != stated_hash) {
        throw std::runtime_error("plan hash mismatch in " + path.string() + ": stated " +
                                 stated_hash + ", recomputed " + plan.plan_hash);
    }
    return plan;
}

void save_manifest(const CheckpointManifest& manifest, const std::filesystem::path& path) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    nlohmann::ordered_json j;
    j["format"] = 1;
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& entry : manifest.entries) {
        nlohmann::ordered_json e;
        e["config_id"] = entry.config_id;
        e["corpora"] = entry.corpora;
        e["checkpoint"] = entry.checkpoint_path;
        j["entries"].push_back(std::move(e));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("manifest write failed: " + path.string());
}

CheckpointManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("manifest is not valid: " + path.string() + ": " + e.what());
    }
    CheckpointManifest manifest;
    for (const auto& e : j.at("entries")) {
        CheckpointManifest::Entry entry;
        entry.config_id = e.at("config_id").get<int>();
        entry.corpora = e.at("corpora").get<std::vector<std::string>>();
        entry.checkpoint_path = e.at("checkpoint").get<std::string>();
        manifest.entries.push_back(std::move(entry));
    }
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const auto& a, const auto& b) { return a.config_id < b.config_id; });
    return manifest;
}

namespace {

struct TestEval {
    F1Report report;
    double baseline_f1 = 0.0;
};

TestEval evaluate_on_test_split(const ModelState& model, const Corpus& downstream,
                                const std::string& speaker, const std::string& emotion) {
    const std::size_t positive_label = downstream.label_space.index_of(emotion);
    std::vector<int> predictions;
    std::vector<int> truths;
    for (std::size_t i = 0; i < downstream.utterances.size(); ++i) {
        if (downstream.split[i] != Split::Test) continue;
        const auto& u = downstream.utterances[i];
        if (u.speaker_id != speaker) continue;
        const Vector logits = forward(model, kBinaryHeadId, u.features);
        predictions.push_back(static_cast<int>(argmax(logits)));
        truths.push_back(u.label == positive_label ? 1 : 0);
    }
    if (truths.empty()) {
        throw std::runtime_error("speaker '" + speaker + "' has no test instances in corpus '" +
                                 downstream.name + "'");
    }
    TestEval eval;
    eval.report = macro_f1(predictions, truths);
    eval.baseline_f1 = constant_baseline(truths);
    return eval;
}

}  // namespace

TrialRecord run_trial(const TrialSpec& spec, const ModelState& base, const Corpus& downstream,
                      const RunGridOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    TrialRecord record;
    record.spec = spec;
    try {
        FewShotSpec few_shot;
        few_shot.speaker_id = spec.speaker;
        few_shot.emotion = spec.emotion;
        few_shot.k = spec.k;
        few_shot.trial_index = spec.trial_index;
        few_shot.seed = spec.seed;
        const FewShotSample sample = sample_fewshot(downstream, few_shot);

        FinetuneSpec ft;
        ft.few_shot = few_shot;
        ft.max_epochs = options.max_epochs;
        ft.patience = options.patience;
        ft.opt = options.opt;
        const TrainResult result = finetune(base, sample, ft);

        const TestEval eval =
            evaluate_on_test_split(result.model, downstream, spec.speaker, spec.emotion);

        record.status = "ok";
        record.macro_f1 = eval.report.macro_f1;
        record.f1_class0 = eval.report.per_class_f1[0];
        record.f1_class1 = eval.report.per_class_f1[1];
        record.baseline_f1 = eval.baseline_f1;
        record.epochs = result.state.epochs_run;
    } catch (const std::exception& e) {
        record.status = "failed";
        record.error = e.what();
    }
    const auto end = std::chrono::steady_clock::now();
    record.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
    return record;
}

RunGridStats run_grid(const GridPlan& plan, const std::map<int, ModelState>& checkpoints,
                      const Corpus& downstream, const std::filesystem::path& store_path,
                      const std::string& config_hash, const RunGridOptions& options) {
    if (options.parallelism == 0) throw std::invalid_argument("parallelism must be >= 1");
    for (const auto& spec : plan.trials) {
        if (!checkpoints.count(spec.config_id)) {
            throw std::runtime_error("missing checkpoint for config_id " +
                                     std::to_string(spec.config_id));
        }
    }

    std::set<TrialSpec> recorded;
    if (std::filesystem::exists(store_path)) {
        const auto prior = ResultStore::load(store_path);
        for (const auto& r : prior.records) recorded.insert(r.spec);
    }

    StoreMeta meta;
    meta.plan_hash = plan.plan_hash;
    meta.config_hash = config_hash;
    ResultStore store(store_path, meta);

    std::vector<const TrialSpec*> pending;
    pending.reserve(plan.trials.size());
    for (const auto& spec : plan.trials) {
        if (!recorded.count(spec)) pending.push_back(&spec);
    }
    RunGridStats stats;
    stats.skipped = plan.trials.size() - pending.size();
    if (options.max_trials > 0 && pending.size() > options.max_trials) {
        pending.resize(options.max_trials);
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> failed{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        try {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= pending.size()) break;
                const TrialRecord record =
                    run_trial(*pending[i], checkpoints.at(pending[i]->config_id), downstream,
                              options);
                if (!record.ok()) failed.fetch_add(1);
                store.append(record);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    const std::size_t n_workers = std::min<std::size_t>(options.parallelism, pending.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    stats.executed = pending.size();
    stats.failed = failed.load();
    return stats;
}

}  // namespace pft
