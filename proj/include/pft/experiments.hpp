#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pft/corpus.hpp"
#include "pft/store.hpp"
#include "pft/training.hpp"

namespace pft {

/// One pre-finetuning configuration: a subset of the registered corpora.
/// config_id 1 is the empty set (the no-pre-finetuning baseline).
struct ConfigSubset {
    int config_id = 0;
    std::vector<std::string> corpora;  // sorted

    std::size_t size() const { return corpora.size(); }
    bool contains(const std::string& name) const;
};

/// All 2^m subsets of the given corpus names, ordered by subset size and then
/// lexically within a size, with config_ids 1..2^m in that order.
std::vector<ConfigSubset> enumerate_powerset(const std::vector<std::string>& corpus_names);

struct GridDims {
    std::vector<int> k_values = {2, 4, 8, 16, 24, 32, 64};
    int trials_per_condition = 3;
    std::vector<std::string> speakers;  // empty = every speaker in the corpus
    std::vector<std::string> emotions;  // empty = every emotion
};

struct GridPlan {
    std::vector<TrialSpec> trials;
    std::string plan_hash;
};

/// Full cross product configs x speakers x emotions x K x trials. Each trial
/// gets its own seed derived from `global_seed` and the trial coordinates.
GridPlan plan_grid(const std::vector<ConfigSubset>& configs, const Corpus& downstream,
                   const GridDims& dims, std::uint64_t global_seed);

/// Recomputes the hash from the trial list; plans with identical trials hash
/// identically regardless of how they were produced.
std::string plan_hash_of(const std::vector<TrialSpec>& trials);

void save_plan(const GridPlan& plan, const std::filesystem::path& path);
GridPlan load_plan(const std::filesystem::path& path);

/// Written by the prefinetune command, consumed by grid run.
struct CheckpointManifest {
    struct Entry {
        int config_id = 0;
        std::vector<std::string> corpora;
        std::string checkpoint_path;
    };
    std::vector<Entry> entries;  // ordered by config_id
};

void save_manifest(const CheckpointManifest& manifest, const std::filesystem::path& path);
CheckpointManifest load_manifest(const std::filesystem::path& path);

struct RunGridOptions {
    std::size_t parallelism = 1;
    OptimizerConfig opt;
    std::size_t max_epochs = 200;
    std::size_t patience = 30;
    /// When nonzero, stop after executing this many pending trials (the store
    /// stays valid and a later run picks up the rest). Used to exercise
    /// interrupted runs.
    std::size_t max_trials = 0;
};

struct RunGridStats {
    std::size_t executed = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
};

/// Runs one trial end to end: sample the few-shot set, fine-tune from the
/// config's checkpoint, evaluate on the speaker's full test split against the
/// binary target emotion. Failures come back as status=failed records.
TrialRecord run_trial(const TrialSpec& spec, const ModelState& base, const Corpus& downstream,
                      const RunGridOptions& options);

/// Executes every not-yet-recorded trial of the plan, appending to the store
/// at `store_path` (created if absent, resumed if present). `checkpoints`
/// maps config_id to its pre-finetuned model; every config in the plan must
/// be present. The record set is independent of parallelism.
RunGridStats run_grid(const GridPlan& plan, const std::map<int, ModelState>& checkpoints,
                      const Corpus& downstream, const std::filesystem::path& store_path,
                      const std::string& config_hash, const RunGridOptions& options);

}  // namespace pft
