#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pft/corpus.hpp"
#include "pft/rng.hpp"

namespace pft {

/// One downstream trial's sampling configuration. `seed` is the trial seed
/// derived by trial_seed().
struct FewShotSpec {
    std::string speaker_id;
    std::string emotion;
    int k = 2;
    int trial_index = 0;
    std::uint64_t seed = 0;
};

constexpr int kFewShotSizes[] = {2, 4, 8, 16, 24, 32, 64};

bool is_valid_k(int k);

/// Stable per-trial seed from the run's global seed and the trial
/// coordinates. Every trial is independently reproducible from this value,
/// with no coordination between workers.
std::uint64_t trial_seed(std::uint64_t global_seed, int config_id, const std::string& speaker,
                         const std::string& emotion, int k, int trial_index);

/// Uniform task sampling; the stream is deterministic given its seed.
class TaskSampleStream {
  public:
    TaskSampleStream(std::vector<std::string> tasks, std::uint64_t seed);

    const std::string& sample();
    std::size_t task_count() const { return tasks_.size(); }

  private:
    std::vector<std::string> tasks_;
    Rng rng_;
};

struct FewShotSample {
    std::vector<Utterance> instances;
    std::vector<int> labels;                  // 1 = matches the target emotion
    std::vector<std::size_t> source_indices;  // rows in the source corpus
};

/// Exactly k/2 positives and k/2 negatives from the speaker's train pool,
/// without replacement, never touching the test split. Negatives are drawn
/// uniformly over all non-matching emotions pooled.
FewShotSample sample_fewshot(const Corpus& corpus, const FewShotSpec& spec);

}  // namespace pft
