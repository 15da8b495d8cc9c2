#include "pft/sampler.hpp"

#include <algorithm>
#include <stdexcept>

namespace pft {

bool is_valid_k(int k) {
    return std::find(std::begin(kFewShotSizes), std::end(kFewShotSizes), k) !=
           std::end(kFewShotSizes);
}

std::uint64_t trial_seed(std::uint64_t global_seed, int config_id, const std::string& speaker,
                         const std::string& emotion, int k, int trial_index) {
    const std::string canonical = "trial|g=" + std::to_string(global_seed) +
                                  "|j=" + std::to_string(config_id) + "|spk=" + speaker +
                                  "|emo=" + emotion + "|k=" + std::to_string(k) +
                                  "|t=" + std::to_string(trial_index);
    return fnv1a64(canonical);
}

TaskSampleStream::TaskSampleStream(std::vector<std::string> tasks, std::uint64_t seed)
    : tasks_(std::move(tasks)), rng_(seed) {
    if (tasks_.empty()) throw std::invalid_argument("TaskSampleStream: empty task list");
}

const std::string& TaskSampleStream::sample() {
    return tasks_[rng_.below(tasks_.size())];
}

namespace {

/// First n entries of a seeded without-replacement draw (partial
/// Fisher-Yates).
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool, std::size_t n,
                                                  Rng& rng) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

}  // namespace

FewShotSample sample_fewshot(const Corpus& corpus, const FewShotSpec& spec) {
    if (!is_valid_k(spec.k)) {
        throw std::invalid_argument("sample_fewshot: k=" + std::to_string(spec.k) +
                                    " not in {2,4,8,16,24,32,64}");
    }
    if (!corpus.label_space.contains(spec.emotion)) {
        throw std::invalid_argument("sample_fewshot: unknown emotion '" + spec.emotion + "'");
    }
    const std::size_t emotion_label = corpus.label_space.index_of(spec.emotion);

    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    bool speaker_seen = false;
    for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
        const Utterance& u = corpus.utterances[i];
        if (u.speaker_id != spec.speaker_id) continue;
        speaker_seen = true;
        if (corpus.split[i] != Split::Train) continue;
        (u.label == emotion_label ? positives : negatives).push_back(i);
    }
    if (!speaker_seen) {
        throw std::invalid_argument("sample_fewshot: unknown speaker '" + spec.speaker_id + "'");
    }

    const std::size_t half = static_cast<std::size_t>(spec.k) / 2;
    if (positives.size() < half || negatives.size() < half) {
        throw std::runtime_error("sample_fewshot: speaker '" + spec.speaker_id + "' has " +
                                 std::to_string(positives.size()) + " positive / " +
                                 std::to_string(negatives.size()) + " negative train instances, " +
                                 "need " + std::to_string(half) + " of each");
    }

    Rng rng(derive_seed(spec.seed, "fewshot"));
    const auto chosen_pos = draw_without_replacement(std::move(positives), half, rng);
    const auto chosen_neg = draw_without_replacement(std::move(negatives), half, rng);

    FewShotSample sample;
    sample.instances.reserve(spec.k);
    sample.labels.reserve(spec.k);
    for (std::size_t idx : chosen_pos) {
        sample.instances.push_back(corpus.utterances[idx]);
        sample.labels.push_back(1);
        sample.source_indices.push_back(idx);
    }
    for (std::size_t idx : chosen_neg) {
        sample.instances.push_back(corpus.utterances[idx]);
        sample.labels.push_back(0);
        sample.source_indices.push_back(idx);
    }
    return sample;
}

}  // namespace pft
