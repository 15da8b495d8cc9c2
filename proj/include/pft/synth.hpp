#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pft/corpus.hpp"

namespace pft {

/// A corpus label tied to a latent emotion prototype. Cross-corpus transfer
/// exists only where prototypes are shared; label indices never align.
struct LabelDef {
    std::string name;
    std::string prototype;
};

struct CorpusTemplate {
    std::string name;
    std::vector<LabelDef> labels;
    std::size_t n_speakers = 1;
    std::size_t n_utterances = 0;
    Language language = Language::English;
};

struct DownstreamTemplate {
    std::string name = "esd";
    std::vector<LabelDef> labels;
    std::size_t speakers_per_language = 10;
    std::size_t train_per_speaker_emotion = 80;
    std::size_t test_per_speaker_emotion = 40;
};

/// Full configuration of the synthetic five-corpus suite. Class means are
/// prototype * transfer_strength + corpus-private offset * (1 -
/// transfer_strength); utterance features add a per-speaker offset and
/// isotropic Gaussian noise.
struct SynthSpec {
    std::size_t dim = 16;
    std::size_t shared_dim = 8;  // prototypes live in the first shared_dim coordinates
    double transfer_strength = 0.9;
    double noise_scale = 1.4;
    std::uint64_t seed = 42;
    std::vector<CorpusTemplate> corpora;      // empty -> default four templates
    DownstreamTemplate downstream;            // labels empty -> default five emotions
};

struct CorpusSuite {
    std::vector<Corpus> pretrain;  // the pre-finetuning corpora, template order
    Corpus downstream;
};

std::vector<CorpusTemplate> default_corpus_templates();
DownstreamTemplate default_downstream_template();

/// Throws std::invalid_argument naming the offending field.
void validate_spec(const SynthSpec& spec);

/// Pure function of the spec: the same spec yields byte-identical corpora.
CorpusSuite generate_suite(const SynthSpec& spec);

}  // namespace pft
