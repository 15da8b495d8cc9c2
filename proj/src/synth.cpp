#include "pft/synth.hpp"

#include <map>
#include <set>
#include <stdexcept>

#include "pft/rng.hpp"

namespace pft {

namespace {

// Speaker offsets scale with the noise so "noiseless" specs stay degenerate.
constexpr double kSpeakerOffsetFactor = 0.5;
constexpr double kPrototypeScale = 1.8;
constexpr double kPrivateScale = 1.0;

}  // namespace

std::vector<CorpusTemplate> default_corpus_templates() {
    // Label spaces of sizes {4, 9, 5, 9}; prototype sharing mirrors which
    // emotions the corpora have in common (surprise appears in only two).
    return {
        {"msp-improv",
         {{"happy", "happy"}, {"sadness", "sad"}, {"anger", "angry"}, {"neutral", "neutral"}},
         12,
         422,
         Language::English},
        {"msp-podcast",
         {{"anger", "angry"},
          {"happiness", "happy"},
          {"sadness", "sad"},
          {"disgust", "disgust"},
          {"surprised", "surprise"},
          {"fear", "fear"},
          {"contempt", "contempt"},
          {"neutral", "neutral"},
          {"other", "other"}},
         40,
         3107,
         Language::English},
        {"mandarin-as",
         {{"anger", "angry"},
          {"elation", "happy"},
          {"neutral", "neutral"},
          {"panic", "fear"},
          {"sadness", "sad"}},
         68,
         1282,
         Language::Mandarin},
        {"iemocap",
         {{"anger", "angry"},
          {"happiness", "happy"},
          {"excitement", "excitement"},
          {"sadness", "sad"},
          {"frustration", "frustration"},
          {"fear", "fear"},
          {"surprise", "surprise"},
          {"other", "other"},
          {"neutral", "neutral"}},
         10,
         502,
         Language::English},
    };
}

DownstreamTemplate default_downstream_template() {
    DownstreamTemplate t;
    t.labels = {{"Happy", "happy"},
                {"Sad", "sad"},
                {"Surprised", "surprise"},
                {"Angry", "angry"},
                {"Neutral", "neutral"}};
    return t;
}

namespace {

SynthSpec resolved(const SynthSpec& spec) {
    SynthSpec r = spec;
    if (r.corpora.empty()) r.corpora = default_corpus_templates();
    if (r.downstream.labels.empty()) r.downstream = default_downstream_template();
    return r;
}

void fail(const std::string& field, const std::string& why) {
    throw std::invalid_argument("SynthSpec." + field + ": " + why);
}

Vector gaussian_vector(Rng& rng, std::size_t dim, double scale) {
    Vector v(dim);
    for (double& x : v) x = scale * rng.gaussian();
    return v;
}

using PrototypeMap = std::map<std::string, Vector>;

PrototypeMap draw_prototypes(const SynthSpec& spec) {
    std::set<std::string> names;
    for (const auto& tmpl : spec.corpora) {
        for (const auto& l : tmpl.labels) names.insert(l.prototype);
    }
    for (const auto& l : spec.downstream.labels) names.insert(l.prototype);

    Rng rng(derive_seed(spec.seed, "prototypes"));
    PrototypeMap protos;
    for (const auto& name : names) {  // sorted order: independent of template order
        Vector p(spec.dim, 0.0);
        for (std::size_t i = 0; i < spec.shared_dim; ++i) p[i] = kPrototypeScale * rng.gaussian();
        protos.emplace(name, std::move(p));
    }
    return protos;
}

std::vector<Vector> class_means(const SynthSpec& spec, const std::vector<LabelDef>& labels,
                                const PrototypeMap& protos, Rng& rng) {
    std::vector<Vector> means;
    means.reserve(labels.size());
    for (const auto& label : labels) {
        const Vector priv = gaussian_vector(rng, spec.dim, kPrivateScale);
        const Vector& proto = protos.at(label.prototype);
        Vector mean(spec.dim);
        for (std::size_t i = 0; i < spec.dim; ++i) {
            mean[i] = spec.transfer_strength * proto[i] + (1.0 - spec.transfer_strength) * priv[i];
        }
        means.push_back(std::move(mean));
    }
    return means;
}

Corpus generate_pretrain_corpus(const SynthSpec& spec, const CorpusTemplate& tmpl,
                                const PrototypeMap& protos) {
    Rng rng(derive_seed(spec.seed, "corpus/" + tmpl.name));

    Corpus corpus;
    corpus.name = tmpl.name;
    corpus.dim = spec.dim;
    for (const auto& l : tmpl.labels) corpus.label_space.names.push_back(l.name);

    const std::vector<Vector> means = class_means(spec, tmpl.labels, protos, rng);

    std::vector<Vector> speaker_offsets;
    speaker_offsets.reserve(tmpl.n_speakers);
    for (std::size_t s = 0; s < tmpl.n_speakers; ++s) {
        speaker_offsets.push_back(
            gaussian_vector(rng, spec.dim, kSpeakerOffsetFactor * spec.noise_scale));
    }

    const std::size_t n_labels = tmpl.labels.size();
    std::vector<std::size_t> per_label_count(n_labels, 0);
    corpus.utterances.reserve(tmpl.n_utterances);
    corpus.split.reserve(tmpl.n_utterances);
    for (std::size_t u = 0; u < tmpl.n_utterances; ++u) {
        const std::size_t label = u % n_labels;  // balanced by construction
        const std::size_t speaker = rng.below(tmpl.n_speakers);

        Utterance utt;
        utt.label = label;
        utt.speaker_id = tmpl.name + "_s" + std::to_string(speaker);
        utt.language = tmpl.language;
        utt.features.resize(spec.dim);
        for (std::size_t i = 0; i < spec.dim; ++i) {
            utt.features[i] =
                means[label][i] + speaker_offsets[speaker][i] + spec.noise_scale * rng.gaussian();
        }
        corpus.utterances.push_back(std::move(utt));

        // 80/10/10 split, stratified per label
        const std::size_t pos = per_label_count[label]++;
        const std::size_t slot = pos % 10;
        corpus.split.push_back(slot < 8 ? Split::Train
                                        : (slot == 8 ? Split::Validation : Split::Test));
    }
    return corpus;
}

Corpus generate_downstream_corpus(const SynthSpec& spec, const PrototypeMap& protos) {
    const DownstreamTemplate& tmpl = spec.downstream;
    Rng rng(derive_seed(spec.seed, "corpus/" + tmpl.name));

    Corpus corpus;
    corpus.name = tmpl.name;
    corpus.dim = spec.dim;
    for (const auto& l : tmpl.labels) corpus.label_space.names.push_back(l.name);

    const std::vector<Vector> means = class_means(spec, tmpl.labels, protos, rng);

    struct Speaker {
        std::string id;
        Language language;
        Vector offset;
    };
    std::vector<Speaker> speakers;
    for (Language lang : {Language::English, Language::Mandarin}) {
        for (std::size_t s = 0; s < tmpl.speakers_per_language; ++s) {
            const std::string id =
                to_string(lang) + "_" + (s < 10 ? "0" : "") + std::to_string(s);
            speakers.push_back(
                {id, lang, gaussian_vector(rng, spec.dim, kSpeakerOffsetFactor * spec.noise_scale)});
        }
    }

    const std::size_t per_cell = tmpl.train_per_speaker_emotion + tmpl.test_per_speaker_emotion;
    corpus.utterances.reserve(speakers.size() * tmpl.labels.size() * per_cell);
    corpus.split.reserve(corpus.utterances.capacity());
    for (const Speaker& spk : speakers) {
        for (std::size_t label = 0; label < tmpl.labels.size(); ++label) {
            for (std::size_t slot = 0; slot < per_cell; ++slot) {
                Utterance utt;
                utt.label = label;
                utt.speaker_id = spk.id;
                utt.language = spk.language;
                utt.features.resize(spec.dim);
                for (std::size_t i = 0; i < spec.dim; ++i) {
                    utt.features[i] =
                        means[label][i] + spk.offset[i] + spec.noise_scale * rng.gaussian();
                }
                corpus.utterances.push_back(std::move(utt));
                corpus.split.push_back(slot < tmpl.train_per_speaker_emotion ? Split::Train
                                                                             : Split::Test);
            }
        }
    }
    return corpus;
}

}  // namespace

void validate_spec(const SynthSpec& raw) {
    const SynthSpec spec = resolved(raw);
    if (spec.dim == 0) fail("dim", "must be positive");
    if (spec.shared_dim == 0 || spec.shared_dim > spec.dim) {
        fail("shared_dim", "must be in [1, dim]");
    }
    if (!(spec.transfer_strength >= 0.0 && spec.transfer_strength <= 1.0)) {
        fail("transfer_strength", "must be in [0, 1], got " +
                                      std::to_string(spec.transfer_strength));
    }
    if (!(spec.noise_scale >= 0.0)) {
        fail("noise_scale", "must be non-negative, got " + std::to_string(spec.noise_scale));
    }
    std::set<std::string> corpus_names;
    for (const auto& tmpl : spec.corpora) {
        const std::string where = "corpora[" + tmpl.name + "]";
        if (tmpl.name.empty()) fail("corpora", "corpus name must not be empty");
        if (!corpus_names.insert(tmpl.name).second) fail(where, "duplicate corpus name");
        if (tmpl.labels.size() < 2) fail(where + ".labels", "need at least 2 labels");
        if (tmpl.n_speakers == 0) fail(where + ".n_speakers", "must be positive");
        if (tmpl.n_utterances < 10 * tmpl.labels.size()) {
            fail(where + ".n_utterances",
                 "must be at least 10 per label so every split is populated");
        }
    }
    if (spec.downstream.labels.size() < 2) fail("downstream.labels", "need at least 2 labels");
    if (spec.downstream.speakers_per_language == 0) {
        fail("downstream.speakers_per_language", "must be positive");
    }
    if (spec.downstream.train_per_speaker_emotion == 0 ||
        spec.downstream.test_per_speaker_emotion == 0) {
        fail("downstream", "train and test counts per (speaker, emotion) must be positive");
    }
}

CorpusSuite generate_suite(const SynthSpec& raw) {
    validate_spec(raw);
    const SynthSpec spec = resolved(raw);
    const PrototypeMap protos = draw_prototypes(spec);

    CorpusSuite suite;
    suite.pretrain.reserve(spec.corpora.size());
    for (const auto& tmpl : spec.corpora) {
        suite.pretrain.push_back(generate_pretrain_corpus(spec, tmpl, protos));
    }
    suite.downstream = generate_downstream_corpus(spec, protos);
    return suite;
}

}  // namespace pft
