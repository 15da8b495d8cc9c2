#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "pft/linalg.hpp"

namespace pft {

enum class Split { Train, Validation, Test };
enum class Language { English, Mandarin };

std::string to_string(Split s);
Split split_from_string(const std::string& s);
std::string to_string(Language l);
Language language_from_string(const std::string& s);

/// Ordered list of label names.
struct LabelSpace {
    std::vector<std::string> names;

    std::size_t size() const { return names.size(); }
    /// Index of a label name; throws if absent.
    std::size_t index_of(const std::string& name) const;
    bool contains(const std::string& name) const;
};

struct Utterance {
    Vector features;
    std::size_t label = 0;
    std::string speaker_id;
    Language language = Language::English;
};

/// Named collection of labeled, speaker-attributed feature vectors with a
/// fixed label space. `split` partitions the utterances (parallel array).
struct Corpus {
    std::string name;
    LabelSpace label_space;
    std::size_t dim = 0;
    std::vector<Utterance> utterances;
    std::vector<Split> split;

    std::vector<std::size_t> indices_of(Split s) const;
    /// Sorted unique speaker ids.
    std::vector<std::string> speakers() const;
};

/// Checks label ranges, split sizes, uniform feature dimension, finiteness,
/// and that every label appears in the train split. Throws on violation.
void validate_corpus(const Corpus& corpus);

/// Corpus-on-disk: a directory holding `manifest` (text: name, labels, dim,
/// per-utterance metadata rows) and `features` (binary: magic, u32 count,
/// u32 dim, row-major little-endian float64).
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

}  // namespace pft
