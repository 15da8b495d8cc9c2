#include "pft/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pft {

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    throw std::logic_error("bad split value");
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "validation") return Split::Validation;
    if (s == "test") return Split::Test;
    throw std::runtime_error("unknown split '" + s + "'");
}

std::string to_string(Language l) {
    return l == Language::English ? "en" : "zh";
}

Language language_from_string(const std::string& s) {
    if (s == "en") return Language::English;
    if (s == "zh") return Language::Mandarin;
    throw std::runtime_error("unknown language '" + s + "'");
}

std::size_t LabelSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw std::invalid_argument("label '" + name + "' not in label space");
}

bool LabelSpace::contains(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<std::size_t> Corpus::indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i] == s) out.push_back(i);
    }
    return out;
}

std::vector<std::string> Corpus::speakers() const {
    std::set<std::string> unique;
    for (const auto& u : utterances) unique.insert(u.speaker_id);
    return {unique.begin(), unique.end()};
}

void validate_corpus(const Corpus& corpus) {
    if (corpus.label_space.size() < 2) {
        throw std::runtime_error("corpus '" + corpus.name + "': needs at least 2 labels");
    }
    std::set<std::string> unique_labels(corpus.label_space.names.begin(),
                                        corpus.label_space.names.end());
    if (unique_labels.size() != corpus.label_space.size()) {
        throw std::runtime_error("corpus '" + corpus.name + "': duplicate label names");
    }
    if (corpus.split.size() != corpus.utterances.size()) {
        throw std::runtime_error("corpus '" + corpus.name + "': split partition covers " +
                                 std::to_string(corpus.split.size()) + " of " +
                                 std::to_string(corpus.utterances.size()) + " utterances");
    }
    std::vector<bool> label_in_train(corpus.label_space.size(), false);
    for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
        const Utterance& u = corpus.utterances[i];
        if (u.label >= corpus.label_space.size()) {
            throw std::runtime_error("corpus '" + corpus.name + "': label out of range at row " +
                                     std::to_string(i));
        }
        if (u.features.size() != corpus.dim) {
            throw std::runtime_error("corpus '" + corpus.name + "': feature dimension " +
                                     std::to_string(u.features.size()) + " != " +
                                     std::to_string(corpus.dim) + " at row " + std::to_string(i));
        }
        ensure_finite(u.features, "features of corpus '" + corpus.name + "'");
        if (corpus.split[i] == Split::Train) label_in_train[u.label] = true;
    }
    for (std::size_t l = 0; l < label_in_train.size(); ++l) {
        if (!label_in_train[l]) {
            throw std::runtime_error("corpus '" + corpus.name + "': label '" +
                                     corpus.label_space.names[l] + "' never appears in train");
        }
    }
}

namespace {

constexpr char kFeatureMagic[8] = {'P', 'F', 'T', 'F', 'E', 'A', 'T', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
    validate_corpus(corpus);
    std::filesystem::create_directories(dir);

    std::ofstream manifest(dir / "manifest");
    if (!manifest) throw std::runtime_error("cannot write manifest in " + dir.string());
    manifest << "corpus " << corpus.name << "\n";
    manifest << "dim " << corpus.dim << "\n";
    manifest << "labels " << corpus.label_space.size() << "\n";
    for (std::size_t i = 0; i < corpus.label_space.size(); ++i) {
        manifest << "label " << i << " " << corpus.label_space.names[i] << "\n";
    }
    manifest << "utterances " << corpus.utterances.size() << "\n";
    manifest << "columns index label split speaker language\n";
    for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
        const Utterance& u = corpus.utterances[i];
        manifest << "u " << i << " " << u.label << " " << to_string(corpus.split[i]) << " "
                 << u.speaker_id << " " << to_string(u.language) << "\n";
    }
    if (!manifest) throw std::runtime_error("write failure on manifest in " + dir.string());

    std::ofstream features(dir / "features", std::ios::binary | std::ios::trunc);
    if (!features) throw std::runtime_error("cannot write features in " + dir.string());
    features.write(kFeatureMagic, sizeof(kFeatureMagic));
    write_u32(features, static_cast<std::uint32_t>(corpus.utterances.size()));
    write_u32(features, static_cast<std::uint32_t>(corpus.dim));
    for (const Utterance& u : corpus.utterances) {
        for (double d : u.features) {
            auto bits = std::bit_cast<std::uint64_t>(d);
            char buf[8];
            for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
            features.write(buf, 8);
        }
    }
    if (!features) throw std::runtime_error("write failure on features in " + dir.string());
}

Corpus load_corpus(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "manifest");
    if (!manifest) throw std::runtime_error("missing manifest in " + dir.string());

    Corpus corpus;
    std::string line;
    std::size_t declared_labels = 0;
    std::size_t declared_utterances = 0;
    std::vector<std::tuple<std::size_t, Split, std::string, Language>> rows;

    while (std::getline(manifest, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string kind;
        ss >> kind;
        if (kind == "corpus") {
            ss >> corpus.name;
        } else if (kind == "dim") {
            ss >> corpus.dim;
        } else if (kind == "labels") {
            ss >> declared_labels;
        } else if (kind == "label") {
            std::size_t idx;
            std::string name;
            ss >> idx >> name;
            if (!ss || idx != corpus.label_space.size()) {
                throw std::runtime_error("malformed manifest: label rows out of order in " +
                                         dir.string());
            }
            corpus.label_space.names.push_back(name);
        } else if (kind == "utterances") {
            ss >> declared_utterances;
        } else if (kind == "columns") {
            // informational
        } else if (kind == "u") {
            std::size_t idx, label;
            std::string split_name, speaker, language;
            ss >> idx >> label >> split_name >> speaker >> language;
            if (!ss || idx != rows.size()) {
                throw std::runtime_error("malformed manifest: utterance rows out of order in " +
                                         dir.string());
            }
            if (label >= declared_labels) {
                throw std::runtime_error("label out of range in manifest (" +
                                         std::to_string(label) + " >= " +
                                         std::to_string(declared_labels) + ") at row " +
                                         std::to_string(idx));
            }
            rows.emplace_back(label, split_from_string(split_name), speaker,
                              language_from_string(language));
        } else {
            throw std::runtime_error("malformed manifest: unknown row kind '" + kind + "' in " +
                                     dir.string());
        }
    }
    if (corpus.label_space.size() != declared_labels) {
        throw std::runtime_error("manifest declares " + std::to_string(declared_labels) +
                                 " labels but lists " + std::to_string(corpus.label_space.size()));
    }
    if (rows.size() != declared_utterances) {
        throw std::runtime_error("manifest declares " + std::to_string(declared_utterances) +
                                 " utterances but lists " + std::to_string(rows.size()));
    }

    std::ifstream features(dir / "features", std::ios::binary);
    if (!features) throw std::runtime_error("missing features file in " + dir.string());
    char magic[8];
    features.read(magic, sizeof(magic));
    if (!features || std::memcmp(magic, kFeatureMagic, sizeof(kFeatureMagic)) != 0) {
        throw std::runtime_error("bad magic in features file of " + dir.string());
    }
    const std::uint32_t count = read_u32(features);
    const std::uint32_t dim = read_u32(features);
    if (count != rows.size() || dim != corpus.dim) {
        throw std::runtime_error("features header (" + std::to_string(count) + " x " +
                                 std::to_string(dim) + ") inconsistent with manifest (" +
                                 std::to_string(rows.size()) + " x " +
                                 std::to_string(corpus.dim) + ")");
    }

    corpus.utterances.reserve(rows.size());
    corpus.split.reserve(rows.size());
    std::vector<char> raw(static_cast<std::size_t>(dim) * 8);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        features.read(raw.data(), static_cast<std::streamsize>(raw.size()));
        if (features.gcount() != static_cast<std::streamsize>(raw.size())) {
            throw std::runtime_error("features file truncated: expected " +
                                     std::to_string(rows.size()) + " rows, found " +
                                     std::to_string(i) + " complete rows");
        }
        Utterance u;
        u.features.resize(dim);
        for (std::size_t c = 0; c < dim; ++c) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) {
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[c * 8 + b]))
                        << (8 * b);
            }
            u.features[c] = std::bit_cast<double>(bits);
        }
        const auto& [label, split, speaker, language] = rows[i];
        u.label = label;
        u.speaker_id = speaker;
        u.language = language;
        corpus.utterances.push_back(std::move(u));
        corpus.split.push_back(split);
    }
    // trailing bytes mean the file disagrees with the manifest
    char extra;
    if (features.read(&extra, 1)) {
        throw std::runtime_error("features file has trailing data: expected exactly " +
                                 std::to_string(rows.size()) + " rows");
    }

    validate_corpus(corpus);
    return corpus;
}

}  // namespace pft
