#include "pft/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pft/rng.hpp"
#include "pft/sampler.hpp"

namespace pft {

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& prefix) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) {
            throw std::invalid_argument("unknown config key '" + prefix + key + "'");
        }
    }
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig default_config() {
    RunConfig config;
    const char* env = std::getenv(kOutDirEnvVar);
    config.out_dir = (env && *env) ? env : "pft-out";
    return config;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config " + origin + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config " + origin + " must be a JSON object");

    RunConfig config = default_config();
    reject_unknown_keys(j, {"seed", "out_dir", "synth", "model", "training", "grid"}, "");

    take(j, "seed", config.seed);
    take(j, "out_dir", config.out_dir);

    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        reject_unknown_keys(s, {"dim", "shared_dim", "transfer_strength", "noise_scale"},
                            "synth.");
        take(s, "dim", config.dim);
        take(s, "shared_dim", config.shared_dim);
        take(s, "transfer_strength", config.transfer_strength);
        take(s, "noise_scale", config.noise_scale);
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        reject_unknown_keys(m, {"hidden_dim", "lr", "momentum"}, "model.");
        take(m, "hidden_dim", config.hidden_dim);
        take(m, "lr", config.opt.lr);
        take(m, "momentum", config.opt.momentum);
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        reject_unknown_keys(t,
                            {"prefinetune_max_epochs", "prefinetune_patience",
                             "finetune_max_epochs", "finetune_patience"},
                            "training.");
        take(t, "prefinetune_max_epochs", config.prefinetune_max_epochs);
        take(t, "prefinetune_patience", config.prefinetune_patience);
        take(t, "finetune_max_epochs", config.finetune_max_epochs);
        take(t, "finetune_patience", config.finetune_patience);
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        reject_unknown_keys(g, {"k", "trials", "speakers", "emotions", "parallelism"}, "grid.");
        take(g, "k", config.grid.k_values);
        take(g, "trials", config.grid.trials_per_condition);
        take(g, "speakers", config.grid.speakers);
        take(g, "emotions", config.grid.emotions);
        take(g, "parallelism", config.parallelism);
    }

    validate_config(config);
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

void validate_config(const RunConfig& config) {
    validate_spec(synth_spec_of(config));
    if (config.out_dir.empty()) throw std::invalid_argument("RunConfig.out_dir must not be empty");
    if (config.hidden_dim == 0) throw std::invalid_argument("RunConfig.hidden_dim must be >= 1");
    if (!(config.opt.lr > 0.0)) throw std::invalid_argument("RunConfig.lr must be > 0");
    if (!(config.opt.momentum >= 0.0 && config.opt.momentum < 1.0)) {
        throw std::invalid_argument("RunConfig.momentum must be in [0, 1)");
    }
    if (config.prefinetune_max_epochs == 0) {
        throw std::invalid_argument("RunConfig.prefinetune_max_epochs must be >= 1");
    }
    if (config.prefinetune_patience == 0) {
        throw std::invalid_argument("RunConfig.prefinetune_patience must be >= 1");
    }
    if (config.finetune_max_epochs == 0) {
        throw std::invalid_argument("RunConfig.finetune_max_epochs must be >= 1");
    }
    if (config.finetune_patience == 0) {
        throw std::invalid_argument("RunConfig.finetune_patience must be >= 1");
    }
    if (config.grid.k_values.empty()) throw std::invalid_argument("RunConfig.grid.k must not be empty");
    for (int k : config.grid.k_values) {
        if (!is_valid_k(k)) {
            throw std::invalid_argument("RunConfig.grid.k contains unsupported value " +
                                        std::to_string(k));
        }
    }
    if (config.grid.trials_per_condition < 1) {
        throw std::invalid_argument("RunConfig.grid.trials must be >= 1");
    }
    if (config.parallelism == 0) throw std::invalid_argument("RunConfig.parallelism must be >= 1");
}

std::string serialize_config(const RunConfig& config) {
    nlohmann::ordered_json j;
    j["seed"] = config.seed;
    j["out_dir"] = config.out_dir;
    j["synth"]["dim"] = config.dim;
    j["synth"]["shared_dim"] = config.shared_dim;
    j["synth"]["transfer_strength"] = config.transfer_strength;
    j["synth"]["noise_scale"] = config.noise_scale;
    j["model"]["hidden_dim"] = config.hidden_dim;
    j["model"]["lr"] = config.opt.lr;
    j["model"]["momentum"] = config.opt.momentum;
    j["training"]["prefinetune_max_epochs"] = config.prefinetune_max_epochs;
    j["training"]["prefinetune_patience"] = config.prefinetune_patience;
    j["training"]["finetune_max_epochs"] = config.finetune_max_epochs;
    j["training"]["finetune_patience"] = config.finetune_patience;
    j["grid"]["k"] = config.grid.k_values;
    j["grid"]["trials"] = config.grid.trials_per_condition;
    j["grid"]["speakers"] = config.grid.speakers;
    j["grid"]["emotions"] = config.grid.emotions;
    j["grid"]["parallelism"] = config.parallelism;
    return j.dump(2);
}

std::string config_hash(const RunConfig& config) {
    return hex64(fnv1a64(serialize_config(config)));
}

SynthSpec synth_spec_of(const RunConfig& config) {
    SynthSpec spec;
    spec.dim = config.dim;
    spec.shared_dim = config.shared_dim;
    spec.transfer_strength = config.transfer_strength;
    spec.noise_scale = config.noise_scale;
    spec.seed = config.seed;
    return spec;
}

}  // namespace pft
