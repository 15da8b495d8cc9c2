#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pft/analysis.hpp"
#include "pft/checkpoint.hpp"
#include "pft/config.hpp"
#include "pft/corpus.hpp"
#include "pft/experiments.hpp"
#include "pft/rng.hpp"
#include "pft/sampler.hpp"
#include "pft/store.hpp"
#include "pft/synth.hpp"
#include "pft/training.hpp"

namespace fs = std::filesystem;

namespace {

struct Paths {
    fs::path data;
    fs::path checkpoints;
    fs::path manifest;
    fs::path plan;
    fs::path store;
    fs::path report;
};

Paths paths_of(const pft::RunConfig& config) {
    const fs::path root(config.out_dir);
    Paths p;
    p.data = root / "data";
    p.checkpoints = root / "checkpoints";
    p.manifest = p.checkpoints / "manifest.json";
    p.plan = root / "grid" / "plan.jsonl";
    p.store = root / "grid" / "results.jsonl";
    p.report = root / "report";
    return p;
}

std::vector<std::string> pretrain_corpus_names() {
    std::vector<std::string> names;
    for (const auto& t : pft::default_corpus_templates()) names.push_back(t.name);
    return names;
}

std::string checkpoint_filename(int config_id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "config_%02d.ckpt", config_id);
    return buf;
}

pft::Corpus load_downstream(const Paths& paths) {
    const fs::path dir = paths.data / pft::default_downstream_template().name;
    if (!fs::exists(dir)) {
        throw std::runtime_error("no downstream corpus at " + dir.string() +
                                 "; run `pft gen-data` first");
    }
    return pft::load_corpus(dir);
}

std::string subset_label(const pft::ConfigSubset& subset) {
    if (subset.corpora.empty()) return "(none)";
    std::string out;
    for (const auto& name : subset.corpora) {
        if (!out.empty()) out += "+";
        out += name;
    }
    return out;
}

void cmd_gen_data(const pft::RunConfig& config, bool force) {
    const Paths paths = paths_of(config);
    if (fs::exists(paths.data) && !fs::is_empty(paths.data) && !force) {
        throw std::runtime_error("output directory " + paths.data.string() +
                                 " already contains data; pass --force to regenerate");
    }
    const pft::SynthSpec spec = pft::synth_spec_of(config);
    const pft::CorpusSuite suite = pft::generate_suite(spec);

    const auto summarize = [&](const pft::Corpus& corpus) {
        pft::save_corpus(corpus, paths.data / corpus.name);
        const auto train = corpus.indices_of(pft::Split::Train).size();
        const auto val = corpus.indices_of(pft::Split::Validation).size();
        const auto test = corpus.indices_of(pft::Split::Test).size();
        std::cout << "corpus " << corpus.name << ": " << corpus.label_space.size() << " labels, "
                  << corpus.speakers().size() << " speakers, " << corpus.utterances.size()
                  << " utterances (train " << train << " / validation " << val << " / test "
                  << test << ") -> " << (paths.data / corpus.name).string() << "\n";
    };
    for (const auto& corpus : suite.pretrain) summarize(corpus);
    summarize(suite.downstream);
}

void cmd_prefinetune(const pft::RunConfig& config) {
    const Paths paths = paths_of(config);
    const std::vector<std::string> names = pretrain_corpus_names();

    std::map<std::string, pft::Corpus> corpora;
    for (const auto& name : names) {
        const fs::path dir = paths.data / name;
        if (!fs::exists(dir)) {
            throw std::runtime_error("missing corpus " + dir.string() +
                                     "; run `pft gen-data` first");
        }
        corpora.emplace(name, pft::load_corpus(dir));
    }

    const auto subsets = pft::enumerate_powerset(names);
    const std::string hash = pft::config_hash(config);
    pft::CheckpointManifest manifest;
    std::size_t trained = 0;
    for (const auto& subset : subsets) {
        const fs::path ckpt = paths.checkpoints / checkpoint_filename(subset.config_id);
        pft::CheckpointManifest::Entry entry;
        entry.config_id = subset.config_id;
        entry.corpora = subset.corpora;
        entry.checkpoint_path = ckpt.string();
        manifest.entries.push_back(std::move(entry));

        if (fs::exists(ckpt)) {
            std::cout << "config " << subset.config_id << " " << subset_label(subset)
                      << ": exists, skipped -> " << ckpt.string() << "\n";
            continue;
        }

        pft::PrefinetuneSpec spec;
        spec.corpus_set = subset.corpora;
        spec.config_id = subset.config_id;
        spec.input_dim = config.dim;
        spec.hidden_dim = config.hidden_dim;
        spec.max_epochs = config.prefinetune_max_epochs;
        spec.patience = config.prefinetune_patience;
        spec.opt = config.opt;
        spec.seed = pft::derive_seed(config.seed, "prefinetune");

        std::vector<const pft::Corpus*> selected;
        for (const auto& name : subset.corpora) selected.push_back(&corpora.at(name));

        const pft::TrainResult result = pft::prefinetune(spec, selected);
        pft::CheckpointMeta meta;
        meta.seed = spec.seed;
        meta.config_hash = hash;
        pft::save_checkpoint(ckpt, result.model, meta);
        ++trained;
        std::cout << "config " << subset.config_id << " " << subset_label(subset) << ": "
                  << result.state.epochs_run << " epochs (best "
                  << result.state.best_epoch << ") -> " << ckpt.string() << "\n";
    }
    pft::save_manifest(manifest, paths.manifest);
    std::cout << "checkpoints: " << subsets.size() << " (" << trained << " trained this run)\n";
    std::cout << "manifest: " << paths.manifest.string() << "\n";
}

pft::RunGridOptions grid_options(const pft::RunConfig& config, std::size_t max_trials) {
    pft::RunGridOptions options;
    options.parallelism = config.parallelism;
    options.opt = config.opt;
    options.max_epochs = config.finetune_max_epochs;
    options.patience = config.finetune_patience;
    options.max_trials = max_trials;
    return options;
}

void cmd_finetune(const pft::RunConfig& config, const std::string& speaker,
                  const std::string& emotion, int k, int trial, int config_id) {
    const Paths paths = paths_of(config);
    const pft::Corpus downstream = load_downstream(paths);
    if (!fs::exists(paths.manifest)) {
        throw std::runtime_error("no checkpoint manifest at " + paths.manifest.string() +
                                 "; run `pft prefinetune` first");
    }
    const auto manifest = pft::load_manifest(paths.manifest);
    if (config_id == 0) config_id = manifest.entries.back().config_id;  // full set

    const pft::CheckpointManifest::Entry* entry = nullptr;
    for (const auto& e : manifest.entries) {
        if (e.config_id == config_id) entry = &e;
    }
    if (!entry) {
        throw std::runtime_error("config_id " + std::to_string(config_id) +
                                 " not in manifest " + paths.manifest.string());
    }
    const pft::Checkpoint checkpoint = pft::load_checkpoint(entry->checkpoint_path);

    pft::TrialSpec spec;
    spec.config_id = config_id;
    spec.speaker = speaker;
    spec.emotion = emotion;
    spec.k = k;
    spec.trial_index = trial;
    spec.seed = pft::trial_seed(config.seed, config_id, speaker, emotion, k, trial);

    const pft::TrialRecord record =
        pft::run_trial(spec, checkpoint.model, downstream, grid_options(config, 0));
    std::cout << pft::serialize_record(record) << "\n";
    if (!record.ok()) throw std::runtime_error("trial failed: " + record.error);
}

void cmd_grid_plan(const pft::RunConfig& config) {
    const Paths paths = paths_of(config);
    const pft::Corpus downstream = load_downstream(paths);
    const auto subsets = pft::enumerate_powerset(pretrain_corpus_names());
    const pft::GridPlan plan = pft::plan_grid(subsets, downstream, config.grid, config.seed);
    pft::save_plan(plan, paths.plan);
    std::cout << "trials: " << plan.trials.size() << "\n";
    std::cout << "plan hash: " << plan.plan_hash << "\n";
    std::cout << "plan: " << paths.plan.string() << "\n";
}

void cmd_grid_run(const pft::RunConfig& config, std::size_t max_trials) {
    const Paths paths = paths_of(config);
    if (!fs::exists(paths.plan)) {
        throw std::runtime_error("no plan at " + paths.plan.string() +
                                 "; run `pft grid plan` first");
    }
    const pft::GridPlan plan = pft::load_plan(paths.plan);
    if (!fs::exists(paths.manifest)) {
        throw std::runtime_error("no checkpoint manifest at " + paths.manifest.string() +
                                 "; run `pft prefinetune` first");
    }
    const auto manifest = pft::load_manifest(paths.manifest);
    const pft::Corpus downstream = load_downstream(paths);

    std::map<int, pft::ModelState> checkpoints;
    for (const auto& entry : manifest.entries) {
        if (!fs::exists(entry.checkpoint_path)) {
            throw std::runtime_error("missing checkpoint " + entry.checkpoint_path +
                                     "; run `pft prefinetune` first");
        }
        checkpoints.emplace(entry.config_id, pft::load_checkpoint(entry.checkpoint_path).model);
    }

    const pft::RunGridStats stats = pft::run_grid(plan, checkpoints, downstream, paths.store,
                                                  pft::config_hash(config),
                                                  grid_options(config, max_trials));
    std::cout << "executed: " << stats.executed << " (failed " << stats.failed << ", skipped "
              << stats.skipped << " already recorded)\n";
    std::cout << "store: " << paths.store.string() << "\n";
}

void cmd_grid_report(const pft::RunConfig& config, bool by_record) {
    const Paths paths = paths_of(config);
    if (!fs::exists(paths.store)) {
        throw std::runtime_error("no results store at " + paths.store.string() +
                                 "; run `pft grid run` first");
    }
    const auto loaded = pft::ResultStore::load(paths.store);
    std::size_t ok = 0;
    std::size_t failed = 0;
    for (const auto& r : loaded.records) (r.ok() ? ok : failed)++;
    if (ok == 0) throw std::runtime_error("no ok records in " + paths.store.string());
    if (loaded.discarded_lines > 0) {
        std::cerr << "warning: discarded " << loaded.discarded_lines << " corrupt store lines\n";
    }

    const pft::Corpus downstream = load_downstream(paths);
    const auto subsets = pft::enumerate_powerset(pretrain_corpus_names());
    const auto weighting =
        by_record ? pft::CellWeighting::ByRecord : pft::CellWeighting::ByCell;

    pft::CurvesResult curves;
    std::vector<pft::ContributionRow> contributions;
    std::vector<pft::InclusionExclusionRow> incl_excl;
    pft::StratifiedResult stratified;

    const auto attempt = [](const char* what, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << what << ": " << e.what() << "\n";
        }
    };
    attempt("curves", [&] { curves = pft::n_corpora_curves(loaded.records, subsets); });
    attempt("contributions",
            [&] { contributions = pft::corpus_contributions(loaded.records, subsets, weighting); });
    attempt("inclusion/exclusion",
            [&] { incl_excl = pft::inclusion_exclusion(loaded.records, subsets, weighting); });
    attempt("stratified curves",
            [&] { stratified = pft::stratified_curves(loaded.records, subsets, downstream); });

    const auto emit = [](const char* what, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << what << ": " << e.what() << "\n";
        }
    };
    emit("curves.csv", [&] {
        pft::write_curves_csv(curves.points, paths.report / "curves.csv");
        std::cout << "report: " << (paths.report / "curves.csv").string() << "\n";
    });
    emit("contributions.csv", [&] {
        pft::write_contributions_csv(contributions, paths.report / "contributions.csv");
        std::cout << "report: " << (paths.report / "contributions.csv").string() << "\n";
    });
    emit("incl_excl.csv", [&] {
        pft::write_incl_excl_csv(incl_excl, paths.report / "incl_excl.csv");
        std::cout << "report: " << (paths.report / "incl_excl.csv").string() << "\n";
    });
    emit("stratified.csv", [&] {
        pft::write_stratified_csv(stratified.points, paths.report / "stratified.csv");
        std::cout << "report: " << (paths.report / "stratified.csv").string() << "\n";
    });
    pft::write_summary_markdown(curves, contributions, incl_excl, stratified, ok, failed,
                                paths.report / "summary.md");
    std::cout << "report: " << (paths.report / "summary.md").string() << "\n";
    for (const auto& w : curves.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& w : stratified.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-task pre-finetuning and few-shot adaptation workbench"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file;
    app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);

    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "global seed");
    std::string out_dir;
    auto* out_opt = app.add_option("--out", out_dir, "output root directory");
    std::size_t parallelism = 0;
    auto* par_opt = app.add_option("--parallelism", parallelism, "worker threads for grid run");
    double noise_scale = 0.0;
    auto* noise_opt = app.add_option("--noise-scale", noise_scale, "synthetic feature noise");
    double transfer_strength = 0.0;
    auto* transfer_opt =
        app.add_option("--transfer-strength", transfer_strength, "shared-prototype weight");
    std::vector<int> k_values;
    auto* k_opt = app.add_option("--k", k_values, "few-shot sizes")->delimiter(',');
    int trials = 0;
    auto* trials_opt = app.add_option("--trials", trials, "trials per condition");
    std::vector<std::string> speakers;
    auto* speakers_opt =
        app.add_option("--speakers", speakers, "restrict grid to these speakers")->delimiter(',');
    std::vector<std::string> emotions;
    auto* emotions_opt =
        app.add_option("--emotions", emotions, "restrict grid to these emotions")->delimiter(',');

    const auto resolve = [&]() {
        pft::RunConfig config =
            config_file.empty() ? pft::default_config() : pft::load_config(config_file);
        if (seed_opt->count()) config.seed = seed;
        if (out_opt->count()) config.out_dir = out_dir;
        if (par_opt->count()) config.parallelism = parallelism;
        if (noise_opt->count()) config.noise_scale = noise_scale;
        if (transfer_opt->count()) config.transfer_strength = transfer_strength;
        if (k_opt->count()) config.grid.k_values = k_values;
        if (trials_opt->count()) config.grid.trials_per_condition = trials;
        if (speakers_opt->count()) config.grid.speakers = speakers;
        if (emotions_opt->count()) config.grid.emotions = emotions;
        pft::validate_config(config);
        std::cout << "config hash: " << pft::config_hash(config) << "\n";
        return config;
    };

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate the synthetic corpus suite");
    bool force = false;
    gen->add_flag("--force", force, "overwrite existing corpora");
    gen->callback([&] { cmd_gen_data(resolve(), force); });

    // prefinetune
    auto* pre = app.add_subcommand("prefinetune", "train one checkpoint per corpus subset");
    pre->callback([&] { cmd_prefinetune(resolve()); });

    // finetune (single trial)
    auto* fine = app.add_subcommand("finetune", "run one few-shot trial");
    std::string speaker;
    std::string emotion;
    int k = 2;
    int trial_index = 0;
    int config_id = 0;
    fine->add_option("--speaker", speaker, "downstream speaker id")->required();
    fine->add_option("--emotion", emotion, "target emotion")->required();
    fine->add_option("--k-shot", k, "few-shot size");
    fine->add_option("--trial", trial_index, "trial index");
    fine->add_option("--config-id", config_id, "checkpoint config (default: full set)");
    fine->callback(
        [&] { cmd_finetune(resolve(), speaker, emotion, k, trial_index, config_id); });

    // grid
    auto* grid = app.add_subcommand("grid", "plan, run and report the trial grid");
    grid->require_subcommand(1);
    grid->fallthrough();

    auto* plan = grid->add_subcommand("plan", "write the trial plan");
    plan->callback([&] { cmd_grid_plan(resolve()); });

    auto* run = grid->add_subcommand("run", "execute pending trials");
    std::size_t max_trials = 0;
    run->add_option("--max-trials", max_trials, "stop after this many trials (0 = all)");
    run->callback([&] { cmd_grid_run(resolve(), max_trials); });

    auto* report = grid->add_subcommand("report", "aggregate the store into CSV and markdown");
    bool by_record = false;
    report->add_flag("--by-record", by_record, "weight cells by record count");
    report->callback([&] { cmd_grid_report(resolve(), by_record); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
