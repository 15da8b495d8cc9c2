#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pft/corpus.hpp"
#include "pft/experiments.hpp"
#include "pft/store.hpp"

namespace pft {

/// Pooled mean/stderr of macro F1 over every ok record whose config has
/// n_corpora pre-finetuning corpora, one point per (k, n_corpora).
struct CurvePoint {
    int k = 0;
    std::size_t n_corpora = 0;
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

/// Controlled mean improvement over the no-pre-finetuning baseline across
/// every config that includes `corpus`.
struct ContributionRow {
    int k = 0;
    std::string corpus;
    double delta = 0.0;
    std::size_t count = 0;  // cells (ByCell) or records (ByRecord)
};

/// Controlled means for pre-finetuning on exactly {corpus} vs on everything
/// except it. delta is always f1_in - f1_ex.
struct InclusionExclusionRow {
    int k = 0;
    std::string corpus;
    double f1_in = 0.0;
    double f1_ex = 0.0;
    double delta = 0.0;
};

struct StratifiedPoint {
    std::string language;  // "en" | "zh"
    std::string emotion;
    std::string config;  // "no_pft" | "all_pft"
    int k = 0;
    double mean = 0.0;
    std::size_t count = 0;
};

/// ByCell averages cell-level quantities unweighted (each (speaker, emotion)
/// cell counts once); ByRecord weights cells by their record counts.
enum class CellWeighting { ByCell, ByRecord };

struct CurvesResult {
    std::vector<CurvePoint> points;
    std::vector<std::string> warnings;
};

struct StratifiedResult {
    std::vector<StratifiedPoint> points;
    std::vector<std::string> warnings;
};

CurvesResult n_corpora_curves(const std::vector<TrialRecord>& records,
                              const std::vector<ConfigSubset>& configs);

std::vector<ContributionRow> corpus_contributions(const std::vector<TrialRecord>& records,
                                                  const std::vector<ConfigSubset>& configs,
                                                  CellWeighting weighting = CellWeighting::ByCell);

std::vector<InclusionExclusionRow> inclusion_exclusion(
    const std::vector<TrialRecord>& records, const std::vector<ConfigSubset>& configs,
    CellWeighting weighting = CellWeighting::ByCell);

/// Per-(language, emotion, k) means for the empty config ("no_pft") and the
/// full config ("all_pft"). Languages come from the downstream corpus's
/// speaker metadata.
StratifiedResult stratified_curves(const std::vector<TrialRecord>& records,
                                   const std::vector<ConfigSubset>& configs,
                                   const Corpus& downstream);

// Report files. Floats are printed with 4 decimals; every writer refuses
// empty input without creating the file, and each reader returns exactly the
// rows a writer produced.
void write_curves_csv(const std::vector<CurvePoint>& points, const std::filesystem::path& path);
std::vector<CurvePoint> read_curves_csv(const std::filesystem::path& path);

void write_contributions_csv(const std::vector<ContributionRow>& rows,
                             const std::filesystem::path& path);
std::vector<ContributionRow> read_contributions_csv(const std::filesystem::path& path);

void write_incl_excl_csv(const std::vector<InclusionExclusionRow>& rows,
                         const std::filesystem::path& path);
std::vector<InclusionExclusionRow> read_incl_excl_csv(const std::filesystem::path& path);

void write_stratified_csv(const std::vector<StratifiedPoint>& points,
                          const std::filesystem::path& path);
std::vector<StratifiedPoint> read_stratified_csv(const std::filesystem::path& path);

/// | k | Corpus | F1_in | F1_ex | Delta | table.
std::string incl_excl_markdown(const std::vector<InclusionExclusionRow>& rows);

/// One markdown document with all four aggregations plus run totals.
void write_summary_markdown(const CurvesResult& curves,
                            const std::vector<ContributionRow>& contributions,
                            const std::vector<InclusionExclusionRow>& incl_excl,
                            const StratifiedResult& stratified, std::size_t ok_records,
                            std::size_t failed_records, const std::filesystem::path& path);

}  // namespace pft
