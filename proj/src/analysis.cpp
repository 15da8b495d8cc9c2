#include "pft/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pft/metrics.hpp"

namespace pft {

namespace {

// (speaker, emotion): the controlled unit all cell-level aggregations share.
using Cell = std::pair<std::string, std::string>;

/// Sorting first makes the sum, and therefore the mean, independent of the
/// order records appear in the store.
double sorted_mean(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

MeanStderr sorted_mean_stderr(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return mean_and_stderr(v);
}

std::map<int, const ConfigSubset*> config_index(const std::vector<ConfigSubset>& configs) {
    std::map<int, const ConfigSubset*> by_id;
    for (const auto& c : configs) {
        if (!by_id.emplace(c.config_id, &c).second) {
            throw std::invalid_argument("duplicate config_id " + std::to_string(c.config_id));
        }
    }
    return by_id;
}

const ConfigSubset& config_of(const std::map<int, const ConfigSubset*>& by_id, int config_id) {
    const auto it = by_id.find(config_id);
    if (it == by_id.end()) {
        throw std::runtime_error("store record references unknown config_id " +
                                 std::to_string(config_id));
    }
    return *it->second;
}

std::vector<std::string> corpus_universe(const std::vector<ConfigSubset>& configs) {
    std::set<std::string> names;
    for (const auto& c : configs) names.insert(c.corpora.begin(), c.corpora.end());
    return {names.begin(), names.end()};
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

std::ofstream open_report(const std::filesystem::path& path) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write report: " + path.string());
    return out;
}

struct CsvTable {
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path, const std::string& expected_header,
                  std::size_t n_fields) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty report file: " + path.string());
    if (line != expected_header) {
        throw std::runtime_error("unexpected header in " + path.string() + ": '" + line + "'");
    }
    CsvTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != n_fields) {
            throw std::runtime_error("malformed row " + std::to_string(line_no) + " in " +
                                     path.string() + ": expected " + std::to_string(n_fields) +
                                     " fields, got " + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (table.rows.empty()) throw std::runtime_error("no rows in report: " + path.string());
    return table;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("malformed number '" + s + "' in " + path.string());
    }
}

long parse_long(const std::string& s, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("malformed integer '" + s + "' in " + path.string());
    }
}

}  // namespace

CurvesResult n_corpora_curves(const std::vector<TrialRecord>& records,
                              const std::vector<ConfigSubset>& configs) {
    const auto by_id = config_index(configs);
    std::size_t max_n = 0;
    for (const auto& c : configs) max_n = std::max(max_n, c.size());

    std::map<std::pair<int, std::size_t>, std::vector<double>> groups;
    std::set<int> ks;
    for (const auto& r : records) {
        if (!r.ok()) continue;
        const std::size_t n = config_of(by_id, r.spec.config_id).size();
        groups[{r.spec.k, n}].push_back(r.macro_f1);
        ks.insert(r.spec.k);
    }

    CurvesResult result;
    for (int k : ks) {
        for (std::size_t n = 0; n <= max_n; ++n) {
            const auto it = groups.find({k, n});
            if (it == groups.end()) {
                result.warnings.push_back("no records for k=" + std::to_string(k) +
                                          ", n_corpora=" + std::to_string(n));
                continue;
            }
            const MeanStderr ms = sorted_mean_stderr(it->second);
            CurvePoint point;
            point.k = k;
            point.n_corpora = n;
            point.mean = ms.mean;
            point.std_error = ms.std_error;
            point.count = it->second.size();
            result.points.push_back(point);
        }
    }
    return result;
}

std::vector<ContributionRow> corpus_contributions(const std::vector<TrialRecord>& records,
                                                  const std::vector<ConfigSubset>& configs,
                                                  CellWeighting weighting) {
    const auto by_id = config_index(configs);
    const std::vector<std::string> universe = corpus_universe(configs);

    std::map<std::string, std::map<int, std::map<Cell, std::vector<double>>>> incl;
    std::map<int, std::map<Cell, std::vector<double>>> base;
    std::set<int> ks;
    for (const auto& r : records) {
        if (!r.ok()) continue;
        const ConfigSubset& cfg = config_of(by_id, r.spec.config_id);
        const Cell cell{r.spec.speaker, r.spec.emotion};
        if (cfg.size() == 0) base[r.spec.k][cell].push_back(r.macro_f1);
        for (const auto& c : cfg.corpora) incl[c][r.spec.k][cell].push_back(r.macro_f1);
        ks.insert(r.spec.k);
    }

    std::vector<ContributionRow> rows;
    for (int k : ks) {
        for (const auto& c : universe) {
            const auto corpus_it = incl.find(c);
            if (corpus_it == incl.end()) continue;
            const auto k_it = corpus_it->second.find(k);
            if (k_it == corpus_it->second.end()) continue;

            const auto& base_cells = base[k];
            std::vector<double> diffs;
            std::vector<double> weights;
            for (const auto& [cell, values] : k_it->second) {
                const auto base_it = base_cells.find(cell);
                if (base_it == base_cells.end() || base_it->second.empty()) {
                    throw std::runtime_error("missing baseline records for speaker=" + cell.first +
                                             " emotion=" + cell.second +
                                             " k=" + std::to_string(k));
                }
                diffs.push_back(sorted_mean(values) - sorted_mean(base_it->second));
                weights.push_back(static_cast<double>(values.size()));
            }

            ContributionRow row;
            row.k = k;
            row.corpus = c;
            if (weighting == CellWeighting::ByCell) {
                row.delta = sorted_mean(diffs);
                row.count = diffs.size();
            } else {
                double num = 0.0;
                double den = 0.0;
                for (std::size_t i = 0; i < diffs.size(); ++i) {
                    num += weights[i] * diffs[i];
                    den += weights[i];
                }
                row.delta = num / den;
                row.count = static_cast<std::size_t>(den);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<InclusionExclusionRow> inclusion_exclusion(const std::vector<TrialRecord>& records,
                                                       const std::vector<ConfigSubset>& configs,
                                                       CellWeighting weighting) {
    const auto by_id = config_index(configs);
    const std::vector<std::string> universe = corpus_universe(configs);
    if (universe.size() < 2) {
        throw std::invalid_argument("inclusion/exclusion needs at least 2 corpora");
    }

    // corpus -> (singleton config_id, complement config_id)
    std::map<std::string, std::pair<int, int>> pairs;
    for (const auto& c : universe) {
        std::vector<std::string> complement;
        for (const auto& other : universe) {
            if (other != c) complement.push_back(other);
        }
        int singleton_id = 0;
        int complement_id = 0;
        for (const auto& cfg : configs) {
            if (cfg.corpora == std::vector<std::string>{c}) singleton_id = cfg.config_id;
            if (cfg.corpora == complement) complement_id = cfg.config_id;
        }
        if (singleton_id == 0) {
            throw std::invalid_argument("configs lack the singleton config for corpus '" + c +
                                        "'");
        }
        if (complement_id == 0) {
            throw std::invalid_argument("configs lack the complement config for corpus '" + c +
                                        "'");
        }
        pairs[c] = {singleton_id, complement_id};
    }

    std::map<int, std::map<int, std::map<Cell, std::vector<double>>>> vals;  // config -> k -> cell
    std::set<int> ks;
    for (const auto& r : records) {
        if (!r.ok()) continue;
        config_of(by_id, r.spec.config_id);
        vals[r.spec.config_id][r.spec.k][{r.spec.speaker, r.spec.emotion}].push_back(r.macro_f1);
        ks.insert(r.spec.k);
    }

    const auto controlled_mean = [&](const std::map<Cell, std::vector<double>>& own_cells,
                                     const std::map<Cell, std::vector<double>>& other_cells) {
        std::vector<double> means;
        std::vector<double> weights;
        for (const auto& [cell, values] : own_cells) {
            if (!other_cells.count(cell)) continue;  // compare on common support only
            means.push_back(sorted_mean(values));
            weights.push_back(static_cast<double>(values.size()));
        }
        if (means.empty()) return std::pair<double, bool>{0.0, false};
        if (weighting == CellWeighting::ByCell) return std::pair<double, bool>{sorted_mean(means), true};
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < means.size(); ++i) {
            num += weights[i] * means[i];
            den += weights[i];
        }
        return std::pair<double, bool>{num / den, true};
    };

    std::vector<InclusionExclusionRow> rows;
    for (int k : ks) {
        for (const auto& c : universe) {
            const auto [singleton_id, complement_id] = pairs.at(c);
            const auto& in_cells = vals[singleton_id][k];
            const auto& ex_cells = vals[complement_id][k];
            const auto [f1_in, in_ok] = controlled_mean(in_cells, ex_cells);
            const auto [f1_ex, ex_ok] = controlled_mean(ex_cells, in_cells);
            if (!in_ok || !ex_ok) {
                throw std::runtime_error("no matched records for corpus '" + c + "' at k=" +
                                         std::to_string(k) +
                                         " (need both its singleton and complement configs)");
            }
            InclusionExclusionRow row;
            row.k = k;
            row.corpus = c;
            row.f1_in = f1_in;
            row.f1_ex = f1_ex;
            row.delta = f1_in - f1_ex;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

StratifiedResult stratified_curves(const std::vector<TrialRecord>& records,
                                   const std::vector<ConfigSubset>& configs,
                                   const Corpus& downstream) {
    const auto by_id = config_index(configs);
    const std::vector<std::string> universe = corpus_universe(configs);

    int baseline_id = 0;
    int full_id = 0;
    for (const auto& cfg : configs) {
        if (cfg.size() == 0) baseline_id = cfg.config_id;
        if (!universe.empty() && cfg.corpora == universe) full_id = cfg.config_id;
    }
    if (baseline_id == 0) throw std::invalid_argument("configs lack the empty (baseline) config");
    if (full_id == 0) throw std::invalid_argument("configs lack the full-set config");

    std::map<std::string, std::string> speaker_language;
    for (const auto& u : downstream.utterances) {
        speaker_language.emplace(u.speaker_id, to_string(u.language));
    }

    std::map<std::tuple<std::string, std::string, std::string, int>, std::vector<double>> groups;
    std::set<int> ks;
    bool any_baseline = false;
    bool any_full = false;
    for (const auto& r : records) {
        if (!r.ok()) continue;
        config_of(by_id, r.spec.config_id);
        std::string tag;
        if (r.spec.config_id == baseline_id) {
            tag = "no_pft";
            any_baseline = true;
        } else if (r.spec.config_id == full_id) {
            tag = "all_pft";
            any_full = true;
        } else {
            continue;
        }
        const auto lang_it = speaker_language.find(r.spec.speaker);
        if (lang_it == speaker_language.end()) {
            throw std::runtime_error("record speaker '" + r.spec.speaker +
                                     "' not present in corpus '" + downstream.name + "'");
        }
        groups[{lang_it->second, r.spec.emotion, tag, r.spec.k}].push_back(r.macro_f1);
        ks.insert(r.spec.k);
    }
    if (!any_baseline) throw std::runtime_error("store has no records for the baseline config");
    if (!any_full) throw std::runtime_error("store has no records for the full-set config");

    std::set<std::string> languages;
    for (const auto& [speaker, lang] : speaker_language) languages.insert(lang);

    StratifiedResult result;
    for (const auto& language : languages) {
        for (const auto& emotion : downstream.label_space.names) {
            for (const char* config : {"no_pft", "all_pft"}) {
                for (int k : ks) {
                    const auto it = groups.find({language, emotion, config, k});
                    if (it == groups.end()) {
                        result.warnings.push_back("no records for language=" + language +
                                                  " emotion=" + emotion + " config=" + config +
                                                  " k=" + std::to_string(k));
                        continue;
                    }
                    StratifiedPoint point;
                    point.language = language;
                    point.emotion = emotion;
                    point.config = config;
                    point.k = k;
                    point.mean = sorted_mean(it->second);
                    point.count = it->second.size();
                    result.points.push_back(std::move(point));
                }
            }
        }
    }
    return result;
}

void write_curves_csv(const std::vector<CurvePoint>& points, const std::filesystem::path& path) {
    if (points.empty()) throw std::invalid_argument("refusing to write empty curves report");
    auto out = open_report(path);
    out << "k,n_corpora,mean,stderr,count\n";
    for (const auto& p : points) {
        out << p.k << ',' << p.n_corpora << ',' << fmt4(p.mean) << ',' << fmt4(p.std_error) << ','
            << p.count << '\n';
    }
}

std::vector<CurvePoint> read_curves_csv(const std::filesystem::path& path) {
    const auto table = read_csv(path, "k,n_corpora,mean,stderr,count", 5);
    std::vector<CurvePoint> points;
    for (const auto& row : table.rows) {
        CurvePoint p;
        p.k = static_cast<int>(parse_long(row[0], path));
        p.n_corpora = static_cast<std::size_t>(parse_long(row[1], path));
        p.mean = parse_double(row[2], path);
        p.std_error = parse_double(row[3], path);
        p.count = static_cast<std::size_t>(parse_long(row[4], path));
        points.push_back(std::move(p));
    }
    return points;
}

void write_contributions_csv(const std::vector<ContributionRow>& rows,
                             const std::filesystem::path& path) {
    if (rows.empty()) throw std::invalid_argument("refusing to write empty contributions report");
    auto out = open_report(path);
    out << "k,corpus,delta,count\n";
    for (const auto& r : rows) {
        out << r.k << ',' << r.corpus << ',' << fmt4(r.delta) << ',' << r.count << '\n';
    }
}

std::vector<ContributionRow> read_contributions_csv(const std::filesystem::path& path) {
    const auto table = read_csv(path, "k,corpus,delta,count", 4);
    std::vector<ContributionRow> rows;
    for (const auto& row : table.rows) {
        ContributionRow r;
        r.k = static_cast<int>(parse_long(row[0], path));
        r.corpus = row[1];
        r.delta = parse_double(row[2], path);
        r.count = static_cast<std::size_t>(parse_long(row[3], path));
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_incl_excl_csv(const std::vector<InclusionExclusionRow>& rows,
                         const std::filesystem::path& path) {
    if (rows.empty()) {
        throw std::invalid_argument("refusing to write empty inclusion/exclusion report");
    }
    auto out = open_report(path);
    out << "k,corpus,f1_in,f1_ex,delta\n";
    for (const auto& r : rows) {
        out << r.k << ',' << r.corpus << ',' << fmt4(r.f1_in) << ',' << fmt4(r.f1_ex) << ','
            << fmt4(r.delta) << '\n';
    }
}

std::vector<InclusionExclusionRow> read_incl_excl_csv(const std::filesystem::path& path) {
    const auto table = read_csv(path, "k,corpus,f1_in,f1_ex,delta", 5);
    std::vector<InclusionExclusionRow> rows;
    for (const auto& row : table.rows) {
        InclusionExclusionRow r;
        r.k = static_cast<int>(parse_long(row[0], path));
        r.corpus = row[1];
        r.f1_in = parse_double(row[2], path);
        r.f1_ex = parse_double(row[3], path);
        r.delta = parse_double(row[4], path);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_stratified_csv(const std::vector<StratifiedPoint>& points,
                          const std::filesystem::path& path) {
    if (points.empty()) throw std::invalid_argument("refusing to write empty stratified report");
    auto out = open_report(path);
    out << "language,emotion,config,k,mean,count\n";
    for (const auto& p : points) {
        out << p.language << ',' << p.emotion << ',' << p.config << ',' << p.k << ','
            << fmt4(p.mean) << ',' << p.count << '\n';
    }
}

std::vector<StratifiedPoint> read_stratified_csv(const std::filesystem::path& path) {
    const auto table = read_csv(path, "language,emotion,config,k,mean,count", 6);
    std::vector<StratifiedPoint> points;
    for (const auto& row : table.rows) {
        StratifiedPoint p;
        p.language = row[0];
        p.emotion = row[1];
        p.config = row[2];
        p.k = static_cast<int>(parse_long(row[3], path));
        p.mean = parse_double(row[4], path);
        p.count = static_cast<std::size_t>(parse_long(row[5], path));
        points.push_back(std::move(p));
    }
    return points;
}

std::string incl_excl_markdown(const std::vector<InclusionExclusionRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("no inclusion/exclusion rows to format");
    std::string out;
    out += "| k | Corpus | F1_in | F1_ex | Delta |\n";
    out += "|---:|---|---:|---:|---:|\n";
    for (const auto& r : rows) {
        out += "| " + std::to_string(r.k) + " | " + r.corpus + " | " + fmt4(r.f1_in) + " | " +
               fmt4(r.f1_ex) + " | " + fmt4(r.delta) + " |\n";
    }
    return out;
}

void write_summary_markdown(const CurvesResult& curves,
                            const std::vector<ContributionRow>& contributions,
                            const std::vector<InclusionExclusionRow>& incl_excl,
                            const StratifiedResult& stratified, std::size_t ok_records,
                            std::size_t failed_records, const std::filesystem::path& path) {
    auto out = open_report(path);
    out << "# Grid report\n\n";
    out << "Aggregated over " << ok_records << " ok records; " << failed_records
        << " failed records excluded.\n";

    out << "\n## Macro F1 by number of pre-finetuning corpora\n\n";
    if (curves.points.empty()) {
        out << "(not available)\n";
    } else {
        out << "| k | n_corpora | mean | stderr | count |\n";
        out << "|---:|---:|---:|---:|---:|\n";
        for (const auto& p : curves.points) {
            out << "| " << p.k << " | " << p.n_corpora << " | " << fmt4(p.mean) << " | "
                << fmt4(p.std_error) << " | " << p.count << " |\n";
        }
    }
    for (const auto& w : curves.warnings) out << "- warning: " << w << "\n";

    out << "\n## Per-corpus contribution vs baseline\n\n";
    if (contributions.empty()) {
        out << "(not available)\n";
    } else {
        out << "| k | Corpus | Delta | Cells |\n";
        out << "|---:|---|---:|---:|\n";
        for (const auto& r : contributions) {
            out << "| " << r.k << " | " << r.corpus << " | " << fmt4(r.delta) << " | " << r.count
                << " |\n";
        }
    }

    out << "\n## Inclusion vs exclusion\n\n";
    if (incl_excl.empty()) {
        out << "(not available)\n";
    } else {
        out << incl_excl_markdown(incl_excl);
    }

    out << "\n## Stratified by language and emotion\n\n";
    if (stratified.points.empty()) {
        out << "(not available)\n";
    } else {
        out << "| Language | Emotion | Config | k | Mean | Count |\n";
        out << "|---|---|---|---:|---:|---:|\n";
        for (const auto& p : stratified.points) {
            out << "| " << p.language << " | " << p.emotion << " | " << p.config << " | " << p.k
                << " | " << fmt4(p.mean) << " | " << p.count << " |\n";
        }
    }
    for (const auto& w : stratified.warnings) out << "- warning: " << w << "\n";

    if (!out) throw std::runtime_error("summary write failed: " + path.string());
}

}  // namespace pft
