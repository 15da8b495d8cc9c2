#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace pft {

/// Coordinates of one downstream trial; the unit of planning and analysis.
struct TrialSpec {
    int config_id = 0;
    std::string speaker;
    std::string emotion;
    int k = 0;
    int trial_index = 0;
    std::uint64_t seed = 0;

    auto key() const { return std::tie(config_id, speaker, emotion, k, trial_index); }
    bool operator==(const TrialSpec& other) const { return key() == other.key(); }
    bool operator<(const TrialSpec& other) const { return key() < other.key(); }
};

struct TrialRecord {
    TrialSpec spec;
    std::string status = "ok";  // "ok" | "failed"
    double macro_f1 = 0.0;
    double f1_class0 = 0.0;
    double f1_class1 = 0.0;
    double baseline_f1 = 0.0;
    std::size_t epochs = 0;
    std::int64_t wall_ms = 0;
    std::string error;  // only for failed records

    bool ok() const { return status == "ok"; }
};

struct StoreMeta {
    std::string plan_hash;
    std::string config_hash;
};

std::string serialize_record(const TrialRecord& record);
TrialRecord parse_record(const std::string& json_text);

std::string serialize_trial_spec(const TrialSpec& spec);
TrialSpec parse_trial_spec(const std::string& json_text);

/// Closes a payload with its integrity marker: `<payload>\t#<16 hex>`.
std::string seal_line(const std::string& payload);

/// The payload if the marker checks out, nullopt for partial/corrupt lines.
std::optional<std::string> unseal_line(const std::string& line);

/// Append-only results log. One structured record per line, each line closed
/// by an integrity marker (FNV-1a of the payload); partial or corrupt lines
/// from crashes are discarded on load.
class ResultStore {
  public:
    /// Opens for appending, creating the file (with a meta line) if absent.
    /// If the file exists, its meta line must match `meta`.
    ResultStore(std::filesystem::path path, const StoreMeta& meta);

    void append(const TrialRecord& record);

    const std::filesystem::path& path() const { return path_; }

    struct LoadResult {
        std::optional<StoreMeta> meta;
        std::vector<TrialRecord> records;
        std::size_t discarded_lines = 0;
    };

    static LoadResult load(const std::filesystem::path& path);

  private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::mutex mutex_;
};

}  // namespace pft
