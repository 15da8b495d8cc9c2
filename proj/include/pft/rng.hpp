#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace pft {

/// FNV-1a over raw bytes. Stable across platforms and runs; used for seed
/// derivation, line integrity markers and config/plan hashes.
std::uint64_t fnv1a64(std::string_view bytes);

/// 16 lowercase hex digits, zero padded.
std::string hex64(std::uint64_t value);

/// Child seed from a base seed and a textual role tag, so that independent
/// streams (init, task sampling, instance picks, ...) never collide.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

/// Seeded generator with hand-rolled draws. std::uniform_int_distribution and
/// friends are implementation-defined, which would break the contract that a
/// seed reproduces the same samples on every machine; mt19937_64 itself is
/// fully specified by the standard.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform real in [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller (second value cached).
    double gaussian();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace pft
