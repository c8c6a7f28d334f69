#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridlearn/errors.hpp"

namespace gridlearn {

/// One hourly observation: context features, true zone loads, and (case 2)
/// the true line reactances realized that hour.
struct ContextSample {
    std::int64_t timestamp = 0;  // hour index, strictly increasing
    Eigen::VectorXd features;
    Eigen::VectorXd zone_load;   // MW per zone, >= 0
    Eigen::VectorXd reactances;  // per line; empty when not applicable
};

struct Dataset {
    std::vector<ContextSample> samples;
    int zone_count = 0;
    std::vector<std::string> feature_names;  // bare names; CSV columns are feat_<name>

    int size() const { return static_cast<int>(samples.size()); }
    int feature_dim() const { return static_cast<int>(feature_names.size()); }
    void validate() const;
};

/// CSV schema: header `timestamp,zone1..zoneN,feat_*[,react_1..react_L]`,
/// integer hour timestamps, one row per hour. Malformed rows are rejected
/// with their line number.
Dataset load_csv(const std::string& path);
void write_csv(const Dataset& dataset, const std::string& path);

struct SynthOptions {
    std::uint64_t seed = 1;
    int days = 7;
    int zone_count = 8;
    double base_load = 1.25;             // MW per zone, long-run mean
    Eigen::VectorXd base_reactances;     // nonempty: emit per-hour reactance truth
    double reactance_amplitude = 0.05;   // relative sinusoid on reactances
};

/// Seeded synthetic hourly dataset: per-zone daily sinusoid with phase
/// offsets, a mean-zero weekday/weekend term, and 2%-of-base Gaussian noise.
/// Features: hour-of-day sine/cosine, day-of-week one-hot, previous-hour
/// load per zone, temperature.
Dataset synth_generate(const SynthOptions& options);

enum class SplitUnit { kDays, kWindows, kHours };

struct SplitSpec {
    int train_count = 0;
    int test_count = 0;
    SplitUnit unit = SplitUnit::kDays;

    int hours_per_unit() const { return unit == SplitUnit::kHours ? 1 : 24; }
    std::string to_string() const;
    static SplitSpec parse(const std::string& text);  // "5d/2d", "6w/3w", "9h/6h"
};

/// Chronological split, no shuffling. Throws when the dataset is too short
/// or the test span is empty.
std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec);

/// Ordered key = value configuration file with # comments and environment
/// overrides (DISPATCH_SEED -> seed, DISPATCH_OUT -> out).
class KeyValueConfig {
public:
    static KeyValueConfig from_file(const std::string& path);
    static KeyValueConfig from_string(const std::string& text);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
    std::string get_string(const std::string& key) const;  // throws if missing
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;

    void apply_env_overrides();

    /// Keys in first-seen order, for provenance headers.
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace gridlearn
