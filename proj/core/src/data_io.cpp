#include "gridlearn/data_io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "gridlearn/report.hpp"

namespace gridlearn {

void Dataset::validate() const {
    if (samples.empty()) throw DataError("dataset is empty");
    std::int64_t prev_ts = samples.front().timestamp - 1;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const ContextSample& s = samples[i];
        if (s.features.size() != feature_dim())
            throw DataError("sample " + std::to_string(i) + " feature dimension mismatch");
        if (s.zone_load.size() != zone_count)
            throw DataError("sample " + std::to_string(i) + " zone count mismatch");
        if (!s.zone_load.allFinite() || s.zone_load.minCoeff() < 0.0)
            throw DataError("sample " + std::to_string(i) + " has invalid loads");
        if (s.timestamp <= prev_ts)
            throw DataError("timestamps not strictly increasing at sample " + std::to_string(i));
        prev_ts = s.timestamp;
    }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_cell(const std::string& cell, const std::string& path, int lineno,
                  const std::string& col) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing junk");
        if (!std::isfinite(v))
            throw DataError(path + ":" + std::to_string(lineno) + ": non-finite value in column " + col);
        return v;
    } catch (const DataError&) {
        throw;
    } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(lineno) + ": non-numeric cell '" + cell +
                        "' in column " + col);
    }
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Box-Muller on raw 53-bit uniforms; implementation-independent.
class SeededNormal {
public:
    explicit SeededNormal(std::uint64_t seed) : rng_(seed) {}
    double uniform() { return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53; }
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset: " + path);

    std::string header;
    if (!std::getline(in, header) || header.empty())
        throw DataError(path + ": empty dataset file");
    while (!header.empty() && (header.back() == '\r' || header.back() == '\n')) header.pop_back();

    const std::vector<std::string> cols = split_line(header);
    if (cols.empty() || cols[0] != "timestamp")
        throw DataError(path + ": first column must be 'timestamp'");

    Dataset ds;
    std::size_t i = 1;
    while (i < cols.size() && cols[i] == "zone" + std::to_string(ds.zone_count + 1)) {
        ++ds.zone_count;
        ++i;
    }
    if (ds.zone_count == 0) throw DataError(path + ": missing zone1.. load columns");
    const std::size_t feat_begin = i;
    while (i < cols.size() && cols[i].rfind("feat_", 0) == 0) {
        ds.feature_names.push_back(cols[i].substr(5));
        ++i;
    }
    int react_count = 0;
    while (i < cols.size() && cols[i] == "react_" + std::to_string(react_count + 1)) {
        ++react_count;
        ++i;
    }
    if (i != cols.size())
        throw DataError(path + ": unexpected column '" + cols[i] + "'");

    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != cols.size())
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(cols.size()) + " cells, got " +
                            std::to_string(cells.size()));
        ContextSample s;
        s.timestamp = static_cast<std::int64_t>(parse_cell(cells[0], path, lineno, "timestamp"));
        s.zone_load.resize(ds.zone_count);
        for (int z = 0; z < ds.zone_count; ++z)
            s.zone_load[z] = parse_cell(cells[1 + z], path, lineno, cols[1 + z]);
        s.features.resize(ds.feature_dim());
        for (int f = 0; f < ds.feature_dim(); ++f)
            s.features[f] = parse_cell(cells[feat_begin + f], path, lineno, cols[feat_begin + f]);
        if (react_count > 0) {
            s.reactances.resize(react_count);
            for (int r = 0; r < react_count; ++r)
                s.reactances[r] =
                    parse_cell(cells[feat_begin + ds.feature_dim() + r], path, lineno,
                               cols[feat_begin + ds.feature_dim() + r]);
        }
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw DataError(path + ": empty dataset file");
    ds.validate();
    return ds;
}

void write_csv(const Dataset& dataset, const std::string& path) {
    dataset.validate();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset: " + path);
    out << "timestamp";
    for (int z = 1; z <= dataset.zone_count; ++z) out << ",zone" << z;
    for (const std::string& f : dataset.feature_names) out << ",feat_" << f;
    const int react_count = static_cast<int>(dataset.samples.front().reactances.size());
    for (int r = 1; r <= react_count; ++r) out << ",react_" << r;
    out << "\n";
    for (const ContextSample& s : dataset.samples) {
        out << s.timestamp;
        for (int z = 0; z < dataset.zone_count; ++z) out << "," << format_number(s.zone_load[z]);
        for (int f = 0; f < s.features.size(); ++f) out << "," << format_number(s.features[f]);
        for (int r = 0; r < react_count; ++r) out << "," << format_number(s.reactances[r]);
        out << "\n";
    }
}

Dataset synth_generate(const SynthOptions& options) {
    if (options.days < 1) throw ConfigError("synthetic generator needs days >= 1");
    if (options.zone_count < 1) throw ConfigError("synthetic generator needs zones >= 1");

    const int hours = options.days * 24;
    const int zones = options.zone_count;
    const int lines = static_cast<int>(options.base_reactances.size());

    Dataset ds;
    ds.zone_count = zones;
    // A day-of-week one-hot is not learnable from a five-day training span
    // (two categories never appear); the weekend flag is.
    ds.feature_names = {"hour_sin", "hour_cos", "weekend"};
    for (int z = 1; z <= zones; ++z) ds.feature_names.push_back("prevload_" + std::to_string(z));
    ds.feature_names.push_back("temperature");

    SeededNormal noise(options.seed);
    std::vector<double> line_phase(lines);
    for (int l = 0; l < lines; ++l) line_phase[l] = kTwoPi * noise.uniform();

    // The series starts on a Saturday so a leading train split always sees
    // both weekend days; dow 5 and 6 are the weekend.
    auto day_of_week = [](int t) { return (((t / 24 + 5) % 7) + 7) % 7; };
    auto zone_mean = [&](int zone, int t) {
        const double phase = kTwoPi * static_cast<double>(zone) / zones;
        const int hour = ((t % 24) + 24) % 24;
        const int dow = day_of_week(t);
        const double weekday_term = dow < 5 ? 0.02 : -0.05;  // mean-zero over the week
        return options.base_load * (1.0 + 0.3 * std::sin(kTwoPi * hour / 24.0 + phase)) +
               options.base_load * weekday_term;
    };

    // Previous-hour loads for t = 0 come from the t = -1 mean profile.
    Eigen::VectorXd prev_load(zones);
    for (int z = 0; z < zones; ++z) prev_load[z] = std::max(zone_mean(z, -1), 0.0);

    for (int t = 0; t < hours; ++t) {
        ContextSample s;
        s.timestamp = t;
        const int hour = t % 24;
        const int dow = day_of_week(t);

        s.features.resize(ds.feature_dim());
        int f = 0;
        s.features[f++] = std::sin(kTwoPi * hour / 24.0);
        s.features[f++] = std::cos(kTwoPi * hour / 24.0);
        s.features[f++] = dow >= 5 ? 1.0 : 0.0;
        for (int z = 0; z < zones; ++z) s.features[f++] = prev_load[z];
        const double temperature =
            20.0 + 8.0 * std::sin(kTwoPi * (hour - 14) / 24.0) + 0.5 * noise.normal();
        s.features[f++] = temperature;

        s.zone_load.resize(zones);
        for (int z = 0; z < zones; ++z) {
            const double value = zone_mean(z, t) + 0.02 * options.base_load * noise.normal();
            s.zone_load[z] = std::max(value, 0.0);
        }
        if (lines > 0) {
            s.reactances.resize(lines);
            for (int l = 0; l < lines; ++l)
                s.reactances[l] =
                    options.base_reactances[l] *
                    (1.0 + options.reactance_amplitude * std::sin(kTwoPi * hour / 24.0 + line_phase[l]));
        }
        prev_load = s.zone_load;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

std::string SplitSpec::to_string() const {
    const char u = unit == SplitUnit::kDays ? 'd' : unit == SplitUnit::kWindows ? 'w' : 'h';
    return std::to_string(train_count) + u + "/" + std::to_string(test_count) + u;
}

SplitSpec SplitSpec::parse(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) throw ConfigError("bad split spec: " + text);
    auto parse_part = [&](const std::string& part, int& count, SplitUnit& unit) {
        if (part.size() < 2) throw ConfigError("bad split spec: " + text);
        const char u = part.back();
        if (u == 'd') unit = SplitUnit::kDays;
        else if (u == 'w') unit = SplitUnit::kWindows;
        else if (u == 'h') unit = SplitUnit::kHours;
        else throw ConfigError("bad split unit in: " + text);
        try {
            count = std::stoi(part.substr(0, part.size() - 1));
        } catch (const std::exception&) {
            throw ConfigError("bad split count in: " + text);
        }
    };
    SplitSpec spec;
    SplitUnit unit_b;
    parse_part(text.substr(0, slash), spec.train_count, spec.unit);
    int test = 0;
    parse_part(text.substr(slash + 1), test, unit_b);
    if (unit_b != spec.unit) throw ConfigError("split spec mixes units: " + text);
    spec.test_count = test;
    return spec;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
    dataset.validate();
    if (spec.train_count < 1) throw ConfigError("split needs a nonempty training span");
    if (spec.test_count < 1) throw ConfigError("split needs a nonempty test span");
    const int per_unit = spec.hours_per_unit();
    const int n_train = spec.train_count * per_unit;
    const int n_test = spec.test_count * per_unit;
    if (n_train + n_test > dataset.size())
        throw ConfigError("split spec " + spec.to_string() + " exceeds dataset size " +
                          std::to_string(dataset.size()));

    Dataset train = dataset;
    Dataset test = dataset;
    train.samples.assign(dataset.samples.begin(), dataset.samples.begin() + n_train);
    test.samples.assign(dataset.samples.begin() + n_train,
                        dataset.samples.begin() + n_train + n_test);
    return {std::move(train), std::move(test)};
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + " is not key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + " missing key");
        cfg.set(key, value);
    }
    return cfg;
}

bool KeyValueConfig::has(const std::string& key) const { return index_.count(key) > 0; }

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    auto it = index_.find(key);
    if (it == index_.end()) {
        index_[key] = entries_.size();
        entries_.emplace_back(key, value);
    } else {
        entries_[it->second].second = value;
    }
}

std::string KeyValueConfig::get_string(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw ConfigError("missing config key: " + key);
    return entries_[it->second].second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    try {
        return std::stod(get_string(key));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a number");
    }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    try {
        return std::stoi(get_string(key));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an integer");
    }
}

std::uint64_t KeyValueConfig::get_uint64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    try {
        return std::stoull(get_string(key));
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an integer");
    }
}

void KeyValueConfig::apply_env_overrides() {
    if (const char* seed = std::getenv("DISPATCH_SEED")) set("seed", seed);
    if (const char* out = std::getenv("DISPATCH_OUT")) set("out", out);
}

}  // namespace gridlearn
