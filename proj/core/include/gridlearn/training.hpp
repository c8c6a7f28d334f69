#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridlearn/data_io.hpp"
#include "gridlearn/grid.hpp"
#include "gridlearn/predictor.hpp"
#include "gridlearn/regret.hpp"

namespace gridlearn {

enum class Pipeline { kIlo, kSlo };
enum class CaseId { kEd1h, kEd24h, kDcopf1h };

std::string pipeline_name(Pipeline p);
Pipeline pipeline_from_name(const std::string& name);
std::string case_name(CaseId c);
CaseId case_from_name(const std::string& name);

struct TrainingConfig {
    Pipeline pipeline = Pipeline::kIlo;
    CaseId case_id = CaseId::kEd1h;
    double lr_load = 5e-3;
    double lr_ptdf = 4e-3;  // DCOPF impedance model
    int epochs = 100;
    double mu_train = 1e-9;
    double mu_eval = 1e-9;
    std::string penalty_preset = "table1-settings1";
    std::uint64_t seed = 1;
    SplitSpec split{5, 2, SplitUnit::kDays};
    int zone_count = 8;
    int days = 7;
    double base_load = 1.25;
    double reg_weight = 1.0;
    bool bias_init = true;     // seed output biases at the mean training target
    std::string fleet_path;    // grid fixture (fleet + topology for DCOPF)
    std::string dataset_csv;   // empty: synthesize from seed
    std::string out_dir = ".";

    void validate() const;
};

/// Per-case defaults matching the reference experiment budgets: epochs
/// 100 (ILO) / 250 (SLO) for ed-1h, 100/100 otherwise; learning rates
/// 5e-3 (ed-1h), 1e-4/1e-3 (ed-24h ILO/SLO), 3e-4+4e-3 / 5e-3+2e-3 (dcopf);
/// mu capped at 1e-7 while training ed-24h and dcopf.
TrainingConfig default_config(Pipeline pipeline, CaseId case_id);

/// default_config overlaid with the file keys; env overrides applied.
TrainingConfig config_from_kv(const KeyValueConfig& kv);
std::vector<std::pair<std::string, std::string>> config_entries(const TrainingConfig& cfg);

/// Everything a run needs, resolved: fixture, prices, penalties, split data.
struct Experiment {
    TrainingConfig config;
    GridFixture grid;
    PriceBook prices;
    PenaltySetting penalties;
    Dataset train_set;
    Dataset test_set;
};

Experiment prepare_experiment(const TrainingConfig& config);

struct EpochStats {
    double mean_regret = 0.0;
    double mean_mse = 0.0;
    double wall_seconds = 0.0;  // logged, never written to CSV (determinism)
};

struct TrainingHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;
    double best_train_regret = 0.0;
    double final_test_regret = 0.0;
    double final_test_mse = 0.0;
    int skipped_instances = 0;  // total over all epochs
};

struct TrainedModels {
    PredictionModel load_model;
    std::optional<PredictionModel> impedance_model;
};

struct TrainResult {
    TrainedModels models;
    TrainingHistory history;
};

/// Full-batch gradient descent through the barrier solver against the
/// priced regret; best-epoch checkpoint on mean training regret.
/// `initial` overrides the seeded model construction (tests, warm starts).
TrainResult train_ilo(const Experiment& experiment, const TrainedModels* initial = nullptr);

/// Same loop shape, loss = prediction MSE (load, plus reactances for
/// DCOPF); regret still evaluated per epoch for reporting; best-epoch
/// checkpoint on the MSE loss.
TrainResult train_slo(const Experiment& experiment, const TrainedModels* initial = nullptr);

inline TrainResult train(const Experiment& e) {
    return e.config.pipeline == Pipeline::kIlo ? train_ilo(e) : train_slo(e);
}

struct InstanceMetric {
    std::int64_t timestamp = 0;
    double regret = 0.0;
    double mse = 0.0;
    bool failed = false;
};

struct EvalMetrics {
    double mean_regret = 0.0;
    double mean_mse = 0.0;
    int evaluated = 0;
    int failed = 0;
    std::vector<InstanceMetric> rows;
};

/// Deterministic metrics at mu_eval. Throws on an empty dataset; solver
/// failures are excluded from the means and surfaced in `failed`.
EvalMetrics evaluate(const TrainedModels& models, const Dataset& dataset,
                     const Experiment& experiment, double mu_eval,
                     const PenaltySetting* penalties_override = nullptr);

/// Checkpoint = resolved config + model(s), one JSON file.
void save_checkpoint(const std::string& path, const TrainingConfig& config,
                     const TrainedModels& models);
struct Checkpoint {
    TrainingConfig config;
    TrainedModels models;
};
Checkpoint load_checkpoint(const std::string& path);

/// history.csv (epoch, train_regret, train_mse) + history.json (adds wall
/// time and final metrics). CSV bytes are rerun-stable.
void write_history_csv(const std::string& path, const TrainingHistory& history,
                       const std::vector<std::pair<std::string, std::string>>& provenance);
void write_history_json(const std::string& path, const TrainingHistory& history,
                        const std::vector<std::pair<std::string, std::string>>& provenance);

}  // namespace gridlearn
