// gridlearn CLI: train / compare / simulate / synth.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridlearn/market.hpp"
#include "gridlearn/report.hpp"
#include "gridlearn/training.hpp"

namespace fs = std::filesystem;
using namespace gridlearn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitTrainingAbort = 2;

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw ConfigError("cannot create output directory: " + dir);
    // probe writability early so a bad --report/--out fails with exit 1
    const fs::path probe = fs::path(dir) / ".gridlearn_probe";
    std::ofstream out(probe);
    if (!out) throw ConfigError("output directory is not writable: " + dir);
    out.close();
    fs::remove(probe, ec);
}

std::vector<std::pair<std::string, std::string>> provenance(const TrainingConfig& cfg) {
    return config_entries(cfg);
}

Eigen::VectorXd bus_loads(const Eigen::VectorXd& zone_load, const GridFixture& grid) {
    Eigen::VectorXd bus = Eigen::VectorXd::Zero(grid.topology.bus_count);
    for (int z = 0; z < zone_load.size(); ++z) bus[grid.zone_bus[z]] += zone_load[z];
    return bus;
}

// ---------------------------------------------------------------- train ----

int cmd_train(const CLI::App& train_cmd, const std::string& pipeline_flag,
              const std::string& case_flag, const std::string& config_path,
              const std::string& out_flag) {
    if (config_path.empty() && (pipeline_flag.empty() || case_flag.empty())) {
        std::cerr << "train needs --config, or both --pipeline and --case\n"
                  << train_cmd.help() << "\n";
        return kExitConfig;
    }
    KeyValueConfig kv =
        config_path.empty() ? KeyValueConfig() : KeyValueConfig::from_file(config_path);
    if (!pipeline_flag.empty()) kv.set("pipeline", pipeline_flag);
    if (!case_flag.empty()) kv.set("case", case_flag);
    if (!out_flag.empty()) kv.set("out", out_flag);
    kv.apply_env_overrides();
    const TrainingConfig cfg = config_from_kv(kv);
    ensure_dir(cfg.out_dir);

    const Experiment exp = prepare_experiment(cfg);
    const TrainResult res = train(exp);

    const fs::path out(cfg.out_dir);
    save_checkpoint((out / "checkpoint.json").string(), cfg, res.models);
    write_history_csv((out / "history.csv").string(), res.history, provenance(cfg));
    write_history_json((out / "history.json").string(), res.history, provenance(cfg));

    std::ofstream log(out / "run.log");
    for (const auto& [k, v] : provenance(cfg)) log << k << "=" << v << "\n";
    double wall = 0.0;
    for (const EpochStats& e : res.history.epochs) wall += e.wall_seconds;
    log << "epochs_run=" << res.history.epochs.size() << "\n"
        << "best_epoch=" << res.history.best_epoch << "\n"
        << "best_train_regret=" << format_number(res.history.best_train_regret) << "\n"
        << "final_test_regret=" << format_number(res.history.final_test_regret) << "\n"
        << "final_test_mse=" << format_number(res.history.final_test_mse) << "\n"
        << "skipped_instances=" << res.history.skipped_instances << "\n"
        << "wall_seconds=" << format_number(wall) << "\n";

    std::cout << "trained " << pipeline_name(cfg.pipeline) << "/" << case_name(cfg.case_id)
              << ": best_epoch=" << res.history.best_epoch
              << " test_regret=" << format_number(res.history.final_test_regret)
              << " test_mse=" << format_number(res.history.final_test_mse) << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- compare ----

Dataset dataset_for(const TrainingConfig& cfg, const std::string& dataset_flag) {
    if (!dataset_flag.empty()) return load_csv(dataset_flag);
    if (!cfg.dataset_csv.empty()) return load_csv(cfg.dataset_csv);
    SynthOptions opts;
    opts.seed = cfg.seed;
    opts.days = cfg.days;
    opts.zone_count = cfg.zone_count;
    opts.base_load = cfg.base_load;
    if (cfg.case_id == CaseId::kDcopf1h)
        opts.base_reactances = load_grid_file(cfg.fleet_path).topology.reactances();
    return synth_generate(opts);
}

int cmd_compare(const std::string& ilo_path, const std::string& slo_path,
                const std::string& dataset_flag, const std::string& family,
                const std::string& out_path) {
    const Checkpoint ilo = load_checkpoint(ilo_path);
    const Checkpoint slo = load_checkpoint(slo_path);
    if (ilo.config.case_id != slo.config.case_id)
        throw ConfigError("checkpoints were trained on different cases");

    Experiment exp = prepare_experiment(ilo.config);
    const Dataset full = dataset_for(ilo.config, dataset_flag);
    auto [train_set, test_set] = split(full, ilo.config.split);

    const std::string preset_family =
        family.empty() ? (ilo.config.case_id == CaseId::kDcopf1h ? "case2" : "table1") : family;

    CsvWriter csv(out_path);
    for (const auto& [k, v] : provenance(ilo.config)) csv.comment(k + "=" + v);
    csv.header({"setting", "regret_ilo_train", "regret_ilo_test", "regret_slo_train",
                "regret_slo_test"});
    for (const std::string& name : penalty_preset_family(preset_family)) {
        const PenaltySetting pen = penalty_preset(name, exp.grid.fleet.size());
        const double mu = ilo.config.mu_eval;
        const EvalMetrics ilo_train = evaluate(ilo.models, train_set, exp, mu, &pen);
        const EvalMetrics ilo_test = evaluate(ilo.models, test_set, exp, mu, &pen);
        const EvalMetrics slo_train = evaluate(slo.models, train_set, exp, mu, &pen);
        const EvalMetrics slo_test = evaluate(slo.models, test_set, exp, mu, &pen);
        csv.row({name, format_number(ilo_train.mean_regret), format_number(ilo_test.mean_regret),
                 format_number(slo_train.mean_regret), format_number(slo_test.mean_regret)});
        std::cout << name << ": ilo " << format_number(ilo_test.mean_regret) << " vs slo "
                  << format_number(slo_test.mean_regret) << " (test)\n";
    }
    return kExitOk;
}

// ------------------------------------------------------------- simulate ----

int cmd_simulate(const std::string& ckpt_path, const std::string& dataset_flag,
                 const std::string& report_dir) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    ensure_dir(report_dir);
    const fs::path out(report_dir);

    Experiment exp = prepare_experiment(ckpt.config);
    const Dataset full = dataset_for(ckpt.config, dataset_flag);
    auto [train_set, test_set] = split(full, ckpt.config.split);
    const Dataset& ds = test_set;
    const PenaltySetting& pen = exp.penalties;
    const bool dcopf = ckpt.config.case_id == CaseId::kDcopf1h;
    BarrierOptions opts;
    opts.mu_target = ckpt.config.mu_eval;

    const int n_gen = exp.grid.fleet.size();
    std::vector<std::string> settle_cols{"timestamp", "total_paid", "up_paid", "down_paid",
                                         "ext_paid"};
    for (int g = 1; g <= n_gen; ++g) {
        settle_cols.push_back("g" + std::to_string(g) + "_up_mw");
        settle_cols.push_back("g" + std::to_string(g) + "_down_mw");
    }
    CsvWriter settlement((out / "settlement.csv").string());
    for (const auto& [k, v] : provenance(ckpt.config)) settlement.comment(k + "=" + v);
    settlement.header(settle_cols);

    std::optional<CsvWriter> congestion, opcost, impedance;
    if (dcopf) {
        congestion.emplace((out / "congestion.csv").string());
        opcost.emplace((out / "opcost.csv").string());
        impedance.emplace((out / "impedance.csv").string());
        for (const auto& [k, v] : provenance(ckpt.config)) {
            congestion->comment(k + "=" + v);
            opcost->comment(k + "=" + v);
            impedance->comment(k + "=" + v);
        }
        congestion->header({"timestamp", "violation_count", "max_violation_mw",
                            "max_utilization"});
        opcost->header({"timestamp", "cost_dcopf_pred_ptdf", "cost_ed", "gap", "relative_gap",
                        "flow_case"});
        std::vector<std::string> cols{"timestamp"};
        for (int l = 1; l <= exp.grid.topology.line_count(); ++l)
            cols.push_back("x_" + std::to_string(l));
        impedance->header(cols);
    }

    const IncidenceSet inc = dcopf ? build_incidence(exp.grid.topology) : IncidenceSet{};
    double total_settlement = 0.0;
    int parity_hours = 0, congested_hours = 0, failed_hours = 0, hours = 0;

    // Hourly evaluation units: the day-ahead head predicts a whole 24-hour
    // window from the window's first-hour context.
    struct HourPair {
        std::int64_t timestamp;
        int sample_index;
        double pred_total;  // ED cases only
    };
    std::vector<HourPair> hour_pairs;
    if (ckpt.config.case_id == CaseId::kEd24h) {
        for (int w = 0; w + 24 <= ds.size(); w += 24) {
            const Eigen::VectorXd day =
                ckpt.models.load_model.forward(ds.samples[w].features).cwiseMax(0.0);
            for (int h = 0; h < 24; ++h)
                hour_pairs.push_back({ds.samples[w + h].timestamp, w + h, day[h]});
        }
    } else {
        for (int i = 0; i < ds.size(); ++i) {
            const Eigen::VectorXd raw =
                ckpt.models.load_model.forward(ds.samples[i].features).cwiseMax(0.0);
            hour_pairs.push_back({ds.samples[i].timestamp, i, raw.sum()});
        }
    }

    for (const HourPair& hp : hour_pairs) {
        const ContextSample& s = ds.samples[hp.sample_index];
        ++hours;
        try {
            DispatchSolution sol_pred, sol_true;
            Eigen::VectorXd react;
            if (dcopf) {
                const Eigen::VectorXd zone_pred =
                    ckpt.models.load_model.forward(s.features).cwiseMax(0.0);
                react = ckpt.models.impedance_model->forward(s.features);
                DispatchInstance pred;
                pred.fleet = exp.grid.fleet;
                pred.variant = DispatchVariant::kDcOptimalPowerFlow;
                pred.topology = exp.grid.topology;
                pred.ptdf = build_ptdf(exp.grid.topology, react.cwiseMax(1e-3));
                pred.load = bus_loads(zone_pred, exp.grid);
                sol_pred = solve_instance(pred, opts);

                DispatchInstance truth = pred;
                truth.ptdf = build_ptdf(exp.grid.topology, s.reactances);
                truth.load = bus_loads(s.zone_load, exp.grid);
                sol_true = solve_instance(truth, opts);
            } else {
                DispatchInstance pred;
                pred.fleet = exp.grid.fleet;
                pred.variant = DispatchVariant::kEconomicDispatch;
                pred.load = Eigen::VectorXd::Constant(1, hp.pred_total);
                sol_pred = solve_instance(pred, opts);
                DispatchInstance truth = pred;
                truth.load = Eigen::VectorXd::Constant(1, s.zone_load.sum());
                sol_true = solve_instance(truth, opts);
            }

            const SettlementReport rep = rtm_settlement(sol_pred, sol_true, exp.prices, pen);
            total_settlement += rep.total;
            std::vector<std::string> row{std::to_string(hp.timestamp),
                                         format_number(rep.total)};
            double up = 0.0, down = 0.0;
            for (const GeneratorSettlement& g : rep.per_generator) {
                up += g.up_paid;
                down += g.down_paid;
            }
            row.push_back(format_number(up));
            row.push_back(format_number(down));
            row.push_back(format_number(rep.external.up_paid + rep.external.down_paid));
            for (const GeneratorSettlement& g : rep.per_generator) {
                row.push_back(format_number(g.up_mw));
                row.push_back(format_number(g.down_mw));
            }
            settlement.row(row);

            if (dcopf) {
                // hour-ahead scheduling quality of the PTDF at the true load
                DispatchInstance sched;
                sched.fleet = exp.grid.fleet;
                sched.variant = DispatchVariant::kDcOptimalPowerFlow;
                sched.topology = exp.grid.topology;
                sched.ptdf = build_ptdf(exp.grid.topology, react.cwiseMax(1e-3));
                sched.load = bus_loads(s.zone_load, exp.grid);
                const DispatchSolution sol_sched = solve_instance(sched, opts);
                DispatchInstance ed = sched;
                ed.variant = DispatchVariant::kEconomicDispatch;
                ed.topology.reset();
                ed.ptdf.reset();
                ed.load = Eigen::VectorXd::Constant(1, sched.load.sum());
                const DispatchSolution sol_ed = solve_instance(ed, opts);
                const CostComparison cmp = operational_cost_comparison(sol_sched, sol_ed);
                parity_hours += std::abs(cmp.relative_gap) <= 1e-4;

                // realized flows of the scheduled dispatch on the true network
                const PtdfMatrix true_ptdf = build_ptdf(exp.grid.topology, s.reactances);
                const Eigen::VectorXd injections = inc.gen_map * sol_sched.p_star +
                                                   inc.ext_map * sol_sched.s_star - sched.load;
                const Eigen::VectorXd realized = line_flows(true_ptdf, injections);
                const CongestionReport crep = congestion_report(
                    realized, exp.grid.topology.limits_min(), exp.grid.topology.limits_max());
                congested_hours += crep.violation_count > 0;
                double max_util = 0.0;
                for (const LineReport& lr : crep.lines)
                    max_util = std::max(max_util, lr.utilization);
                congestion->row({std::to_string(s.timestamp),
                                 std::to_string(crep.violation_count),
                                 format_number(crep.max_violation_mw),
                                 format_number(max_util)});

                const FlowCase fc = classify_flow_case(
                    realized, exp.grid.topology.limits_min(), exp.grid.topology.limits_max(),
                    sol_sched.objective, sol_ed.objective);
                const char* fc_name =
                    fc == FlowCase::kViolatingSuboptimal   ? "violating-suboptimal"
                    : fc == FlowCase::kViolatingOptimal    ? "violating-optimal"
                    : fc == FlowCase::kFeasibleSuboptimal  ? "feasible-suboptimal"
                                                           : "feasible-optimal";
                opcost->row({std::to_string(s.timestamp), format_number(cmp.cost_predicted_dcopf),
                             format_number(cmp.cost_ed), format_number(cmp.gap),
                             format_number(cmp.relative_gap), fc_name});

                std::vector<std::string> xrow{std::to_string(s.timestamp)};
                for (int l = 0; l < react.size(); ++l) xrow.push_back(format_number(react[l]));
                impedance->row(xrow);
            }
        } catch (const Error& e) {
            ++failed_hours;
            std::cerr << "[simulate] hour " << s.timestamp << " failed: " << e.what() << "\n";
        }
    }

    nlohmann::json summary;
    for (const auto& [k, v] : provenance(ckpt.config)) summary["config"][k] = v;
    summary["hours"] = hours;
    summary["failed_hours"] = failed_hours;
    summary["total_settlement"] = total_settlement;
    summary["mean_settlement"] = hours > failed_hours
                                     ? total_settlement / (hours - failed_hours)
                                     : 0.0;
    if (dcopf) {
        summary["parity_hours"] = parity_hours;
        summary["parity_fraction"] =
            hours > failed_hours ? double(parity_hours) / (hours - failed_hours) : 0.0;
        summary["congested_hours"] = congested_hours;
    }
    std::ofstream sj(out / "summary.json");
    if (!sj) throw ConfigError("cannot write summary.json");
    sj << summary.dump(2) << "\n";

    std::cout << "simulated " << hours << " hours, mean settlement "
              << format_number(summary["mean_settlement"].get<double>());
    if (dcopf)
        std::cout << ", parity fraction "
                  << format_number(summary["parity_fraction"].get<double>());
    std::cout << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- synth ----

int cmd_synth(std::uint64_t seed, int days, int zones, double base,
              const std::string& network, const std::string& out_path) {
    SynthOptions opts;
    opts.seed = seed;
    opts.days = days;
    opts.zone_count = zones;
    opts.base_load = base;
    if (!network.empty()) opts.base_reactances = load_grid_file(network).topology.reactances();
    write_csv(synth_generate(opts), out_path);
    std::cout << "wrote " << days * 24 << " hourly samples to " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"decision-focused training for economic dispatch and DCOPF"};
    app.require_subcommand(1);

    std::string pipeline_flag, case_flag, config_path, out_flag;
    CLI::App* train = app.add_subcommand("train", "train a prediction model");
    train->add_option("--pipeline", pipeline_flag, "ilo or slo")
        ->check(CLI::IsMember({"ilo", "slo"}));
    train->add_option("--case", case_flag, "ed-1h, ed-24h or dcopf")
        ->check(CLI::IsMember({"ed-1h", "ed-24h", "dcopf"}));
    train->add_option("--config", config_path, "key = value run configuration");
    train->add_option("--out", out_flag, "output directory");

    std::string ilo_path, slo_path, dataset_flag, family, compare_out = "compare.csv";
    CLI::App* compare = app.add_subcommand("compare", "ILO vs SLO regret table");
    compare->add_option("--ilo", ilo_path, "ILO checkpoint")->required();
    compare->add_option("--slo", slo_path, "SLO checkpoint")->required();
    compare->add_option("--dataset", dataset_flag, "dataset CSV (default: resynthesize)");
    compare->add_option("--penalties", family, "preset family: table1 or case2");
    compare->add_option("--out", compare_out, "output CSV path");

    std::string ckpt_path, report_dir;
    CLI::App* simulate = app.add_subcommand("simulate", "real-time-market reports");
    simulate->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    simulate->add_option("--dataset", dataset_flag, "dataset CSV (default: resynthesize)");
    simulate->add_option("--report", report_dir, "report directory")->required();

    std::uint64_t synth_seed = 1;
    int synth_days = 7, synth_zones = 8;
    double synth_base = 1.25;
    std::string synth_network, synth_out = "dataset.csv";
    CLI::App* synth = app.add_subcommand("synth", "write a synthetic dataset CSV");
    synth->add_option("--seed", synth_seed);
    synth->add_option("--days", synth_days);
    synth->add_option("--zones", synth_zones);
    synth->add_option("--base", synth_base, "mean zone load, MW");
    synth->add_option("--network", synth_network, "grid fixture supplying reactance truth");
    synth->add_option("--out", synth_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (train->parsed())
            return cmd_train(*train, pipeline_flag, case_flag, config_path, out_flag);
        if (compare->parsed())
            return cmd_compare(ilo_path, slo_path, dataset_flag, family, compare_out);
        if (simulate->parsed()) return cmd_simulate(ckpt_path, dataset_flag, report_dir);
        if (synth->parsed())
            return cmd_synth(synth_seed, synth_days, synth_zones, synth_base, synth_network,
                             synth_out);
    } catch (const TrainingAbortError& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return kExitTrainingAbort;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
