#include "gridlearn/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "gridlearn/report.hpp"

namespace gridlearn {

std::string pipeline_name(Pipeline p) { return p == Pipeline::kIlo ? "ilo" : "slo"; }

Pipeline pipeline_from_name(const std::string& name) {
    if (name == "ilo") return Pipeline::kIlo;
    if (name == "slo") return Pipeline::kSlo;
    throw ConfigError("unknown pipeline: " + name);
}

std::string case_name(CaseId c) {
    switch (c) {
        case CaseId::kEd1h: return "ed-1h";
        case CaseId::kEd24h: return "ed-24h";
        case CaseId::kDcopf1h: return "dcopf";
    }
    throw ConfigError("unknown case");
}

CaseId case_from_name(const std::string& name) {
    if (name == "ed-1h") return CaseId::kEd1h;
    if (name == "ed-24h") return CaseId::kEd24h;
    if (name == "dcopf") return CaseId::kDcopf1h;
    throw ConfigError("unknown case: " + name);
}

void TrainingConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(lr_load > 0.0) || !(lr_ptdf > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(mu_train > 0.0) || !(mu_eval > 0.0)) throw ConfigError("mu must be positive");
    if (zone_count < 1) throw ConfigError("zone_count must be >= 1");
    if (fleet_path.empty()) throw ConfigError("config is missing the grid fixture path (fleet)");
}

TrainingConfig default_config(Pipeline pipeline, CaseId case_id) {
    TrainingConfig cfg;
    cfg.pipeline = pipeline;
    cfg.case_id = case_id;
    switch (case_id) {
        case CaseId::kEd1h:
            cfg.lr_load = 5e-3;
            cfg.epochs = pipeline == Pipeline::kIlo ? 100 : 250;
            cfg.mu_train = 1e-9;
            cfg.split = SplitSpec{5, 2, SplitUnit::kDays};
            cfg.days = 7;
            cfg.base_load = 1.25;
            cfg.penalty_preset = "table1-settings1";
            break;
        case CaseId::kEd24h:
            cfg.lr_load = pipeline == Pipeline::kIlo ? 1e-4 : 1e-3;
            cfg.epochs = 100;
            cfg.mu_train = 1e-7;
            cfg.split = SplitSpec{6, 3, SplitUnit::kWindows};
            cfg.days = 9;
            cfg.base_load = 1.25;
            cfg.penalty_preset = "table1-settings1";
            break;
        case CaseId::kDcopf1h:
            cfg.lr_load = pipeline == Pipeline::kIlo ? 3e-4 : 5e-3;
            cfg.lr_ptdf = pipeline == Pipeline::kIlo ? 4e-3 : 2e-3;
            cfg.epochs = 100;
            cfg.mu_train = 1e-7;
            cfg.split = SplitSpec{9, 6, SplitUnit::kHours};
            cfg.days = 1;
            cfg.base_load = 18.0;
            cfg.penalty_preset = "case2-settings1";
            break;
    }
    return cfg;
}

TrainingConfig config_from_kv(const KeyValueConfig& kv) {
    const Pipeline pipeline = pipeline_from_name(kv.get_string("pipeline"));
    const CaseId case_id = case_from_name(kv.get_string("case"));
    TrainingConfig cfg = default_config(pipeline, case_id);
    cfg.lr_load = kv.get_double("lr_load", cfg.lr_load);
    cfg.lr_ptdf = kv.get_double("lr_ptdf", cfg.lr_ptdf);
    cfg.epochs = kv.get_int("epochs", cfg.epochs);
    cfg.mu_train = kv.get_double("mu_train", cfg.mu_train);
    cfg.mu_eval = kv.get_double("mu_eval", cfg.mu_eval);
    cfg.penalty_preset = kv.get_string("penalty_preset", cfg.penalty_preset);
    cfg.seed = kv.get_uint64("seed", cfg.seed);
    if (kv.has("split")) cfg.split = SplitSpec::parse(kv.get_string("split"));
    cfg.zone_count = kv.get_int("zone_count", cfg.zone_count);
    cfg.days = kv.get_int("days", cfg.days);
    cfg.base_load = kv.get_double("base_load", cfg.base_load);
    cfg.reg_weight = kv.get_double("reg_weight", cfg.reg_weight);
    cfg.bias_init = kv.get_int("bias_init", cfg.bias_init ? 1 : 0) != 0;
    cfg.fleet_path = kv.get_string("fleet", cfg.fleet_path);
    cfg.dataset_csv = kv.get_string("dataset", cfg.dataset_csv);
    cfg.out_dir = kv.get_string("out", cfg.out_dir);
    cfg.validate();
    return cfg;
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainingConfig& cfg) {
    return {
        {"pipeline", pipeline_name(cfg.pipeline)},
        {"case", case_name(cfg.case_id)},
        {"lr_load", format_number(cfg.lr_load)},
        {"lr_ptdf", format_number(cfg.lr_ptdf)},
        {"epochs", std::to_string(cfg.epochs)},
        {"mu_train", format_number(cfg.mu_train)},
        {"mu_eval", format_number(cfg.mu_eval)},
        {"penalty_preset", cfg.penalty_preset},
        {"seed", std::to_string(cfg.seed)},
        {"split", cfg.split.to_string()},
        {"zone_count", std::to_string(cfg.zone_count)},
        {"days", std::to_string(cfg.days)},
        {"base_load", format_number(cfg.base_load)},
        {"reg_weight", format_number(cfg.reg_weight)},
        {"bias_init", cfg.bias_init ? "1" : "0"},
        {"fleet", cfg.fleet_path},
        {"dataset", cfg.dataset_csv},
        {"out", cfg.out_dir},
    };
}

Experiment prepare_experiment(const TrainingConfig& config) {
    config.validate();
    Experiment exp;
    exp.config = config;
    exp.grid = load_grid_file(config.fleet_path);

    if (config.case_id == CaseId::kDcopf1h &&
        static_cast<int>(exp.grid.zone_bus.size()) != config.zone_count)
        throw ConfigError("fixture zone map does not cover zone_count zones");

    exp.penalties = penalty_preset(config.penalty_preset, exp.grid.fleet.size());
    exp.prices = PriceBook::from_fleet(exp.grid.fleet);
    exp.prices.imply_bid_offer(exp.penalties);
    exp.prices.validate();

    Dataset ds;
    if (!config.dataset_csv.empty()) {
        ds = load_csv(config.dataset_csv);
        if (ds.zone_count != config.zone_count)
            throw ConfigError("dataset zone count does not match config");
    } else {
        SynthOptions opts;
        opts.seed = config.seed;
        opts.days = config.days;
        opts.zone_count = config.zone_count;
        opts.base_load = config.base_load;
        if (config.case_id == CaseId::kDcopf1h)
            opts.base_reactances = exp.grid.topology.reactances();
        ds = synth_generate(opts);
    }
    auto [train_set, test_set] = split(ds, config.split);
    exp.train_set = std::move(train_set);
    exp.test_set = std::move(test_set);
    return exp;
}

namespace {

// One training unit: a single hour, or a 24-hour window for the day-ahead case.
struct InstanceView {
    int first_sample = 0;
    int hour_count = 1;
};

std::vector<InstanceView> make_views(CaseId case_id, const Dataset& ds) {
    std::vector<InstanceView> views;
    if (case_id == CaseId::kEd24h) {
        for (int i = 0; i + 24 <= ds.size(); i += 24) views.push_back({i, 24});
        if (views.empty()) throw ConfigError("ed-24h needs at least one full 24-hour window");
    } else {
        for (int i = 0; i < ds.size(); ++i) views.push_back({i, 1});
    }
    return views;
}

DispatchSolution extract_dispatch(const BarrierSolution& bar, int n_gen) {
    DispatchSolution s;
    s.p_star = bar.x.head(n_gen);
    s.s_star = bar.x[n_gen];
    s.objective = bar.objective;
    s.mu = bar.mu;
    s.x = bar.x;
    s.ineq_multipliers = bar.ineq_multipliers;
    s.eq_multipliers = bar.eq_multipliers;
    return s;
}

// Floor for predicted reactances entering the solver; the gradient is
// masked where the floor binds (same pattern as the load clamp).
constexpr double kReactanceFloor = 1e-3;

// Zero-load dispatch with p_min = 0 has the unique feasible point p = 0,
// s = 0; the barrier problem has no strict interior there, so it is not
// worth a solve. The clamp masks its gradient regardless.
bool zero_load_shortcut_applies(const GeneratorFleet& fleet, double total_load) {
    return total_load <= 1e-9 && fleet.p_min.cwiseAbs().maxCoeff() == 0.0;
}

DispatchSolution zero_load_solution(const GeneratorFleet& fleet, int line_count, double mu) {
    DispatchSolution sol;
    sol.p_star = Eigen::VectorXd::Zero(fleet.size());
    sol.s_star = 0.0;
    sol.objective = 0.0;
    sol.mu = mu;
    if (line_count > 0) sol.flows = Eigen::VectorXd::Zero(line_count);
    return sol;
}

Eigen::VectorXd bus_loads_from_zones(const Eigen::VectorXd& zone_load,
                                     const std::vector<int>& zone_bus, int bus_count) {
    Eigen::VectorXd bus = Eigen::VectorXd::Zero(bus_count);
    for (int z = 0; z < zone_load.size(); ++z) bus[zone_bus[z]] += zone_load[z];
    return bus;
}

/// Shared state for one training or evaluation pass.
struct Engine {
    const Experiment& exp;
    BarrierOptions opts;                 // solver options at the pass's mu
    std::vector<InstanceView> views;
    const Dataset* data = nullptr;
    // Truth-side solutions are model-independent: solved once per pass.
    std::vector<std::vector<DispatchSolution>> truth;
    std::vector<std::vector<Eigen::VectorXd>> truth_bus_load;  // DCOPF only

    Engine(const Experiment& e, const Dataset& ds, double mu) : exp(e) {
        opts.mu_target = mu;
        data = &ds;
        views = make_views(e.config.case_id, ds);
        truth.resize(views.size());
        if (e.config.case_id == CaseId::kDcopf1h) truth_bus_load.resize(views.size());
        for (std::size_t v = 0; v < views.size(); ++v) {
            for (int h = 0; h < views[v].hour_count; ++h) {
                const ContextSample& s = ds.samples[views[v].first_sample + h];
                if (e.config.case_id == CaseId::kDcopf1h) {
                    DispatchInstance inst;
                    inst.fleet = e.grid.fleet;
                    inst.variant = DispatchVariant::kDcOptimalPowerFlow;
                    inst.topology = e.grid.topology;
                    inst.ptdf = build_ptdf(e.grid.topology, s.reactances);
                    inst.load = bus_loads_from_zones(s.zone_load, e.grid.zone_bus,
                                                     e.grid.topology.bus_count);
                    truth_bus_load[v].push_back(inst.load);
                    truth[v].push_back(solve_instance(inst, opts));
                } else {
                    DispatchInstance inst;
                    inst.fleet = e.grid.fleet;
                    inst.variant = DispatchVariant::kEconomicDispatch;
                    inst.load = Eigen::VectorXd::Constant(1, s.zone_load.sum());
                    truth[v].push_back(solve_instance(inst, opts));
                }
            }
        }
    }

    const ContextSample& sample(const InstanceView& v, int h = 0) const {
        return data->samples[v.first_sample + h];
    }

    Eigen::VectorXd target_of(const InstanceView& v) const {
        switch (exp.config.case_id) {
            case CaseId::kEd1h:
                return Eigen::VectorXd::Constant(1, sample(v).zone_load.sum());
            case CaseId::kEd24h: {
                Eigen::VectorXd t(24);
                for (int h = 0; h < 24; ++h) t[h] = sample(v, h).zone_load.sum();
                return t;
            }
            case CaseId::kDcopf1h:
                return sample(v).zone_load;
        }
        throw ConfigError("unknown case");
    }
};

struct InstanceOutcome {
    double regret = 0.0;
    double mse = 0.0;
    ModelGradients g_load;
    ModelGradients g_imp;
};

/// Forward + solve + regret (+ gradients when want_grads) for one view.
InstanceOutcome eval_instance(const Engine& eng, std::size_t view_idx,
                              const PredictionModel& load_model,
                              const PredictionModel* imp_model, bool want_grads,
                              const PenaltySetting& penalties) {
    const Experiment& exp = eng.exp;
    const InstanceView& view = eng.views[view_idx];
    InstanceOutcome out;

    if (exp.config.case_id == CaseId::kDcopf1h) {
        const ContextSample& s = eng.sample(view);
        const Eigen::VectorXd zone_raw = load_model.forward(s.features);
        const Eigen::VectorXd zone_pred = zone_raw.cwiseMax(0.0);
        const Eigen::VectorXd react_raw = imp_model->forward(s.features);
        const Eigen::VectorXd reactances = react_raw.cwiseMax(kReactanceFloor);
        const NetworkTopology& topo = exp.grid.topology;

        DispatchInstance inst;
        inst.fleet = exp.grid.fleet;
        inst.variant = DispatchVariant::kDcOptimalPowerFlow;
        inst.topology = topo;
        inst.ptdf = build_ptdf(topo, reactances);
        inst.load = bus_loads_from_zones(zone_pred, exp.grid.zone_bus, topo.bus_count);

        const DispatchSolution& sol_true = eng.truth[view_idx][0];
        const Eigen::VectorXd& bus_true = eng.truth_bus_load[view_idx][0];
        if (zero_load_shortcut_applies(exp.grid.fleet, inst.load.sum())) {
            const DispatchSolution sol_pred =
                zero_load_solution(exp.grid.fleet, topo.line_count(), eng.opts.mu_target);
            const RampCorrection corr = ramp_correction(sol_pred, sol_true);
            out.regret = dcopf_regret(corr, inst.load, bus_true, exp.prices, penalties,
                                      exp.config.reg_weight)
                             .total;
            if (want_grads) {
                out.g_load = load_model.zero_gradients();
                out.g_imp = imp_model->zero_gradients();
            }
            return out;
        }

        const LinearProgram lp = assemble_dcopf(inst);
        const BarrierSolution bar = solve_barrier(lp, eng.opts);
        const DispatchSolution sol_pred = extract_dispatch(bar, exp.grid.fleet.size());

        const Eigen::VectorXd zone_err = zone_raw - s.zone_load;
        const Eigen::VectorXd react_err = react_raw - s.reactances;
        out.mse = zone_err.squaredNorm() / zone_err.size() +
                  react_err.squaredNorm() / react_err.size();

        if (!want_grads) {
            const RampCorrection corr = ramp_correction(sol_pred, sol_true);
            out.regret = dcopf_regret(corr, inst.load, bus_true, exp.prices, penalties,
                                      exp.config.reg_weight)
                             .total;
            return out;
        }

        // Differentiating at a degenerate vertex: raise mu and retry.
        HourGradient hg;
        DispatchSolution sol_for_value = sol_pred;
        bool have = false;
        for (double mu : {eng.opts.mu_target, std::max(eng.opts.mu_target * 1e3, 1e-6), 1e-5}) {
            try {
                BarrierOptions retry = eng.opts;
                retry.mu_target = mu;
                const BarrierSolution b2 =
                    mu == eng.opts.mu_target ? bar : solve_barrier(lp, retry);
                const DispatchSolution sp = extract_dispatch(b2, exp.grid.fleet.size());
                hg = regret_gradient(lp, sp, sol_true, exp.prices, penalties, inst.load,
                                     bus_true, exp.config.reg_weight, topo.bus_count,
                                     topo.line_count());
                have = true;
                break;
            } catch (const DegenerateSensitivityError&) {
                continue;
            }
        }
        if (!have) throw DegenerateSensitivityError("sensitivity degenerate at all mu levels");
        const RampCorrection corr = ramp_correction(sol_for_value, sol_true);
        out.regret = dcopf_regret(corr, inst.load, bus_true, exp.prices, penalties,
                                  exp.config.reg_weight)
                         .total;

        Eigen::VectorXd d_zone(zone_raw.size());
        for (int z = 0; z < zone_raw.size(); ++z)
            d_zone[z] = zone_raw[z] > 0.0 ? hg.d_load[exp.grid.zone_bus[z]] : 0.0;
        Eigen::VectorXd d_react = ptdf_pullback(topo, reactances, hg.d_ptdf);
        for (int l = 0; l < d_react.size(); ++l)
            if (react_raw[l] <= kReactanceFloor) d_react[l] = 0.0;
        out.g_load = load_model.backward(s.features, d_zone);
        out.g_imp = imp_model->backward(s.features, d_react);
        return out;
    }

    // ED hourly / windowed cases.
    const ContextSample& first = eng.sample(view);
    const Eigen::VectorXd raw = load_model.forward(first.features);
    const Eigen::VectorXd target = eng.target_of(view);
    out.mse = (raw - target).squaredNorm() / target.size();

    Eigen::VectorXd d_out = Eigen::VectorXd::Zero(raw.size());
    for (int h = 0; h < view.hour_count; ++h) {
        const double pred_total = std::max(raw[h], 0.0);
        if (zero_load_shortcut_applies(exp.grid.fleet, pred_total)) {
            const DispatchSolution sol_pred =
                zero_load_solution(exp.grid.fleet, 0, eng.opts.mu_target);
            const RampCorrection corr = ramp_correction(sol_pred, eng.truth[view_idx][h]);
            out.regret += ed_regret(corr, exp.prices, penalties).total;
            continue;  // clamped: no gradient flows
        }
        DispatchInstance inst;
        inst.fleet = exp.grid.fleet;
        inst.variant = DispatchVariant::kEconomicDispatch;
        inst.load = Eigen::VectorXd::Constant(1, pred_total);
        const LinearProgram lp = assemble_ed(inst);
        const BarrierSolution bar = solve_barrier(lp, eng.opts);
        const DispatchSolution sol_pred = extract_dispatch(bar, exp.grid.fleet.size());
        const DispatchSolution& sol_true = eng.truth[view_idx][h];

        if (want_grads) {
            HourGradient hg;
            bool have = false;
            for (double mu :
                 {eng.opts.mu_target, std::max(eng.opts.mu_target * 1e3, 1e-6), 1e-5}) {
                try {
                    BarrierOptions retry = eng.opts;
                    retry.mu_target = mu;
                    const BarrierSolution b2 =
                        mu == eng.opts.mu_target ? bar : solve_barrier(lp, retry);
                    const DispatchSolution sp = extract_dispatch(b2, exp.grid.fleet.size());
                    hg = regret_gradient(lp, sp, sol_true, exp.prices, penalties);
                    have = true;
                    break;
                } catch (const DegenerateSensitivityError&) {
                    continue;
                }
            }
            if (!have)
                throw DegenerateSensitivityError("sensitivity degenerate at all mu levels");
            const RampCorrection corr = ramp_correction(sol_pred, sol_true);
            out.regret += ed_regret(corr, exp.prices, penalties).total;
            d_out[h] = raw[h] > 0.0 ? hg.d_load[0] : 0.0;
        } else {
            const RampCorrection corr = ramp_correction(sol_pred, sol_true);
            out.regret += ed_regret(corr, exp.prices, penalties).total;
        }
    }
    if (want_grads) out.g_load = load_model.backward(first.features, d_out);
    return out;
}

/// Deterministic output-bias seeding: the last-layer bias starts at the mean
/// training target so the first epochs refine shape instead of crossing the
/// whole load scale.
void seed_output_bias(PredictionModel& model, const Eigen::VectorXd& mean_target,
                      bool inverse_softplus) {
    ModelGradients g = model.zero_gradients();
    Eigen::VectorXd bias = mean_target;
    if (inverse_softplus)
        for (int i = 0; i < bias.size(); ++i)
            bias[i] = bias[i] + std::log1p(-std::exp(-bias[i]));  // softplus^-1
    g.biases.back() = -bias;  // sgd with lr 1 sets b = target
    model.sgd_step(g, 1.0);
}

struct LossGradients {
    ModelGradients g_load;
    ModelGradients g_imp;
};

/// MSE loss gradients for the SLO pipeline (no LP in the path).
LossGradients slo_gradients(const Engine& eng, const InstanceView& view,
                            const PredictionModel& load_model,
                            const PredictionModel* imp_model) {
    const ContextSample& first = eng.sample(view);
    const Eigen::VectorXd raw = load_model.forward(first.features);
    const Eigen::VectorXd target = eng.target_of(view);
    const Eigen::VectorXd d_out = 2.0 * (raw - target) / static_cast<double>(target.size());
    LossGradients g;
    g.g_load = load_model.backward(first.features, d_out);
    if (imp_model != nullptr) {
        const Eigen::VectorXd react = imp_model->forward(first.features);
        const Eigen::VectorXd d_react =
            2.0 * (react - first.reactances) / static_cast<double>(react.size());
        g.g_imp = imp_model->backward(first.features, d_react);
    }
    return g;
}

TrainResult run_training(const Experiment& exp, Pipeline pipeline,
                         const TrainedModels* initial) {
    const TrainingConfig& cfg = exp.config;
    Engine eng(exp, exp.train_set, cfg.mu_train);

    std::vector<Eigen::VectorXd> train_features;
    for (const InstanceView& v : eng.views) train_features.push_back(eng.sample(v).features);
    const FeatureScaler scaler = FeatureScaler::fit(train_features);

    const int feat_dim = exp.train_set.feature_dim();
    OutputHead load_head = OutputHead::kLoadScalar;
    if (cfg.case_id == CaseId::kEd24h) load_head = OutputHead::kLoad24;
    if (cfg.case_id == CaseId::kDcopf1h) load_head = OutputHead::kLoadZones;
    const int load_dim = head_output_dim(load_head, cfg.zone_count, 0);

    PredictionModel load_model(feat_dim, load_head, load_dim, cfg.seed + 1);
    load_model.set_scaler(scaler);
    if (cfg.bias_init) {
        Eigen::VectorXd mean_target = Eigen::VectorXd::Zero(load_dim);
        for (const InstanceView& v : eng.views) mean_target += eng.target_of(v);
        mean_target /= static_cast<double>(eng.views.size());
        seed_output_bias(load_model, mean_target, false);
    }

    std::optional<PredictionModel> imp_model;
    if (cfg.case_id == CaseId::kDcopf1h) {
        const int n_line = exp.grid.topology.line_count();
        imp_model.emplace(feat_dim, OutputHead::kImpedance20, n_line, cfg.seed + 2);
        imp_model->set_scaler(scaler);
        if (cfg.bias_init) {
            Eigen::VectorXd mean_react = Eigen::VectorXd::Zero(n_line);
            for (const InstanceView& v : eng.views) mean_react += eng.sample(v).reactances;
            mean_react /= static_cast<double>(eng.views.size());
            seed_output_bias(*imp_model, mean_react, true);
        }
    }
    if (initial != nullptr) {
        load_model = initial->load_model;
        imp_model = initial->impedance_model;
    }

    TrainResult result;
    TrainingHistory& hist = result.history;
    double best_metric = std::numeric_limits<double>::infinity();
    PredictionModel best_load = load_model;
    std::optional<PredictionModel> best_imp = imp_model;
    hist.best_epoch = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        ModelGradients g_load = load_model.zero_gradients();
        ModelGradients g_imp;
        if (imp_model) g_imp = imp_model->zero_gradients();

        double sum_regret = 0.0, sum_mse = 0.0;
        int ok = 0, skipped = 0;
        for (std::size_t v = 0; v < eng.views.size(); ++v) {
            try {
                InstanceOutcome out =
                    eval_instance(eng, v, load_model, imp_model ? &*imp_model : nullptr,
                                  pipeline == Pipeline::kIlo, exp.penalties);
                if (pipeline == Pipeline::kSlo) {
                    LossGradients lg = slo_gradients(eng, eng.views[v], load_model,
                                                     imp_model ? &*imp_model : nullptr);
                    out.g_load = std::move(lg.g_load);
                    out.g_imp = std::move(lg.g_imp);
                }
                g_load.add_scaled(out.g_load, 1.0);
                if (imp_model) g_imp.add_scaled(out.g_imp, 1.0);
                sum_regret += out.regret;
                sum_mse += out.mse;
                ++ok;
            } catch (const Error& e) {
                ++skipped;
                std::cerr << "[train] epoch " << epoch << " instance " << v
                          << " skipped: " << e.what() << "\n";
            }
        }
        hist.skipped_instances += skipped;
        if (skipped * 10 > static_cast<int>(eng.views.size()))
            throw TrainingAbortError("more than 10% of instances failed in epoch " +
                                     std::to_string(epoch));
        if (ok == 0) throw TrainingAbortError("no instance evaluated in epoch");

        EpochStats stats;
        stats.mean_regret = sum_regret / ok;
        stats.mean_mse = sum_mse / ok;

        const double metric = pipeline == Pipeline::kIlo ? stats.mean_regret : stats.mean_mse;
        if (metric < best_metric) {
            best_metric = metric;
            hist.best_epoch = epoch;
            hist.best_train_regret = stats.mean_regret;
            best_load = load_model;
            best_imp = imp_model;
        }

        g_load.scale(1.0 / ok);
        load_model.sgd_step(g_load, cfg.lr_load);
        if (imp_model) {
            g_imp.scale(1.0 / ok);
            imp_model->sgd_step(g_imp, cfg.lr_ptdf);
        }

        stats.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        hist.epochs.push_back(stats);
    }

    result.models.load_model = std::move(best_load);
    result.models.impedance_model = std::move(best_imp);

    const EvalMetrics test = evaluate(result.models, exp.test_set, exp, cfg.mu_eval);
    hist.final_test_regret = test.mean_regret;
    hist.final_test_mse = test.mean_mse;
    return result;
}

}  // namespace

TrainResult train_ilo(const Experiment& experiment, const TrainedModels* initial) {
    if (experiment.config.pipeline != Pipeline::kIlo)
        throw ConfigError("train_ilo called with a non-ILO config");
    return run_training(experiment, Pipeline::kIlo, initial);
}

TrainResult train_slo(const Experiment& experiment, const TrainedModels* initial) {
    if (experiment.config.pipeline != Pipeline::kSlo)
        throw ConfigError("train_slo called with a non-SLO config");
    return run_training(experiment, Pipeline::kSlo, initial);
}

EvalMetrics evaluate(const TrainedModels& models, const Dataset& dataset,
                     const Experiment& experiment, double mu_eval,
                     const PenaltySetting* penalties_override) {
    dataset.validate();
    const PenaltySetting& penalties =
        penalties_override != nullptr ? *penalties_override : experiment.penalties;
    Engine eng(experiment, dataset, mu_eval);

    EvalMetrics metrics;
    for (std::size_t v = 0; v < eng.views.size(); ++v) {
        InstanceMetric row;
        row.timestamp = eng.sample(eng.views[v]).timestamp;
        try {
            const InstanceOutcome out = eval_instance(
                eng, v, models.load_model,
                models.impedance_model ? &*models.impedance_model : nullptr, false, penalties);
            row.regret = out.regret;
            row.mse = out.mse;
            metrics.mean_regret += out.regret;
            metrics.mean_mse += out.mse;
            ++metrics.evaluated;
        } catch (const Error&) {
            row.failed = true;
            ++metrics.failed;
        }
        metrics.rows.push_back(row);
    }
    if (metrics.evaluated == 0) throw DataError("no instance could be evaluated");
    metrics.mean_regret /= metrics.evaluated;
    metrics.mean_mse /= metrics.evaluated;
    return metrics;
}

namespace {

nlohmann::json config_to_json(const TrainingConfig& cfg) {
    nlohmann::json j;
    for (const auto& [k, v] : config_entries(cfg)) j[k] = v;
    return j;
}

TrainingConfig config_from_json(const nlohmann::json& j) {
    KeyValueConfig kv;
    for (auto it = j.begin(); it != j.end(); ++it) kv.set(it.key(), it.value().get<std::string>());
    return config_from_kv(kv);
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainingConfig& config,
                     const TrainedModels& models) {
    nlohmann::json j;
    j["version"] = "gridlearn-checkpoint-v1";
    j["config"] = config_to_json(config);
    j["load_model"] = nlohmann::json::parse(models.load_model.to_json());
    if (models.impedance_model)
        j["impedance_model"] = nlohmann::json::parse(models.impedance_model->to_json());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint parse error: ") + e.what());
    }
    if (!j.contains("version") || j["version"] != "gridlearn-checkpoint-v1")
        throw DataError("unsupported checkpoint version: " + path);
    Checkpoint ck;
    ck.config = config_from_json(j["config"]);
    ck.models.load_model = PredictionModel::from_json(j["load_model"].dump());
    if (j.contains("impedance_model"))
        ck.models.impedance_model = PredictionModel::from_json(j["impedance_model"].dump());
    return ck;
}

void write_history_csv(const std::string& path, const TrainingHistory& history,
                       const std::vector<std::pair<std::string, std::string>>& provenance) {
    CsvWriter csv(path);
    for (const auto& [k, v] : provenance) csv.comment(k + "=" + v);
    csv.header({"epoch", "train_regret", "train_mse"});
    for (std::size_t e = 0; e < history.epochs.size(); ++e)
        csv.row({std::to_string(e), format_number(history.epochs[e].mean_regret),
                 format_number(history.epochs[e].mean_mse)});
}

void write_history_json(const std::string& path, const TrainingHistory& history,
                        const std::vector<std::pair<std::string, std::string>>& provenance) {
    nlohmann::json j;
    for (const auto& [k, v] : provenance) j["config"][k] = v;
    j["best_epoch"] = history.best_epoch;
    j["best_train_regret"] = history.best_train_regret;
    j["final_test_regret"] = history.final_test_regret;
    j["final_test_mse"] = history.final_test_mse;
    j["skipped_instances"] = history.skipped_instances;
    nlohmann::json epochs = nlohmann::json::array();
    for (const EpochStats& s : history.epochs) {
        nlohmann::json e;
        e["train_regret"] = s.mean_regret;
        e["train_mse"] = s.mean_mse;
        e["wall_seconds"] = s.wall_seconds;
        epochs.push_back(std::move(e));
    }
    j["epochs"] = std::move(epochs);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write history: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace gridlearn
