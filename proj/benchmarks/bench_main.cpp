#include <benchmark/benchmark.h>

#include "gridlearn/predictor.hpp"
#include "gridlearn/regret.hpp"

using namespace gridlearn;

namespace {

GridFixture case1() { return load_grid_file(GRIDLEARN_FIXTURE_DIR "/case1_fleet.grid"); }
GridFixture ieee14() { return load_grid_file(GRIDLEARN_FIXTURE_DIR "/ieee14.grid"); }

DispatchInstance ed_instance(const GeneratorFleet& fleet, double load) {
    DispatchInstance inst;
    inst.fleet = fleet;
    inst.load = Eigen::VectorXd::Constant(1, load);
    inst.variant = DispatchVariant::kEconomicDispatch;
    return inst;
}

DispatchInstance dcopf_instance(const GridFixture& fx, double zone_load) {
    DispatchInstance inst;
    inst.fleet = fx.fleet;
    inst.variant = DispatchVariant::kDcOptimalPowerFlow;
    inst.topology = fx.topology;
    inst.ptdf = build_ptdf(fx.topology, fx.topology.reactances());
    inst.load = Eigen::VectorXd::Zero(fx.topology.bus_count);
    for (int b : fx.zone_bus) inst.load[b] += zone_load;
    return inst;
}

}  // namespace

static void SolveEd(benchmark::State& state) {
    const GridFixture fx = case1();
    const DispatchInstance inst = ed_instance(fx.fleet, 10.3);
    for (auto _ : state) benchmark::DoNotOptimize(solve_instance(inst).objective);
}
BENCHMARK(SolveEd);

static void SolveDcopf(benchmark::State& state) {
    const GridFixture fx = ieee14();
    const DispatchInstance inst = dcopf_instance(fx, 17.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_instance(inst).objective);
}
BENCHMARK(SolveDcopf);

static void SensitivityDcopf(benchmark::State& state) {
    const GridFixture fx = ieee14();
    const LinearProgram lp = assemble_dcopf(dcopf_instance(fx, 17.0));
    BarrierOptions opts;
    opts.mu_target = 1e-6;
    const BarrierSolution sol = solve_barrier(lp, opts);
    for (auto _ : state) benchmark::DoNotOptimize(solution_sensitivity(lp, sol).sum());
}
BENCHMARK(SensitivityDcopf);

static void BuildPtdf14(benchmark::State& state) {
    const GridFixture fx = ieee14();
    const Eigen::VectorXd x = fx.topology.reactances();
    for (auto _ : state) benchmark::DoNotOptimize(build_ptdf(fx.topology, x).entries.sum());
}
BENCHMARK(BuildPtdf14);

static void PtdfPullback14(benchmark::State& state) {
    const GridFixture fx = ieee14();
    const Eigen::VectorXd x = fx.topology.reactances();
    const Eigen::MatrixXd cot =
        Eigen::MatrixXd::Constant(fx.topology.line_count(), fx.topology.bus_count, 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(ptdf_pullback(fx.topology, x, cot).sum());
}
BENCHMARK(PtdfPullback14);

static void ModelForwardBackward(benchmark::State& state) {
    PredictionModel model(12, OutputHead::kLoadZones, 8, 7);
    const Eigen::VectorXd feats = Eigen::VectorXd::Constant(12, 0.4);
    const Eigen::VectorXd cot = Eigen::VectorXd::Constant(8, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.forward(feats).sum());
        benchmark::DoNotOptimize(model.backward(feats, cot).squared_norm());
    }
}
BENCHMARK(ModelForwardBackward);

static void RegretGradientHour(benchmark::State& state) {
    const GridFixture fx = ieee14();
    const PriceBook prices = PriceBook::from_fleet(fx.fleet);
    const PenaltySetting penalties = penalty_preset("case2-settings3", fx.fleet.size());
    const DispatchInstance truth = dcopf_instance(fx, 17.0);
    DispatchInstance pred = truth;
    pred.load *= 1.05;
    const LinearProgram lp = assemble_dcopf(pred);
    BarrierOptions opts;
    opts.mu_target = 1e-6;
    const BarrierSolution bar = solve_barrier(lp, opts);
    DispatchSolution sol_pred;
    sol_pred.p_star = bar.x.head(fx.fleet.size());
    sol_pred.s_star = bar.x[fx.fleet.size()];
    sol_pred.x = bar.x;
    sol_pred.mu = bar.mu;
    const DispatchSolution sol_true = solve_instance(truth, opts);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            regret_gradient(lp, sol_pred, sol_true, prices, penalties, pred.load, truth.load,
                            1.0, fx.topology.bus_count, fx.topology.line_count())
                .d_ptdf.sum());
    }
}
BENCHMARK(RegretGradientHour);

BENCHMARK_MAIN();
