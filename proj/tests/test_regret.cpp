#include <doctest.h>

#include "gridlearn/regret.hpp"
#include "support/oracles.hpp"

using namespace gridlearn;

namespace {

GeneratorFleet case1_fleet() {
    return load_grid_file(GRIDLEARN_FIXTURE_DIR "/case1_fleet.grid").fleet;
}

DispatchSolution ed_solve(const GeneratorFleet& fleet, double total_load, double mu = 1e-9) {
    DispatchInstance inst;
    inst.fleet = fleet;
    inst.load = Eigen::VectorXd::Constant(1, total_load);
    inst.variant = DispatchVariant::kEconomicDispatch;
    BarrierOptions opts;
    opts.mu_target = mu;
    return solve_instance(inst, opts);
}

RampCorrection unit_correction(int gen_count, int gen, double up, double down) {
    RampCorrection c;
    c.r_up = Eigen::VectorXd::Zero(gen_count);
    c.r_down = Eigen::VectorXd::Zero(gen_count);
    c.r_up[gen] = up;
    c.r_down[gen] = down;
    return c;
}

}  // namespace

TEST_SUITE_BEGIN("regret");

TEST_CASE("penalty presets: table1 values and ordering") {
    for (const std::string& name : penalty_preset_family("table1")) {
        const PenaltySetting s = penalty_preset(name, 5);
        s.validate();
    }
    const PenaltySetting s2 = penalty_preset("table1-settings2", 5);
    CHECK(s2.phi_down[3] == doctest::Approx(1.2));
    CHECK(s2.phi_up[3] == doctest::Approx(1.3));
    const PenaltySetting s5 = penalty_preset("table1-settings5", 5);
    CHECK(s5.phi_up[4] == doctest::Approx(2.05));
    CHECK_THROWS_AS(penalty_preset("table1-settings9", 5), ConfigError);
    CHECK_THROWS_AS(penalty_preset("table1-settings2", 7), ConfigError);
}

TEST_CASE("penalty presets: case2 values are uniform") {
    const PenaltySetting s3 = penalty_preset("case2-settings3", 7);
    CHECK(s3.phi_down.minCoeff() == doctest::Approx(1.05));
    CHECK(s3.phi_down.maxCoeff() == doctest::Approx(1.05));
    CHECK(s3.phi_up.minCoeff() == doctest::Approx(1.1));
    CHECK(s3.phi_up_ext == doctest::Approx(1.1));
}

TEST_CASE("price book ordering holds for implied bid/offer prices") {
    const GeneratorFleet fleet = case1_fleet();
    PriceBook pb = PriceBook::from_fleet(fleet);
    pb.imply_bid_offer(penalty_preset("table1-settings4", 5));
    pb.validate();
    CHECK(pb.mcp[3] == doctest::Approx(600.0));
    CHECK(pb.bid_price[3] == doctest::Approx(1.65 * 600.0));
    CHECK(pb.offer_price[3] == doctest::Approx(600.0 / 1.35));
}

TEST_CASE("ramp correction of identical solutions is zero") {
    const DispatchSolution sol = ed_solve(case1_fleet(), 10.0);
    const RampCorrection c = ramp_correction(sol, sol);
    CHECK(c.r_up.cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.r_down.cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.s_up == 0.0);
    CHECK(c.s_down == 0.0);
}

TEST_CASE("ramp correction from merit-order shifted loads") {
    const GeneratorFleet fleet = case1_fleet();
    const DispatchSolution pred = ed_solve(fleet, 10.0);  // p = (2,4,3,1,0)
    const DispatchSolution truth = ed_solve(fleet, 9.0);  // p = (2,4,3,0,0)
    const RampCorrection c = ramp_correction(pred, truth);
    CHECK(c.r_down[3] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(c.r_up.cwiseAbs().maxCoeff() <= 1e-6);

    const RampCorrection mirrored = ramp_correction(truth, pred);
    CHECK(mirrored.r_up[3] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(mirrored.r_down.cwiseAbs().maxCoeff() <= 1e-6);
    // complementarity of the max forms
    CHECK((c.r_up.array() * c.r_down.array()).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("the 720/780 asymmetric pair on generator 4, setting 2") {
    const GeneratorFleet fleet = case1_fleet();
    const PriceBook prices = PriceBook::from_fleet(fleet);
    const PenaltySetting penalties = penalty_preset("table1-settings2", 5);

    const RegretValue down = ed_regret(unit_correction(5, 3, 0.0, 1.0), prices, penalties);
    CHECK(down.total == doctest::Approx(720.0));  // 1.2 * 600 * 1

    const RegretValue up = ed_regret(unit_correction(5, 3, 1.0, 0.0), prices, penalties);
    CHECK(up.total == doctest::Approx(780.0));  // 1.3 * 600 * 1
    CHECK(up.total > down.total);
}

TEST_CASE("zero correction has zero regret and the breakdown sums") {
    const GeneratorFleet fleet = case1_fleet();
    const PriceBook prices = PriceBook::from_fleet(fleet);
    const PenaltySetting penalties = penalty_preset("table1-settings3", 5);
    const RegretValue v = ed_regret(unit_correction(5, 2, 0.7, 0.0), prices, penalties);
    CHECK(v.total == doctest::Approx(v.up_cost + v.down_cost + v.ext_cost + v.regularization));
    CHECK(v.total >= 0.0);
    const RegretValue zero = ed_regret(unit_correction(5, 2, 0.0, 0.0), prices, penalties);
    CHECK(zero.total == 0.0);
}

TEST_CASE("mirrored errors: underestimation costs at least as much") {
    const GeneratorFleet fleet = case1_fleet();
    const PriceBook prices = PriceBook::from_fleet(fleet);
    for (const std::string& name : penalty_preset_family("table1")) {
        const PenaltySetting penalties = penalty_preset(name, 5);
        for (int g = 0; g < 5; ++g) {
            const RegretValue over = ed_regret(unit_correction(5, g, 0.0, 0.8), prices, penalties);
            const RegretValue under = ed_regret(unit_correction(5, g, 0.8, 0.0), prices, penalties);
            CHECK(under.total >= over.total - 1e-12);
        }
    }
}

TEST_CASE("dispatch terms are positively homogeneous in the correction") {
    const GeneratorFleet fleet = case1_fleet();
    const PriceBook prices = PriceBook::from_fleet(fleet);
    const PenaltySetting penalties = penalty_preset("table1-settings4", 5);
    RampCorrection c = unit_correction(5, 1, 0.3, 0.0);
    c.r_down[4] = 0.9;
    c.s_up = 0.2;
    const double base = ed_regret(c, prices, penalties).total;
    for (double alpha : {0.0, 0.5, 2.0, 7.5}) {
        RampCorrection scaled = c;
        scaled.r_up *= alpha;
        scaled.r_down *= alpha;
        scaled.s_up *= alpha;
        scaled.s_down *= alpha;
        CHECK(ed_regret(scaled, prices, penalties).total ==
              doctest::Approx(alpha * base).epsilon(1e-12));
    }
}

TEST_CASE("dcopf regret adds the load-distribution regularization") {
    const GeneratorFleet fleet = case1_fleet();
    const PriceBook prices = PriceBook::from_fleet(fleet);
    const PenaltySetting penalties = penalty_preset("table1-settings1", 5);
    const RampCorrection zero = unit_correction(5, 0, 0.0, 0.0);
    Eigen::VectorXd load_true = Eigen::VectorXd::Constant(8, 2.0);
    Eigen::VectorXd load_pred = load_true;
    load_pred[0] += 1.0;
    const RegretValue v = dcopf_regret(zero, load_pred, load_true, prices, penalties);
    CHECK(v.regularization == doctest::Approx(1.0));
    CHECK(v.total == doctest::Approx(1.0));
    const RegretValue exact = dcopf_regret(zero, load_true, load_true, prices, penalties);
    CHECK(exact.total == 0.0);
}

TEST_CASE("zero-sum zone error inside the uncongested region is pure regularization") {
    const GridFixture fx = load_grid_file(GRIDLEARN_FIXTURE_DIR "/ieee14.grid");
    const PriceBook prices = PriceBook::from_fleet(fx.fleet);
    const PenaltySetting penalties = penalty_preset("case2-settings2", fx.fleet.size());

    Eigen::VectorXd zones_true = Eigen::VectorXd::Constant(8, 16.0);
    Eigen::VectorXd zones_pred = zones_true;
    zones_pred[0] += 0.8;  // zero-sum shift: total load unchanged
    zones_pred[5] -= 0.8;

    auto bus_load = [&](const Eigen::VectorXd& zones) {
        Eigen::VectorXd bus = Eigen::VectorXd::Zero(fx.topology.bus_count);
        for (int z = 0; z < zones.size(); ++z) bus[fx.zone_bus[z]] += zones[z];
        return bus;
    };
    DispatchInstance truth;
    truth.fleet = fx.fleet;
    truth.variant = DispatchVariant::kDcOptimalPowerFlow;
    truth.topology = fx.topology;
    truth.ptdf = build_ptdf(fx.topology, fx.topology.reactances());
    truth.load = bus_load(zones_true);
    DispatchInstance pred = truth;
    Eigen::VectorXd perturbed = fx.topology.reactances() * 1.04;  // still within the quiet region
    perturbed[3] *= 1.05;
    pred.ptdf = build_ptdf(fx.topology, perturbed);
    pred.load = bus_load(zones_pred);

    const DispatchSolution sol_true = solve_instance(truth);
    const DispatchSolution sol_pred = solve_instance(pred);
    const RampCorrection corr = ramp_correction(sol_pred, sol_true);
    const RegretValue v = dcopf_regret(corr, pred.load, truth.load, prices, penalties);
    CHECK(v.up_cost + v.down_cost + v.ext_cost <= 1e-3);  // dispatch terms vanish
    CHECK(v.regularization == doctest::Approx(1.6).epsilon(1e-9));
    CHECK(v.total == doctest::Approx(v.regularization).epsilon(1e-3));
}

TEST_CASE("gradient contribution vanishes when prediction equals truth") {
    const GeneratorFleet fleet = case1_fleet();
    const PriceBook prices = PriceBook::from_fleet(fleet);
    const PenaltySetting penalties = penalty_preset("table1-settings2", 5);
    const DispatchSolution sol = ed_solve(fleet, 10.0);
    const DispatchCostGradient g =
        dispatch_cost_gradient(ramp_correction(sol, sol), prices, penalties);
    CHECK(g.d_p_pred.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.d_s_pred == 0.0);
}

TEST_CASE("phi scaling doubles the gradient when regularization is absent") {
    const GeneratorFleet fleet = case1_fleet();
    const PriceBook prices = PriceBook::from_fleet(fleet);
    PenaltySetting penalties = penalty_preset("table1-settings1", 5);
    const DispatchSolution pred = ed_solve(fleet, 10.6, 1e-6);
    const DispatchSolution truth = ed_solve(fleet, 9.4, 1e-6);
    const RampCorrection corr = ramp_correction(pred, truth);

    const DispatchCostGradient g1 = dispatch_cost_gradient(corr, prices, penalties);
    penalties.phi_up *= 2.0;
    penalties.phi_down *= 2.0;
    penalties.phi_up_ext *= 2.0;
    penalties.phi_down_ext *= 2.0;
    const DispatchCostGradient g2 = dispatch_cost_gradient(corr, prices, penalties);
    CHECK((g2.d_p_pred - 2.0 * g1.d_p_pred).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("hour gradient matches finite differences of the ED regret") {
    const GeneratorFleet fleet = case1_fleet();
    const PriceBook prices = PriceBook::from_fleet(fleet);
    const PenaltySetting penalties = penalty_preset("table1-settings3", 5);
    BarrierOptions opts;
    opts.mu_target = 1e-6;

    oracles::TestRng rng(20);
    for (int trial = 0; trial < 6; ++trial) {
        double load_true = rng.uniform(1.0, 17.0);
        double load_pred = load_true + rng.uniform(0.2, 1.2) * (rng.uniform() < 0.5 ? -1 : 1);
        // keep both away from merit-order breakpoints so indicators are stable
        for (double bp : {2.0, 6.0, 9.0, 14.0}) {
            if (std::abs(load_true - bp) < 0.3) load_true += 0.4;
            if (std::abs(load_pred - bp) < 0.3) load_pred += 0.4;
        }
        if (std::abs(load_pred - load_true) < 0.1) load_pred += 0.3;

        DispatchInstance inst;
        inst.fleet = fleet;
        inst.load = Eigen::VectorXd::Constant(1, load_pred);
        inst.variant = DispatchVariant::kEconomicDispatch;
        const LinearProgram lp = assemble_ed(inst);
        const BarrierSolution bar = solve_barrier(lp, opts);
        DispatchSolution sol_pred;
        sol_pred.p_star = bar.x.head(5);
        sol_pred.s_star = bar.x[5];
        sol_pred.x = bar.x;
        sol_pred.mu = bar.mu;
        const DispatchSolution sol_true = ed_solve(fleet, load_true, 1e-6);

        const HourGradient hg = regret_gradient(lp, sol_pred, sol_true, prices, penalties);

        auto regret_at = [&](double load) {
            DispatchInstance shifted = inst;
            shifted.load = Eigen::VectorXd::Constant(1, load);
            const DispatchSolution s = solve_instance(shifted, opts);
            return ed_regret(ramp_correction(s, sol_true), prices, penalties).total;
        };
        const double h = 1e-4;
        const double fd = (regret_at(load_pred + h) - regret_at(load_pred - h)) / (2.0 * h);
        CHECK(std::abs(hg.d_load[0] - fd) <= std::max(5e-3 * std::abs(fd), 1e-4));
    }
}

TEST_SUITE_END();
