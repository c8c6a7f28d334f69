#include "gridlearn/market.hpp"

#include <cmath>

namespace gridlearn {

namespace {
constexpr double kFlowTol = 1e-6;  // MW, limit classification tolerance
}

SettlementReport rtm_settlement(const DispatchSolution& sol_pred,
                                const DispatchSolution& sol_true, const PriceBook& prices,
                                const PenaltySetting& penalties) {
    const RampCorrection corr = ramp_correction(sol_pred, sol_true);
    SettlementReport rep;
    rep.per_generator.resize(corr.r_up.size());
    for (int g = 0; g < corr.r_up.size(); ++g) {
        GeneratorSettlement& s = rep.per_generator[g];
        s.up_mw = corr.r_up[g];
        s.down_mw = corr.r_down[g];
        s.up_paid = penalties.phi_up[g] * prices.mcp[g] * corr.r_up[g];
        s.down_paid = penalties.phi_down[g] * prices.mcp[g] * corr.r_down[g];
        rep.total += s.up_paid + s.down_paid;
    }
    rep.external.up_mw = corr.s_up;
    rep.external.down_mw = corr.s_down;
    rep.external.up_paid = penalties.phi_up_ext * prices.mcp_ext * corr.s_up;
    rep.external.down_paid = penalties.phi_down_ext * prices.mcp_ext * corr.s_down;
    rep.total += rep.external.up_paid + rep.external.down_paid;
    return rep;
}

CongestionReport congestion_report(const Eigen::VectorXd& flows,
                                   const Eigen::VectorXd& limits_min,
                                   const Eigen::VectorXd& limits_max) {
    if (flows.size() != limits_min.size() || flows.size() != limits_max.size())
        throw ConfigError("flow/limit vector size mismatch");
    CongestionReport rep;
    rep.lines.resize(flows.size());
    for (int l = 0; l < flows.size(); ++l) {
        LineReport& lr = rep.lines[l];
        lr.flow = flows[l];
        lr.limit_min = limits_min[l];
        lr.limit_max = limits_max[l];
        const double bound = flows[l] >= 0.0 ? limits_max[l] : -limits_min[l];
        lr.utilization = bound > 0.0 ? std::abs(flows[l]) / bound : 0.0;
        const double over = std::max(flows[l] - limits_max[l], limits_min[l] - flows[l]);
        if (over > kFlowTol) {
            lr.status = LineStatus::kOverLimit;
            ++rep.violation_count;
            rep.max_violation_mw = std::max(rep.max_violation_mw, over);
        } else if (over > -kFlowTol) {
            lr.status = LineStatus::kAtLimit;
        } else {
            lr.status = LineStatus::kWithinLimit;
        }
    }
    return rep;
}

CostComparison operational_cost_comparison(const DispatchSolution& dcopf_sol_predicted_ptdf,
                                           const DispatchSolution& ed_oracle_sol) {
    CostComparison c;
    c.cost_predicted_dcopf = dcopf_sol_predicted_ptdf.objective;
    c.cost_ed = ed_oracle_sol.objective;
    c.gap = c.cost_predicted_dcopf - c.cost_ed;
    c.relative_gap = c.gap / std::max(1.0, std::abs(c.cost_ed));
    return c;
}

FlowCase classify_flow_case(const Eigen::VectorXd& flows_pred,
                            const Eigen::VectorXd& limits_min, const Eigen::VectorXd& limits_max,
                            double cost_dcopf, double cost_ed, double rel_tol) {
    const CongestionReport rep = congestion_report(flows_pred, limits_min, limits_max);
    const bool violating = rep.violation_count > 0;
    const double rel_gap = (cost_dcopf - cost_ed) / std::max(1.0, std::abs(cost_ed));
    const bool optimal = rel_gap <= rel_tol;
    if (violating) return optimal ? FlowCase::kViolatingOptimal : FlowCase::kViolatingSuboptimal;
    return optimal ? FlowCase::kFeasibleOptimal : FlowCase::kFeasibleSuboptimal;
}

double gray_region_halfwidth(const DispatchInstance& dcopf_instance,
                             const Eigen::MatrixXd& direction, double max_magnitude,
                             double rel_tol, int max_bisections) {
    dcopf_instance.validate();
    if (dcopf_instance.variant != DispatchVariant::kDcOptimalPowerFlow)
        throw ConfigError("gray region is defined for DCOPF instances");

    DispatchInstance ed_view = dcopf_instance;
    ed_view.variant = DispatchVariant::kEconomicDispatch;
    ed_view.topology.reset();
    ed_view.ptdf.reset();
    const double ed_cost = solve_instance(ed_view).objective;

    auto within = [&](double magnitude) {
        DispatchInstance perturbed = dcopf_instance;
        perturbed.ptdf->entries += magnitude * direction;
        perturbed.ptdf->entries.col(perturbed.ptdf->slack_bus).setZero();
        try {
            const double cost = solve_instance(perturbed).objective;
            return (cost - ed_cost) / std::max(1.0, std::abs(ed_cost)) <= rel_tol;
        } catch (const Error&) {
            return false;  // infeasible perturbation is outside the region
        }
    };

    if (!within(0.0)) return 0.0;
    if (within(max_magnitude)) return max_magnitude;
    double lo = 0.0, hi = max_magnitude;
    for (int i = 0; i < max_bisections; ++i) {
        const double mid = 0.5 * (lo + hi);
        (within(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace gridlearn
