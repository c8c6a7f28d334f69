#pragma once

#include <Eigen/Dense>

#include "gridlearn/regret.hpp"

namespace gridlearn {

/// Real-time settlement: what the demand participant pays for the ramping
/// needed to correct the prediction-driven dispatch. The total is, by
/// construction, the ED regret of the same inputs.
struct GeneratorSettlement {
    double up_mw = 0.0;
    double down_mw = 0.0;
    double up_paid = 0.0;
    double down_paid = 0.0;
};

struct SettlementReport {
    std::vector<GeneratorSettlement> per_generator;
    GeneratorSettlement external;
    double total = 0.0;
};

SettlementReport rtm_settlement(const DispatchSolution& sol_pred,
                                const DispatchSolution& sol_true, const PriceBook& prices,
                                const PenaltySetting& penalties);

enum class LineStatus { kWithinLimit, kAtLimit, kOverLimit };

struct LineReport {
    double flow = 0.0;
    double limit_min = 0.0;
    double limit_max = 0.0;
    double utilization = 0.0;  // |flow| / applicable limit magnitude
    LineStatus status = LineStatus::kWithinLimit;
};

struct CongestionReport {
    std::vector<LineReport> lines;
    int violation_count = 0;
    double max_violation_mw = 0.0;
};

/// Classifies each line within/at/over its limit with 1e-6 MW tolerance.
CongestionReport congestion_report(const Eigen::VectorXd& flows,
                                   const Eigen::VectorXd& limits_min,
                                   const Eigen::VectorXd& limits_max);

/// Hourly cost pair: DCOPF under a predicted PTDF vs the ED oracle.
/// gap == 0 (to tolerance) means the prediction landed in the region where
/// the line constraints do not bind away the ED optimum.
struct CostComparison {
    double cost_predicted_dcopf = 0.0;
    double cost_ed = 0.0;
    double gap = 0.0;           // cost_predicted_dcopf - cost_ed
    double relative_gap = 0.0;  // gap / max(1, |cost_ed|)
};

CostComparison operational_cost_comparison(const DispatchSolution& dcopf_sol_predicted_ptdf,
                                           const DispatchSolution& ed_oracle_sol);

/// The four feasibility/optimality cases for a prediction-driven flow
/// pattern: limits violated or not x dispatch cost optimal w.r.t. ED or not.
enum class FlowCase {
    kViolatingSuboptimal,
    kViolatingOptimal,
    kFeasibleSuboptimal,
    kFeasibleOptimal,
};

FlowCase classify_flow_case(const Eigen::VectorXd& flows_pred,
                            const Eigen::VectorXd& limits_min, const Eigen::VectorXd& limits_max,
                            double cost_dcopf, double cost_ed, double rel_tol = 1e-6);

/// Empirical half-width of the PTDF perturbation range (along a fixed
/// direction) within which the DCOPF cost still equals the ED optimum,
/// measured by bisection on the perturbation magnitude.
double gray_region_halfwidth(const DispatchInstance& dcopf_instance,
                             const Eigen::MatrixXd& direction, double max_magnitude,
                             double rel_tol = 1e-6, int max_bisections = 40);

}  // namespace gridlearn
