#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "gridlearn/errors.hpp"
#include "gridlearn/grid.hpp"

namespace gridlearn {

enum class DispatchVariant { kEconomicDispatch, kDcOptimalPowerFlow };

enum class ParamKind { kLoad, kPtdfEntry };

/// Derivative of the LP data with respect to one tagged scalar parameter.
/// d_G is sparse (row, col, value) over the inequality block.
struct LpParameter {
    ParamKind kind = ParamKind::kLoad;
    int index = 0;  // load: zone index; ptdf: line * bus_count + bus
    Eigen::VectorXd d_eq_rhs;
    Eigen::VectorXd d_ineq_rhs;
    std::vector<Eigen::Triplet<double>> d_ineq_lhs;
};

/// min c'x  s.t.  E x = b,  G x <= h.
struct LinearProgram {
    Eigen::VectorXd objective;
    Eigen::MatrixXd eq_lhs;
    Eigen::VectorXd eq_rhs;
    Eigen::MatrixXd ineq_lhs;
    Eigen::VectorXd ineq_rhs;
    std::vector<LpParameter> parameters;
    Eigen::VectorXd interior_start;  // empty: solver runs phase-I

    int var_count() const { return static_cast<int>(objective.size()); }
    int eq_count() const { return static_cast<int>(eq_rhs.size()); }
    int ineq_count() const { return static_cast<int>(ineq_rhs.size()); }

    void validate() const;
};

/// One ED or DCOPF problem. The topology/ptdf pair is present for DCOPF only.
struct DispatchInstance {
    GeneratorFleet fleet;
    Eigen::VectorXd load;  // per-bus MW (ED: per-zone; only the sum enters the LP)
    DispatchVariant variant = DispatchVariant::kEconomicDispatch;
    std::optional<NetworkTopology> topology;
    std::optional<PtdfMatrix> ptdf;

    void validate() const;
};

/// Raw barrier solution of a LinearProgram at coefficient mu.
struct BarrierSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd eq_multipliers;
    Eigen::VectorXd ineq_multipliers;  // z_i = mu / slack_i
    double objective = 0.0;            // c'x
    double mu = 0.0;
    int newton_iterations = 0;
};

struct DispatchSolution {
    Eigen::VectorXd p_star;  // MW per generator
    double s_star = 0.0;     // MW external
    double objective = 0.0;  // $
    Eigen::VectorXd flows;   // MW per line (DCOPF; empty for ED)
    double mu = 0.0;
    Eigen::VectorXd ineq_multipliers;
    Eigen::VectorXd x;  // raw LP variables, kept for sensitivity chaining
    Eigen::VectorXd eq_multipliers;
};

struct BarrierOptions {
    double mu_target = 1e-9;
    double tol = 1e-10;          // residual norm, relative to problem scale
    double mu_initial = 1.0;
    double mu_factor = 0.2;      // geometric reduction per stage
    int max_newton_per_stage = 200;
};

/// Variables (p, s); one power-balance equality; box and s >= 0 inequalities.
/// Each load entry is tagged as a parameter.
LinearProgram assemble_ed(const DispatchInstance& instance);

/// ED constraints plus the two line-flow blocks built from T, M, N, d.
/// Tags both load entries and every non-slack PTDF entry.
LinearProgram assemble_dcopf(const DispatchInstance& instance);

/// Log-barrier interior-point solve down to options.mu_target.
/// Throws InfeasibleError / ConvergenceError.
BarrierSolution solve_barrier(const LinearProgram& lp, const BarrierOptions& options = {});

inline BarrierSolution solve_barrier(const LinearProgram& lp, double mu_target, double tol) {
    BarrierOptions opt;
    opt.mu_target = mu_target;
    opt.tol = tol;
    return solve_barrier(lp, opt);
}

/// Assemble + solve + extract p/s/flows for one dispatch instance.
DispatchSolution solve_instance(const DispatchInstance& instance, const BarrierOptions& options = {});

/// Jacobian of the barrier solution w.r.t. every tagged parameter
/// (var_count x parameter count), by implicit differentiation of the
/// barrier KKT system. One linear solve per parameter against a shared
/// factorization. Throws DegenerateSensitivityError.
Eigen::MatrixXd solution_sensitivity(const LinearProgram& lp, const BarrierSolution& sol);

/// Strictly feasible point via least squares + phase-I; used internally by
/// solve_barrier when the LP carries no interior_start. Exposed for tests.
Eigen::VectorXd find_interior_point(const LinearProgram& lp);

}  // namespace gridlearn
