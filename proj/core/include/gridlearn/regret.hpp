#pragma once

#include <string>

#include <Eigen/Dense>

#include "gridlearn/opt.hpp"

namespace gridlearn {

/// Real-time-market prices. MCP is taken equal to the generator operating
/// costs; bid and offer prices are implied by the penalty factors
/// (bid = phi_up * MCP, offer = MCP / phi_down) and never used on their own.
struct PriceBook {
    Eigen::VectorXd mcp;  // $/MW per generator
    double mcp_ext = 0.0;
    Eigen::VectorXd bid_price;
    Eigen::VectorXd offer_price;

    static PriceBook from_fleet(const GeneratorFleet& fleet);
    void imply_bid_offer(const struct PenaltySetting& penalties);
    void validate() const;  // bid >= mcp >= offer elementwise
};

/// Ramp penalty factors relative to MCP; ramp-up (load underestimation)
/// costs at least as much as ramp-down: phi_up >= phi_down >= 1.
struct PenaltySetting {
    std::string name;
    Eigen::VectorXd phi_up;    // per generator
    Eigen::VectorXd phi_down;  // per generator
    double phi_up_ext = 1.0;
    double phi_down_ext = 1.0;

    void validate() const;
};

/// Named presets: "table1-settings1".."table1-settings5" (per-generator,
/// 5 generators) and "case2-settings1".."case2-settings5" (uniform).
PenaltySetting penalty_preset(const std::string& name, int gen_count);
std::vector<std::string> penalty_preset_family(const std::string& family);

/// Real-time corrections between the prediction-driven and truth-driven
/// dispatch: r_up/r_down per generator, s_up/s_down external, d_over/d_under
/// per zone (DCOPF only; empty otherwise).
struct RampCorrection {
    Eigen::VectorXd r_up;
    Eigen::VectorXd r_down;
    double s_up = 0.0;
    double s_down = 0.0;
    Eigen::VectorXd d_over;
    Eigen::VectorXd d_under;
};

struct RegretValue {
    double total = 0.0;
    double up_cost = 0.0;
    double down_cost = 0.0;
    double ext_cost = 0.0;
    double regularization = 0.0;
};

/// r_down = max(p_pred - p_true, 0), r_up = max(p_true - p_pred, 0); same
/// for the external variable.
RampCorrection ramp_correction(const DispatchSolution& sol_pred, const DispatchSolution& sol_true);

/// L = sum phi_up.mcp.r_up + phi_up_ext.mcp_ext.s_up
///   + sum phi_down.mcp.r_down + phi_down_ext.mcp_ext.s_down.
RegretValue ed_regret(const RampCorrection& corr, const PriceBook& prices,
                      const PenaltySetting& penalties);

/// ED terms plus reg_weight * (1'd_over + 1'd_under) with the deviations
/// computed per zone from the two load vectors.
RegretValue dcopf_regret(const RampCorrection& corr, const Eigen::VectorXd& load_pred,
                         const Eigen::VectorXd& load_true, const PriceBook& prices,
                         const PenaltySetting& penalties, double reg_weight = 1.0);

/// dL/dp*(pred) and dL/ds*(pred) with the max-kinks realized as indicators
/// {difference > 1e-9}; zero sub-gradient at the kink.
struct DispatchCostGradient {
    Eigen::VectorXd d_p_pred;
    double d_s_pred = 0.0;
};
DispatchCostGradient dispatch_cost_gradient(const RampCorrection& corr, const PriceBook& prices,
                                            const PenaltySetting& penalties);

/// Full chain-rule assembly for one hour: regret value plus its gradient
/// w.r.t. the prediction-side LP parameters (loads, and PTDF entries for
/// DCOPF), via the barrier solution sensitivities of lp_pred.
/// load_pred/load_true empty => no load-distribution regularization (ED).
struct HourGradient {
    RegretValue value;
    Eigen::VectorXd d_load;  // one entry per tagged load parameter
    Eigen::MatrixXd d_ptdf;  // lines x buses; 0x0 when no PTDF tags
};
HourGradient regret_gradient(const LinearProgram& lp_pred, const DispatchSolution& sol_pred,
                             const DispatchSolution& sol_true, const PriceBook& prices,
                             const PenaltySetting& penalties,
                             const Eigen::VectorXd& load_pred = {},
                             const Eigen::VectorXd& load_true = {}, double reg_weight = 1.0,
                             int ptdf_bus_count = 0, int ptdf_line_count = 0);

}  // namespace gridlearn
