#include "gridlearn/regret.hpp"

#include <array>
#include <cmath>

namespace gridlearn {

namespace {
constexpr double kKink = 1e-9;  // indicator threshold for the max(.,0) forms
}

PriceBook PriceBook::from_fleet(const GeneratorFleet& fleet) {
    PriceBook pb;
    pb.mcp = fleet.cost;
    pb.mcp_ext = fleet.ext_cost;
    pb.bid_price = fleet.cost;
    pb.offer_price = fleet.cost;
    return pb;
}

void PriceBook::imply_bid_offer(const PenaltySetting& penalties) {
    bid_price = penalties.phi_up.cwiseProduct(mcp);
    offer_price = mcp.cwiseQuotient(penalties.phi_down);
}

void PriceBook::validate() const {
    if (bid_price.size() != mcp.size() || offer_price.size() != mcp.size())
        throw ConfigError("price book vectors have inconsistent sizes");
    for (int i = 0; i < mcp.size(); ++i)
        if (!(bid_price[i] >= mcp[i] && mcp[i] >= offer_price[i]))
            throw ConfigError("price ordering BP >= MCP >= OP violated");
}

void PenaltySetting::validate() const {
    if (phi_up.size() != phi_down.size()) throw ConfigError("penalty vectors size mismatch");
    for (int i = 0; i < phi_up.size(); ++i)
        if (!(phi_up[i] >= phi_down[i] && phi_down[i] >= 1.0))
            throw ConfigError("penalty ordering phi_up >= phi_down >= 1 violated");
    if (!(phi_up_ext >= phi_down_ext && phi_down_ext >= 1.0))
        throw ConfigError("external penalty ordering violated");
}

namespace {

// Per-generator (phi_down, phi_up) rows for the five table1 settings, G1..G5.
constexpr std::array<std::array<std::array<double, 2>, 5>, 5> kTable1 = {{
    {{{1.00, 1.00}, {1.00, 1.00}, {1.00, 1.00}, {1.00, 1.00}, {1.00, 1.00}}},
    {{{1.05, 1.10}, {1.10, 1.20}, {1.15, 1.25}, {1.20, 1.30}, {1.25, 1.35}}},
    {{{1.10, 1.20}, {1.15, 1.30}, {1.20, 1.35}, {1.25, 1.40}, {1.30, 1.45}}},
    {{{1.20, 1.35}, {1.25, 1.45}, {1.30, 1.55}, {1.35, 1.65}, {1.40, 1.75}}},
    {{{1.35, 1.65}, {1.40, 1.75}, {1.45, 1.85}, {1.50, 1.95}, {1.55, 2.05}}},
}};

// Uniform (phi_down, phi_up) pairs for the five case2 settings.
constexpr std::array<std::array<double, 2>, 5> kCase2 = {{
    {1.00, 1.00},
    {1.02, 1.06},
    {1.05, 1.10},
    {1.08, 1.15},
    {1.12, 1.22},
}};

int parse_setting_index(const std::string& name, const std::string& family) {
    const std::string prefix = family + "-settings";
    if (name.rfind(prefix, 0) != 0 || name.size() != prefix.size() + 1)
        return -1;
    const char c = name.back();
    if (c < '1' || c > '5') return -1;
    return c - '1';
}

}  // namespace

PenaltySetting penalty_preset(const std::string& name, int gen_count) {
    PenaltySetting s;
    s.name = name;
    s.phi_up.resize(gen_count);
    s.phi_down.resize(gen_count);

    if (int idx = parse_setting_index(name, "table1"); idx >= 0) {
        if (gen_count != 5)
            throw ConfigError("table1 presets are defined for 5 generators, got " +
                              std::to_string(gen_count));
        for (int g = 0; g < 5; ++g) {
            s.phi_down[g] = kTable1[idx][g][0];
            s.phi_up[g] = kTable1[idx][g][1];
        }
        // External trades carry the costliest unit's factors.
        s.phi_down_ext = kTable1[idx][4][0];
        s.phi_up_ext = kTable1[idx][4][1];
        s.validate();
        return s;
    }
    if (int idx = parse_setting_index(name, "case2"); idx >= 0) {
        s.phi_down.setConstant(kCase2[idx][0]);
        s.phi_up.setConstant(kCase2[idx][1]);
        s.phi_down_ext = kCase2[idx][0];
        s.phi_up_ext = kCase2[idx][1];
        s.validate();
        return s;
    }
    throw ConfigError("unknown penalty preset: " + name);
}

std::vector<std::string> penalty_preset_family(const std::string& family) {
    if (family != "table1" && family != "case2")
        throw ConfigError("unknown penalty preset family: " + family);
    std::vector<std::string> names;
    for (int i = 1; i <= 5; ++i) names.push_back(family + "-settings" + std::to_string(i));
    return names;
}

RampCorrection ramp_correction(const DispatchSolution& sol_pred,
                               const DispatchSolution& sol_true) {
    if (sol_pred.p_star.size() != sol_true.p_star.size())
        throw ConfigError("ramp correction requires matching fleet dimensions");
    RampCorrection c;
    c.r_down = (sol_pred.p_star - sol_true.p_star).cwiseMax(0.0);
    c.r_up = (sol_true.p_star - sol_pred.p_star).cwiseMax(0.0);
    c.s_down = std::max(sol_pred.s_star - sol_true.s_star, 0.0);
    c.s_up = std::max(sol_true.s_star - sol_pred.s_star, 0.0);
    return c;
}

RegretValue ed_regret(const RampCorrection& corr, const PriceBook& prices,
                      const PenaltySetting& penalties) {
    RegretValue v;
    v.up_cost = penalties.phi_up.cwiseProduct(prices.mcp).dot(corr.r_up);
    v.down_cost = penalties.phi_down.cwiseProduct(prices.mcp).dot(corr.r_down);
    v.ext_cost = penalties.phi_up_ext * prices.mcp_ext * corr.s_up +
                 penalties.phi_down_ext * prices.mcp_ext * corr.s_down;
    v.regularization = 0.0;
    v.total = v.up_cost + v.down_cost + v.ext_cost;
    return v;
}

RegretValue dcopf_regret(const RampCorrection& corr, const Eigen::VectorXd& load_pred,
                         const Eigen::VectorXd& load_true, const PriceBook& prices,
                         const PenaltySetting& penalties, double reg_weight) {
    if (load_pred.size() != load_true.size())
        throw ConfigError("load vectors must have equal length");
    RegretValue v = ed_regret(corr, prices, penalties);
    const Eigen::VectorXd d_over = (load_pred - load_true).cwiseMax(0.0);
    const Eigen::VectorXd d_under = (load_true - load_pred).cwiseMax(0.0);
    v.regularization = reg_weight * (d_over.sum() + d_under.sum());
    v.total += v.regularization;
    return v;
}

DispatchCostGradient dispatch_cost_gradient(const RampCorrection& corr, const PriceBook& prices,
                                            const PenaltySetting& penalties) {
    DispatchCostGradient g;
    const int n = static_cast<int>(corr.r_up.size());
    g.d_p_pred = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (corr.r_up[i] > kKink) g.d_p_pred[i] -= penalties.phi_up[i] * prices.mcp[i];
        if (corr.r_down[i] > kKink) g.d_p_pred[i] += penalties.phi_down[i] * prices.mcp[i];
    }
    g.d_s_pred = 0.0;
    if (corr.s_up > kKink) g.d_s_pred -= penalties.phi_up_ext * prices.mcp_ext;
    if (corr.s_down > kKink) g.d_s_pred += penalties.phi_down_ext * prices.mcp_ext;
    return g;
}

HourGradient regret_gradient(const LinearProgram& lp_pred, const DispatchSolution& sol_pred,
                             const DispatchSolution& sol_true, const PriceBook& prices,
                             const PenaltySetting& penalties, const Eigen::VectorXd& load_pred,
                             const Eigen::VectorXd& load_true, double reg_weight,
                             int ptdf_bus_count, int ptdf_line_count) {
    const RampCorrection corr = ramp_correction(sol_pred, sol_true);
    const bool with_reg = load_pred.size() > 0;

    HourGradient out;
    out.value = with_reg
                    ? dcopf_regret(corr, load_pred, load_true, prices, penalties, reg_weight)
                    : ed_regret(corr, prices, penalties);

    const DispatchCostGradient cost_grad = dispatch_cost_gradient(corr, prices, penalties);
    const int n_gen = static_cast<int>(sol_pred.p_star.size());

    // Sensitivities of the prediction-side solution w.r.t. every tagged
    // parameter, one KKT backsolve each against a shared factorization.
    BarrierSolution bar;
    bar.x = sol_pred.x;
    bar.mu = sol_pred.mu;
    const Eigen::MatrixXd jac = solution_sensitivity(lp_pred, bar);

    int n_load = 0;
    for (const LpParameter& p : lp_pred.parameters)
        if (p.kind == ParamKind::kLoad) ++n_load;
    out.d_load = Eigen::VectorXd::Zero(n_load);
    if (ptdf_bus_count > 0)
        out.d_ptdf = Eigen::MatrixXd::Zero(ptdf_line_count, ptdf_bus_count);

    int load_slot = 0;
    for (int p = 0; p < static_cast<int>(lp_pred.parameters.size()); ++p) {
        const LpParameter& par = lp_pred.parameters[p];
        const Eigen::VectorXd dx = jac.col(p);
        double g = cost_grad.d_p_pred.dot(dx.head(n_gen)) + cost_grad.d_s_pred * dx[n_gen];
        if (par.kind == ParamKind::kLoad) {
            if (with_reg) {
                const double diff = load_pred[par.index] - load_true[par.index];
                if (diff > kKink) g += reg_weight;
                if (-diff > kKink) g -= reg_weight;
            }
            out.d_load[load_slot++] = g;
        } else {
            const int line = par.index / ptdf_bus_count;
            const int bus = par.index % ptdf_bus_count;
            out.d_ptdf(line, bus) = g;
        }
    }
    return out;
}

}  // namespace gridlearn
