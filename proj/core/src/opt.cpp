#include "gridlearn/opt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace gridlearn {

namespace {

constexpr double kPivotTol = 1e-10;

/// Primal-dual iterate for one LP. s and z are independent iterates (the
/// per-x slack h - Gx loses all relative accuracy once mu is tiny); the
/// spec's z = mu/(h - Gx) convention is applied when extracting results.
struct PdState {
    Eigen::VectorXd x;
    Eigen::VectorXd s;   // > 0
    Eigen::VectorXd nu;
    Eigen::VectorXd z;   // > 0
};

struct PdResidual {
    Eigen::VectorXd dual;       // c + G'z + E'nu
    Eigen::VectorXd eq;         // Ex - b
    Eigen::VectorXd ineq;       // Gx + s - h
    Eigen::VectorXd centering;  // z.s - mu
    double norm() const {
        return std::sqrt(dual.squaredNorm() + eq.squaredNorm() + ineq.squaredNorm() +
                         centering.squaredNorm());
    }
};

PdResidual pd_residual(const LinearProgram& lp, const PdState& st, double mu) {
    PdResidual r;
    r.dual = lp.objective + lp.ineq_lhs.transpose() * st.z;
    if (lp.eq_count() > 0) r.dual += lp.eq_lhs.transpose() * st.nu;
    r.eq = lp.eq_count() > 0 ? Eigen::VectorXd(lp.eq_lhs * st.x - lp.eq_rhs) : Eigen::VectorXd(0);
    r.ineq = lp.ineq_lhs * st.x + st.s - lp.ineq_rhs;
    r.centering = st.z.cwiseProduct(st.s).array() - mu;
    return r;
}

struct StageTols {
    double dual = 1e-10;
    double primal = 1e-12;
    double centering = 1e-6;  // relative to mu
};

bool pd_feasible_dual_ok(const LinearProgram& lp, const PdResidual& r, const StageTols& t) {
    const double scale_c = 1.0 + lp.objective.cwiseAbs().maxCoeff();
    const double scale_b =
        1.0 + (lp.eq_count() > 0 ? lp.eq_rhs.cwiseAbs().maxCoeff() : 0.0);
    const double scale_h = 1.0 + lp.ineq_rhs.cwiseAbs().maxCoeff();
    if (r.dual.cwiseAbs().maxCoeff() > t.dual * scale_c) return false;
    if (r.eq.size() > 0 && r.eq.cwiseAbs().maxCoeff() > t.primal * scale_b) return false;
    return r.ineq.cwiseAbs().maxCoeff() <= t.primal * scale_h;
}

bool pd_converged(const LinearProgram& lp, const PdResidual& r, double mu, const StageTols& t) {
    if (!pd_feasible_dual_ok(lp, r, t)) return false;
    return r.centering.cwiseAbs().maxCoeff() <= t.centering * mu;
}

/// Degenerate corners (empty strict interior, e.g. a zero-load dispatch)
/// have no central path: x converges to the pinned optimum while the
/// products z.s of the pinned rows stagnate. Accept the point once
/// feasibility and stationarity hold and every row is either gap-bounded
/// (product <= 1.5 mu) or pinned to machine-zero slack.
bool pd_subcentered_ok(const LinearProgram& lp, const PdResidual& r, const PdState& st,
                       double mu, const StageTols& t) {
    if (!pd_feasible_dual_ok(lp, r, t)) return false;
    const double scale_h = 1.0 + lp.ineq_rhs.cwiseAbs().maxCoeff();
    const double scale_c = 1.0 + lp.objective.cwiseAbs().maxCoeff();
    const Eigen::VectorXd slack_true = lp.ineq_rhs - lp.ineq_lhs * st.x;
    if (slack_true.minCoeff() < -1e-12 * scale_h) return false;
    const Eigen::VectorXd products = st.z.cwiseProduct(st.s);
    for (int i = 0; i < products.size(); ++i) {
        // gap-bounded, negligible against the objective scale, or pinned
        if (products[i] <= std::max(1.5 * mu, 1e-8 * scale_c)) continue;
        if (slack_true[i] <= 1e-14 * (1.0 + std::abs(lp.ineq_rhs[i]))) continue;
        return false;
    }
    return true;
}

/// Newton iterations on the perturbed KKT conditions at fixed mu. Strict
/// mode (the final stage) insists on convergence or a recognized degenerate
/// exit; lenient stages hand their best effort to the next mu.
int pd_center(const LinearProgram& lp, double mu, const StageTols& tols, int max_iter,
              PdState& st, bool strict = true) {
    const int n = lp.var_count();
    const int k = lp.eq_count();

    PdResidual res = pd_residual(lp, st, mu);
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        if (pd_converged(lp, res, mu, tols)) return iter;

        const Eigen::VectorXd w = st.z.cwiseQuotient(st.s);
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
        kkt.topLeftCorner(n, n) = lp.ineq_lhs.transpose() * w.asDiagonal() * lp.ineq_lhs;
        if (k > 0) {
            kkt.topRightCorner(n, k) = lp.eq_lhs.transpose();
            kkt.bottomLeftCorner(k, n) = lp.eq_lhs;
        }
        // dz = (z.r_ineq - r_cent - z.G dx)/s folded into the rhs
        Eigen::VectorXd rhs(n + k);
        rhs.head(n) = -res.dual - lp.ineq_lhs.transpose() *
                                      ((st.z.cwiseProduct(res.ineq) - res.centering)
                                           .cwiseQuotient(st.s));
        if (k > 0) rhs.tail(k) = -res.eq;

        const Eigen::VectorXd step = Eigen::PartialPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
        if (!step.allFinite())
            throw ConvergenceError("singular KKT system in Newton step",
                                   res.dual.cwiseAbs().maxCoeff(), res.norm());
        const Eigen::VectorXd dx = step.head(n);
        const Eigen::VectorXd dnu = k > 0 ? Eigen::VectorXd(step.tail(k)) : Eigen::VectorXd(0);
        const Eigen::VectorXd ds = -res.ineq - lp.ineq_lhs * dx;
        const Eigen::VectorXd dz =
            (-res.centering - st.z.cwiseProduct(ds)).cwiseQuotient(st.s);

        double alpha = 1.0;
        for (int i = 0; i < st.s.size(); ++i) {
            if (ds[i] < 0.0) alpha = std::min(alpha, -0.99 * st.s[i] / ds[i]);
            if (dz[i] < 0.0) alpha = std::min(alpha, -0.99 * st.z[i] / dz[i]);
        }
        const double alpha_boundary = alpha;

        const double base_norm = res.norm();
        bool accepted = false;
        for (int bt = 0; bt < 60 && alpha >= 1e-12; ++bt) {
            PdState cand;
            cand.x = st.x + alpha * dx;
            cand.s = st.s + alpha * ds;
            cand.nu = k > 0 ? Eigen::VectorXd(st.nu + alpha * dnu) : st.nu;
            cand.z = st.z + alpha * dz;
            if (cand.s.minCoeff() > 0.0 && cand.z.minCoeff() > 0.0) {
                const PdResidual cres = pd_residual(lp, cand, mu);
                if (cres.norm() <= (1.0 - 0.01 * alpha) * base_norm) {
                    st = std::move(cand);
                    res = cres;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // An iterate pinned at its boundary to machine precision blocks
            // every step; accept provided stationarity and feasibility hold.
            if (alpha_boundary < 1e-10 && pd_feasible_dual_ok(lp, res, tols) &&
                (lp.ineq_rhs - lp.ineq_lhs * st.x).minCoeff() >
                    -1e-12 * (1.0 + lp.ineq_rhs.cwiseAbs().maxCoeff()))
                return iter;
            if (pd_subcentered_ok(lp, res, st, mu, tols)) return iter;
            if (!strict) return iter;
            char diag[256];
            std::snprintf(diag, sizeof(diag),
                          "Newton line search stalled (alpha_b=%.3e dual=%.3e eq=%.3e "
                          "ineq=%.3e slack_min=%.3e prod_max=%.3e mu=%.3e)",
                          alpha_boundary, res.dual.cwiseAbs().maxCoeff(),
                          res.eq.size() ? res.eq.cwiseAbs().maxCoeff() : 0.0,
                          res.ineq.cwiseAbs().maxCoeff(),
                          (lp.ineq_rhs - lp.ineq_lhs * st.x).minCoeff(),
                          st.z.cwiseProduct(st.s).maxCoeff(), mu);
            throw ConvergenceError(diag, res.dual.cwiseAbs().maxCoeff(), res.norm());
        }
    }
    if (!pd_converged(lp, res, mu, tols)) {
        if (pd_subcentered_ok(lp, res, st, mu, tols)) return iter;
        if (!strict) return iter;
        throw ConvergenceError("Newton iteration cap reached", res.dual.cwiseAbs().maxCoeff(),
                               res.norm());
    }
    return iter;
}

}  // namespace

void LinearProgram::validate() const {
    if (var_count() < 1) throw ConfigError("LP has no variables");
    if (eq_lhs.rows() != eq_count() || (eq_count() > 0 && eq_lhs.cols() != var_count()))
        throw ConfigError("LP equality block dimensions inconsistent");
    if (ineq_lhs.rows() != ineq_count() || (ineq_count() > 0 && ineq_lhs.cols() != var_count()))
        throw ConfigError("LP inequality block dimensions inconsistent");
    for (const LpParameter& p : parameters) {
        if (p.d_eq_rhs.size() != 0 && p.d_eq_rhs.size() != eq_count())
            throw ConfigError("parameter d_eq_rhs size mismatch");
        if (p.d_ineq_rhs.size() != 0 && p.d_ineq_rhs.size() != ineq_count())
            throw ConfigError("parameter d_ineq_rhs size mismatch");
        for (const auto& t : p.d_ineq_lhs)
            if (t.row() < 0 || t.row() >= ineq_count() || t.col() < 0 || t.col() >= var_count())
                throw ConfigError("parameter d_ineq_lhs entry out of range");
    }
}

void DispatchInstance::validate() const {
    fleet.validate();
    if (load.size() == 0) throw ConfigError("dispatch instance has no load vector");
    if (load.minCoeff() < 0.0) throw ConfigError("load must be nonnegative");
    if (variant == DispatchVariant::kDcOptimalPowerFlow) {
        if (!topology || !ptdf) throw ConfigError("DCOPF instance requires topology and PTDF");
        if (load.size() != topology->bus_count)
            throw ConfigError("DCOPF load vector must be per-bus");
        if (ptdf->bus_count() != topology->bus_count ||
            ptdf->line_count() != topology->line_count())
            throw ConfigError("PTDF dimensions do not match topology");
    }
}

LinearProgram assemble_ed(const DispatchInstance& instance) {
    instance.validate();
    const int n_gen = instance.fleet.size();
    const int n_var = n_gen + 1;  // (p, s)

    LinearProgram lp;
    lp.objective.resize(n_var);
    lp.objective.head(n_gen) = instance.fleet.cost;
    lp.objective[n_gen] = instance.fleet.ext_cost;

    lp.eq_lhs = Eigen::MatrixXd::Ones(1, n_var);
    lp.eq_rhs = Eigen::VectorXd::Constant(1, instance.load.sum());

    const int n_ineq = 2 * n_gen + 1;
    lp.ineq_lhs = Eigen::MatrixXd::Zero(n_ineq, n_var);
    lp.ineq_rhs.resize(n_ineq);
    for (int g = 0; g < n_gen; ++g) {
        lp.ineq_lhs(g, g) = 1.0;
        lp.ineq_rhs[g] = instance.fleet.p_max[g];
        lp.ineq_lhs(n_gen + g, g) = -1.0;
        lp.ineq_rhs[n_gen + g] = -instance.fleet.p_min[g];
    }
    lp.ineq_lhs(2 * n_gen, n_gen) = -1.0;  // -s <= 0
    lp.ineq_rhs[2 * n_gen] = 0.0;

    for (int z = 0; z < instance.load.size(); ++z) {
        LpParameter par;
        par.kind = ParamKind::kLoad;
        par.index = z;
        par.d_eq_rhs = Eigen::VectorXd::Constant(1, 1.0);
        lp.parameters.push_back(std::move(par));
    }

    lp.interior_start.resize(n_var);
    lp.interior_start.head(n_gen) = 0.5 * (instance.fleet.p_min + instance.fleet.p_max);
    const double balance = instance.load.sum() - lp.interior_start.head(n_gen).sum();
    lp.interior_start[n_gen] = std::max(balance, 1.0) + 1.0;
    return lp;
}

LinearProgram assemble_dcopf(const DispatchInstance& instance) {
    instance.validate();
    if (instance.variant != DispatchVariant::kDcOptimalPowerFlow || !instance.ptdf)
        throw ConfigError("assemble_dcopf requires a DCOPF instance with a PTDF");

    const NetworkTopology& topo = *instance.topology;
    const PtdfMatrix& ptdf = *instance.ptdf;
    const IncidenceSet inc = build_incidence(topo);
    const int n_gen = instance.fleet.size();
    const int n_var = n_gen + 1;
    const int n_line = topo.line_count();
    const int n_bus = topo.bus_count;

    // Start from the ED block; the ED load tags are rebuilt below with the
    // per-bus line-flow contributions included.
    DispatchInstance ed_view = instance;
    ed_view.variant = DispatchVariant::kEconomicDispatch;
    ed_view.topology.reset();
    ed_view.ptdf.reset();
    LinearProgram lp = assemble_ed(ed_view);
    lp.parameters.clear();

    const int base_up = lp.ineq_count();        // T(Mp + Ns - d) <= limit_max
    const int base_dn = base_up + n_line;       // -T(Mp + Ns - d) <= -limit_min
    const Eigen::MatrixXd flow_gen = ptdf.entries * inc.gen_map;   // n_line x n_gen
    const Eigen::VectorXd flow_ext = ptdf.entries * inc.ext_map;   // n_line
    const Eigen::VectorXd flow_load = ptdf.entries * instance.load;

    Eigen::MatrixXd ineq_lhs = Eigen::MatrixXd::Zero(base_dn + n_line, n_var);
    Eigen::VectorXd ineq_rhs(base_dn + n_line);
    ineq_lhs.topRows(base_up) = lp.ineq_lhs;
    ineq_rhs.head(base_up) = lp.ineq_rhs;
    ineq_lhs.block(base_up, 0, n_line, n_gen) = flow_gen;
    ineq_lhs.block(base_up, n_gen, n_line, 1) = flow_ext;
    ineq_rhs.segment(base_up, n_line) = topo.limits_max() + flow_load;
    ineq_lhs.block(base_dn, 0, n_line, n_gen) = -flow_gen;
    ineq_lhs.block(base_dn, n_gen, n_line, 1) = -flow_ext;
    ineq_rhs.segment(base_dn, n_line) = -topo.limits_min() - flow_load;
    lp.ineq_lhs = std::move(ineq_lhs);
    lp.ineq_rhs = std::move(ineq_rhs);

    for (int b = 0; b < n_bus; ++b) {
        LpParameter par;
        par.kind = ParamKind::kLoad;
        par.index = b;
        par.d_eq_rhs = Eigen::VectorXd::Constant(1, 1.0);
        par.d_ineq_rhs = Eigen::VectorXd::Zero(lp.ineq_count());
        for (int l = 0; l < n_line; ++l) {
            par.d_ineq_rhs[base_up + l] = ptdf.entries(l, b);
            par.d_ineq_rhs[base_dn + l] = -ptdf.entries(l, b);
        }
        lp.parameters.push_back(std::move(par));
    }
    for (int l = 0; l < n_line; ++l) {
        for (int b = 0; b < n_bus; ++b) {
            if (b == ptdf.slack_bus) continue;  // structural zero column
            LpParameter par;
            par.kind = ParamKind::kPtdfEntry;
            par.index = l * n_bus + b;
            par.d_ineq_rhs = Eigen::VectorXd::Zero(lp.ineq_count());
            par.d_ineq_rhs[base_up + l] = instance.load[b];
            par.d_ineq_rhs[base_dn + l] = -instance.load[b];
            for (int g = 0; g < n_gen; ++g) {
                if (topo.gen_bus[g] != b) continue;
                par.d_ineq_lhs.emplace_back(base_up + l, g, 1.0);
                par.d_ineq_lhs.emplace_back(base_dn + l, g, -1.0);
            }
            if (topo.ext_bus == b) {
                par.d_ineq_lhs.emplace_back(base_up + l, n_gen, 1.0);
                par.d_ineq_lhs.emplace_back(base_dn + l, n_gen, -1.0);
            }
            lp.parameters.push_back(std::move(par));
        }
    }
    return lp;
}

BarrierSolution solve_barrier(const LinearProgram& lp, const BarrierOptions& options) {
    lp.validate();
    if (lp.ineq_count() < 1)
        throw ConfigError("barrier solve requires at least one inequality");
    const int n = lp.var_count();
    const int k = lp.eq_count();

    PdState st;
    if (lp.interior_start.size() == n &&
        (lp.ineq_rhs - lp.ineq_lhs * lp.interior_start).minCoeff() > 0.0) {
        st.x = lp.interior_start;
    } else {
        st.x = find_interior_point(lp);
    }
    st.s = lp.ineq_rhs - lp.ineq_lhs * st.x;
    st.nu = Eigen::VectorXd::Zero(k);

    StageTols stage;
    stage.dual = std::max(options.tol, 1e-8);
    stage.primal = std::max(options.tol, 1e-12);
    stage.centering = 1e-4;
    StageTols final_stage;
    final_stage.dual = options.tol;
    final_stage.primal = std::min(options.tol, 1e-12);
    final_stage.centering = 1e-8;

    double mu = options.mu_initial;
    st.z = Eigen::VectorXd::Constant(lp.ineq_count(), mu).cwiseQuotient(st.s);
    int total_newton = 0;
    while (true) {
        const bool last = mu <= options.mu_target * (1.0 + 1e-12);
        total_newton += pd_center(lp, mu, last ? final_stage : stage,
                                  options.max_newton_per_stage, st, /*strict=*/last);
        if (last) break;
        mu = std::max(mu * options.mu_factor, options.mu_target);
    }

    BarrierSolution sol;
    sol.x = st.x;
    sol.eq_multipliers = st.nu;
    // z_i = mu / (h_i - g_i x); pinned rows can round to zero slack, floor
    // the division so the multiplier stays finite.
    const Eigen::VectorXd slack =
        (lp.ineq_rhs - lp.ineq_lhs * st.x).cwiseMax(1e-300);
    sol.ineq_multipliers = options.mu_target * slack.cwiseInverse();
    sol.objective = lp.objective.dot(st.x);
    sol.mu = options.mu_target;
    sol.newton_iterations = total_newton;
    return sol;
}

Eigen::VectorXd find_interior_point(const LinearProgram& lp) {
    const int n = lp.var_count();
    const int k = lp.eq_count();
    const double scale_h =
        1.0 + (lp.ineq_count() > 0 ? lp.ineq_rhs.cwiseAbs().maxCoeff() : 0.0);

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    if (k > 0) {
        x0 = lp.eq_lhs.completeOrthogonalDecomposition().solve(lp.eq_rhs);
        const double eq_residual = (lp.eq_lhs * x0 - lp.eq_rhs).cwiseAbs().maxCoeff();
        if (eq_residual > 1e-8 * scale_h)
            throw InfeasibleError("equality constraints are inconsistent", eq_residual);
    }

    const double margin = (lp.ineq_rhs - lp.ineq_lhs * x0).minCoeff();
    if (margin > 1e-9 * scale_h) return x0;

    // Phase-I: min t  s.t.  Gx - t <= h,  -t <= t_cap,  Ex = b.
    const double t0 = -margin + 1.0;
    const double t_cap = t0 + 1.0;
    LinearProgram phase1;
    phase1.objective = Eigen::VectorXd::Zero(n + 1);
    phase1.objective[n] = 1.0;
    if (k > 0) {
        phase1.eq_lhs = Eigen::MatrixXd::Zero(k, n + 1);
        phase1.eq_lhs.leftCols(n) = lp.eq_lhs;
        phase1.eq_rhs = lp.eq_rhs;
    } else {
        phase1.eq_lhs.resize(0, n + 1);
        phase1.eq_rhs.resize(0);
    }
    const int m = lp.ineq_count();
    phase1.ineq_lhs = Eigen::MatrixXd::Zero(m + 1, n + 1);
    phase1.ineq_lhs.topLeftCorner(m, n) = lp.ineq_lhs;
    phase1.ineq_lhs.col(n).head(m).setConstant(-1.0);
    phase1.ineq_lhs(m, n) = -1.0;
    phase1.ineq_rhs.resize(m + 1);
    phase1.ineq_rhs.head(m) = lp.ineq_rhs;
    phase1.ineq_rhs[m] = t_cap;

    PdState st;
    st.x = Eigen::VectorXd::Zero(n + 1);
    st.x.head(n) = x0;
    st.x[n] = t0;
    st.s = phase1.ineq_rhs - phase1.ineq_lhs * st.x;
    st.nu = Eigen::VectorXd::Zero(k);

    StageTols tols;
    tols.dual = 1e-8;
    tols.primal = 1e-10;
    tols.centering = 1e-4;

    double mu = 1.0;
    st.z = Eigen::VectorXd::Constant(m + 1, mu).cwiseQuotient(st.s);
    while (true) {
        pd_center(phase1, mu, tols, 200, st);
        const double t = st.x[n];
        const Eigen::VectorXd candidate = st.x.head(n);
        if (t < -1e-9 * scale_h &&
            (lp.ineq_rhs - lp.ineq_lhs * candidate).minCoeff() > 0.0)
            return candidate;
        if (mu <= 1e-9) break;
        mu = std::max(mu * 0.2, 1e-9);
    }
    throw InfeasibleError("no strictly feasible point found", st.x[n]);
}

DispatchSolution solve_instance(const DispatchInstance& instance, const BarrierOptions& options) {
    const LinearProgram lp = instance.variant == DispatchVariant::kEconomicDispatch
                                 ? assemble_ed(instance)
                                 : assemble_dcopf(instance);
    const BarrierSolution bar = solve_barrier(lp, options);

    const int n_gen = instance.fleet.size();
    DispatchSolution sol;
    sol.p_star = bar.x.head(n_gen);
    sol.s_star = bar.x[n_gen];
    sol.objective = bar.objective;
    sol.mu = bar.mu;
    sol.ineq_multipliers = bar.ineq_multipliers;
    sol.eq_multipliers = bar.eq_multipliers;
    sol.x = bar.x;
    if (instance.variant == DispatchVariant::kDcOptimalPowerFlow) {
        const IncidenceSet inc = build_incidence(*instance.topology);
        const Eigen::VectorXd injections =
            inc.gen_map * sol.p_star + inc.ext_map * sol.s_star - instance.load;
        sol.flows = line_flows(*instance.ptdf, injections);
    }
    return sol;
}

Eigen::MatrixXd solution_sensitivity(const LinearProgram& lp, const BarrierSolution& sol) {
    lp.validate();
    const int n = lp.var_count();
    const int k = lp.eq_count();
    const int n_par = static_cast<int>(lp.parameters.size());

    const Eigen::VectorXd slack = lp.ineq_rhs - lp.ineq_lhs * sol.x;
    if (slack.minCoeff() <= 0.0)
        throw DegenerateSensitivityError("solution is not strictly interior");
    const Eigen::VectorXd z = sol.mu * slack.cwiseInverse();
    const Eigen::VectorXd w = z.cwiseQuotient(slack);  // mu / s^2

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = lp.ineq_lhs.transpose() * w.asDiagonal() * lp.ineq_lhs;
    if (k > 0) {
        kkt.topRightCorner(n, k) = lp.eq_lhs.transpose();
        kkt.bottomLeftCorner(k, n) = lp.eq_lhs;
    }

    // The barrier weights span many decades; equilibrate symmetrically so the
    // pivot test measures rank, not scaling.
    Eigen::VectorXd scale(n + k);
    for (int i = 0; i < n + k; ++i)
        scale[i] = 1.0 / std::sqrt(std::max(kkt.row(i).cwiseAbs().maxCoeff(), 1e-30));
    const Eigen::MatrixXd balanced = scale.asDiagonal() * kkt * scale.asDiagonal();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(balanced);
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    if (pivots.minCoeff() < kPivotTol * std::max(1.0, pivots.maxCoeff()))
        throw DegenerateSensitivityError("KKT matrix singular at solution");

    Eigen::MatrixXd jac(n, n_par);
    for (int p = 0; p < n_par; ++p) {
        const LpParameter& par = lp.parameters[p];

        // d(slack)/dy at fixed x: dh - dG * x.
        Eigen::VectorXd d_slack =
            par.d_ineq_rhs.size() > 0 ? par.d_ineq_rhs : Eigen::VectorXd::Zero(lp.ineq_count());
        Eigen::VectorXd dG_t_z = Eigen::VectorXd::Zero(n);
        for (const auto& t : par.d_ineq_lhs) {
            d_slack[t.row()] -= t.value() * sol.x[t.col()];
            dG_t_z[t.col()] += t.value() * z[t.row()];
        }

        Eigen::VectorXd rhs(n + k);
        rhs.head(n) = -(dG_t_z - lp.ineq_lhs.transpose() * (w.cwiseProduct(d_slack)));
        if (k > 0)
            rhs.tail(k) = par.d_eq_rhs.size() > 0 ? Eigen::VectorXd(par.d_eq_rhs)
                                                  : Eigen::VectorXd::Zero(k);
        const Eigen::VectorXd col =
            scale.cwiseProduct(lu.solve(Eigen::VectorXd(scale.cwiseProduct(rhs))));
        jac.col(p) = col.head(n);
    }
    return jac;
}

}  // namespace gridlearn
