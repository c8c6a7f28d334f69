#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridlearn/errors.hpp"

namespace gridlearn {

/// One transmission line. Buses are 0-based internally; limits bracket zero
/// so the unloaded network is always feasible.
struct Line {
    int from = 0;
    int to = 0;
    double reactance = 0.0;  // per-unit, > 0
    double limit_min = 0.0;  // MW, <= 0
    double limit_max = 0.0;  // MW, >= 0
};

struct NetworkTopology {
    int bus_count = 0;
    std::vector<Line> lines;
    int slack_bus = 0;
    std::vector<int> gen_bus;  // generator -> bus (column map of M)
    int ext_bus = 0;           // bus of the single external tie (column of N)

    int line_count() const { return static_cast<int>(lines.size()); }
    int gen_count() const { return static_cast<int>(gen_bus.size()); }

    /// Reactances of the lines in file order.
    Eigen::VectorXd reactances() const;
    Eigen::VectorXd limits_min() const;
    Eigen::VectorXd limits_max() const;

    bool connected() const;

    /// Throws InvalidTopologyError on any violated invariant.
    void validate() const;
};

struct GeneratorFleet {
    Eigen::VectorXd cost;   // $/MW, > 0
    Eigen::VectorXd p_min;  // MW
    Eigen::VectorXd p_max;  // MW
    double ext_cost = 0.0;  // $/MW for external power

    int size() const { return static_cast<int>(cost.size()); }
    void validate() const;
};

/// Lines x buses matrix mapping net bus injections to DC line flows.
/// The slack column is identically zero.
struct PtdfMatrix {
    Eigen::MatrixXd entries;
    int slack_bus = 0;

    int line_count() const { return static_cast<int>(entries.rows()); }
    int bus_count() const { return static_cast<int>(entries.cols()); }
};

/// Incidence matrices of a topology: M (bus x gen), the N column for the
/// external tie, and the signed line-bus incidence A.
struct IncidenceSet {
    Eigen::MatrixXd gen_map;   // bus_count x gen_count, 0/1
    Eigen::VectorXd ext_map;   // bus_count, one 1 at ext_bus
    Eigen::MatrixXd line_bus;  // line_count x bus_count, +1 at from, -1 at to
};

IncidenceSet build_incidence(const NetworkTopology& topology);

/// T = diag(1/x) * A * inv(A' diag(1/x) A) with the slack column removed
/// before inversion and re-inserted as zeros.
PtdfMatrix build_ptdf(const NetworkTopology& topology, const Eigen::VectorXd& reactances);

/// flows = T * injections. Throws on dimension mismatch.
Eigen::VectorXd line_flows(const PtdfMatrix& ptdf, const Eigen::VectorXd& injections);

/// Fixture file contents: topology + fleet + the zone -> bus assignment.
struct GridFixture {
    NetworkTopology topology;
    GeneratorFleet fleet;
    std::vector<int> zone_bus;  // zone index -> bus index
};

/// Parses the structured-text fixture format (see fixtures/ for the schema).
GridFixture load_grid_file(const std::string& path);

}  // namespace gridlearn
