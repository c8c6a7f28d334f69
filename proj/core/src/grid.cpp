#include "gridlearn/grid.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace gridlearn {

namespace {
constexpr double kPivotTol = 1e-10;
}

Eigen::VectorXd NetworkTopology::reactances() const {
    Eigen::VectorXd x(line_count());
    for (int l = 0; l < line_count(); ++l) x[l] = lines[l].reactance;
    return x;
}

Eigen::VectorXd NetworkTopology::limits_min() const {
    Eigen::VectorXd v(line_count());
    for (int l = 0; l < line_count(); ++l) v[l] = lines[l].limit_min;
    return v;
}

Eigen::VectorXd NetworkTopology::limits_max() const {
    Eigen::VectorXd v(line_count());
    for (int l = 0; l < line_count(); ++l) v[l] = lines[l].limit_max;
    return v;
}

bool NetworkTopology::connected() const {
    if (bus_count <= 0) return false;
    if (bus_count == 1) return true;
    std::vector<std::vector<int>> adj(bus_count);
    for (const Line& ln : lines) {
        adj[ln.from].push_back(ln.to);
        adj[ln.to].push_back(ln.from);
    }
    std::vector<char> seen(bus_count, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        int b = stack.back();
        stack.pop_back();
        for (int nb : adj[b]) {
            if (!seen[nb]) {
                seen[nb] = 1;
                ++reached;
                stack.push_back(nb);
            }
        }
    }
    return reached == bus_count;
}

namespace {

// Everything except connectivity; build_ptdf lets a disconnected graph
// surface as a singular reduced susceptance matrix instead.
void validate_structure(const NetworkTopology& t) {
    if (t.bus_count < 1) throw InvalidTopologyError("topology has no buses");
    if (t.slack_bus < 0 || t.slack_bus >= t.bus_count)
        throw InvalidTopologyError("slack bus index out of range");
    if (t.ext_bus < 0 || t.ext_bus >= t.bus_count)
        throw InvalidTopologyError("external tie bus index out of range");
    for (const Line& ln : t.lines) {
        if (ln.from < 0 || ln.from >= t.bus_count || ln.to < 0 || ln.to >= t.bus_count)
            throw InvalidTopologyError("line endpoint out of range");
        if (ln.from == ln.to) throw InvalidTopologyError("line connects a bus to itself");
        if (!(ln.reactance > 0.0)) throw InvalidTopologyError("line reactance must be positive");
        if (!(ln.limit_min <= 0.0 && 0.0 <= ln.limit_max))
            throw InvalidTopologyError("line limits must bracket zero");
    }
    for (int b : t.gen_bus) {
        if (b < 0 || b >= t.bus_count)
            throw InvalidTopologyError("generator mapped to nonexistent bus");
    }
}

IncidenceSet incidence_unchecked(const NetworkTopology& topology) {
    IncidenceSet inc;
    inc.gen_map = Eigen::MatrixXd::Zero(topology.bus_count, topology.gen_count());
    for (int g = 0; g < topology.gen_count(); ++g) inc.gen_map(topology.gen_bus[g], g) = 1.0;
    inc.ext_map = Eigen::VectorXd::Zero(topology.bus_count);
    inc.ext_map[topology.ext_bus] = 1.0;
    inc.line_bus = Eigen::MatrixXd::Zero(topology.line_count(), topology.bus_count);
    for (int l = 0; l < topology.line_count(); ++l) {
        inc.line_bus(l, topology.lines[l].from) = 1.0;
        inc.line_bus(l, topology.lines[l].to) = -1.0;
    }
    return inc;
}

}  // namespace

void NetworkTopology::validate() const {
    validate_structure(*this);
    if (!connected()) throw InvalidTopologyError("network graph is not connected");
}

void GeneratorFleet::validate() const {
    if (cost.size() == 0) throw InvalidTopologyError("fleet is empty");
    if (p_min.size() != cost.size() || p_max.size() != cost.size())
        throw InvalidTopologyError("fleet vectors have inconsistent sizes");
    for (int i = 0; i < size(); ++i) {
        if (!(cost[i] > 0.0)) throw InvalidTopologyError("generator cost must be positive");
        if (p_min[i] > p_max[i]) throw InvalidTopologyError("p_min exceeds p_max");
    }
}

IncidenceSet build_incidence(const NetworkTopology& topology) {
    topology.validate();
    return incidence_unchecked(topology);
}

PtdfMatrix build_ptdf(const NetworkTopology& topology, const Eigen::VectorXd& reactances) {
    validate_structure(topology);
    if (reactances.size() != topology.line_count())
        throw InvalidTopologyError("reactance vector length does not match line count");
    if (topology.line_count() > 0 && reactances.minCoeff() <= 0.0)
        throw InvalidTopologyError("reactances must be strictly positive");

    const int n_bus = topology.bus_count;
    const int n_line = topology.line_count();
    PtdfMatrix ptdf;
    ptdf.slack_bus = topology.slack_bus;
    ptdf.entries = Eigen::MatrixXd::Zero(n_line, n_bus);
    if (n_line == 0) return ptdf;

    const IncidenceSet inc = incidence_unchecked(topology);
    const Eigen::VectorXd susceptance = reactances.cwiseInverse();

    // Drop the slack column, invert the reduced susceptance matrix.
    Eigen::MatrixXd incidence_red(n_line, n_bus - 1);
    int col = 0;
    for (int b = 0; b < n_bus; ++b) {
        if (b == topology.slack_bus) continue;
        incidence_red.col(col++) = inc.line_bus.col(b);
    }
    const Eigen::MatrixXd weighted = susceptance.asDiagonal() * incidence_red;
    const Eigen::MatrixXd b_red = incidence_red.transpose() * weighted;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(b_red);
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    if (pivots.size() == 0 || pivots.minCoeff() < kPivotTol * std::max(1.0, pivots.maxCoeff()))
        throw SingularNetworkError("reduced susceptance matrix is singular");

    const Eigen::MatrixXd t_red = weighted * lu.inverse();
    col = 0;
    for (int b = 0; b < n_bus; ++b) {
        if (b == topology.slack_bus) continue;
        ptdf.entries.col(b) = t_red.col(col++);
    }
    return ptdf;
}

Eigen::VectorXd line_flows(const PtdfMatrix& ptdf, const Eigen::VectorXd& injections) {
    if (injections.size() != ptdf.bus_count())
        throw InvalidTopologyError("injection vector length does not match bus count");
    return ptdf.entries * injections;
}

namespace {

int parse_bus_id(const std::string& token, int bus_count, const std::string& path, int lineno) {
    int id = 0;
    try {
        id = std::stoi(token);
    } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(lineno) + ": bad bus id '" + token + "'");
    }
    if (id < 1 || id > bus_count)
        throw DataError(path + ":" + std::to_string(lineno) + ": bus id " + token +
                        " out of range 1.." + std::to_string(bus_count));
    return id - 1;  // files are 1-based
}

}  // namespace

GridFixture load_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open grid fixture: " + path);

    GridFixture fx;
    std::vector<double> gen_cost, gen_pmin, gen_pmax;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ss(raw);
        std::string kind;
        if (!(ss >> kind)) continue;

        auto fail = [&](const std::string& msg) -> DataError {
            return DataError(path + ":" + std::to_string(lineno) + ": " + msg);
        };

        if (kind == "buses") {
            if (!(ss >> fx.topology.bus_count)) throw fail("expected bus count");
        } else if (kind == "slack") {
            std::string tok;
            if (!(ss >> tok)) throw fail("expected slack bus id");
            fx.topology.slack_bus = parse_bus_id(tok, fx.topology.bus_count, path, lineno);
        } else if (kind == "ext") {
            std::string tok;
            double cost = 0.0;
            if (!(ss >> tok >> cost)) throw fail("expected: ext <bus> <cost>");
            fx.topology.ext_bus = parse_bus_id(tok, fx.topology.bus_count, path, lineno);
            fx.fleet.ext_cost = cost;
        } else if (kind == "line") {
            std::string from, to;
            double x = 0.0, limit = 0.0;
            if (!(ss >> from >> to >> x >> limit)) throw fail("expected: line <from> <to> <x> <limit>");
            Line ln;
            ln.from = parse_bus_id(from, fx.topology.bus_count, path, lineno);
            ln.to = parse_bus_id(to, fx.topology.bus_count, path, lineno);
            ln.reactance = x;
            ln.limit_min = -limit;
            ln.limit_max = limit;
            fx.topology.lines.push_back(ln);
        } else if (kind == "gen") {
            std::string bus;
            double cost = 0.0, pmin = 0.0, pmax = 0.0;
            if (!(ss >> bus >> cost >> pmin >> pmax))
                throw fail("expected: gen <bus> <cost> <pmin> <pmax>");
            fx.topology.gen_bus.push_back(parse_bus_id(bus, fx.topology.bus_count, path, lineno));
            gen_cost.push_back(cost);
            gen_pmin.push_back(pmin);
            gen_pmax.push_back(pmax);
        } else if (kind == "zone") {
            std::string bus;
            if (!(ss >> bus)) throw fail("expected: zone <bus>");
            fx.zone_bus.push_back(parse_bus_id(bus, fx.topology.bus_count, path, lineno));
        } else {
            throw fail("unknown record kind '" + kind + "'");
        }
    }
    if (fx.topology.bus_count < 1) throw DataError(path + ": missing 'buses' record");
    if (gen_cost.empty()) throw DataError(path + ": no generators");

    const int n = static_cast<int>(gen_cost.size());
    fx.fleet.cost = Eigen::Map<Eigen::VectorXd>(gen_cost.data(), n);
    fx.fleet.p_min = Eigen::Map<Eigen::VectorXd>(gen_pmin.data(), n);
    fx.fleet.p_max = Eigen::Map<Eigen::VectorXd>(gen_pmax.data(), n);

    fx.topology.validate();
    fx.fleet.validate();
    return fx;
}

}  // namespace gridlearn
