#include <doctest.h>

#include "gridlearn/grid.hpp"
#include "support/oracles.hpp"

using namespace gridlearn;

namespace {

NetworkTopology two_bus() {
    NetworkTopology t;
    t.bus_count = 2;
    t.slack_bus = 1;
    t.lines.push_back({0, 1, 0.1, -50.0, 50.0});
    t.gen_bus = {0};
    t.ext_bus = 0;
    return t;
}

NetworkTopology triangle() {
    NetworkTopology t;
    t.bus_count = 3;
    t.slack_bus = 2;
    t.lines.push_back({0, 1, 1.0, -50.0, 50.0});
    t.lines.push_back({0, 2, 1.0, -50.0, 50.0});
    t.lines.push_back({1, 2, 1.0, -50.0, 50.0});
    t.gen_bus = {0};
    t.ext_bus = 0;
    return t;
}

const char* ieee14_path() { return GRIDLEARN_FIXTURE_DIR "/ieee14.grid"; }

}  // namespace

TEST_SUITE_BEGIN("grid");

TEST_CASE("incidence of a 2-bus system with one generator") {
    const IncidenceSet inc = build_incidence(two_bus());
    REQUIRE(inc.gen_map.rows() == 2);
    REQUIRE(inc.gen_map.cols() == 1);
    CHECK(inc.gen_map(0, 0) == 1.0);
    CHECK(inc.gen_map(1, 0) == 0.0);
}

TEST_CASE("incidence sign convention on the triangle") {
    const IncidenceSet inc = build_incidence(triangle());
    Eigen::MatrixXd expected(3, 3);
    expected << 1, -1, 0, 1, 0, -1, 0, 1, -1;
    CHECK((inc.line_bus - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("IEEE-14 fixture incidence rows sum to zero") {
    const GridFixture fx = load_grid_file(ieee14_path());
    const IncidenceSet inc = build_incidence(fx.topology);
    REQUIRE(inc.line_bus.rows() == 20);
    REQUIRE(inc.line_bus.cols() == 14);
    for (int l = 0; l < 20; ++l) CHECK(inc.line_bus.row(l).sum() == doctest::Approx(0.0));
    // every generator contributes exactly one 1 to its column
    for (int g = 0; g < inc.gen_map.cols(); ++g)
        CHECK(inc.gen_map.col(g).sum() == doctest::Approx(1.0));
}

TEST_CASE("generator mapped to a nonexistent bus is rejected") {
    NetworkTopology t = two_bus();
    t.gen_bus = {7};
    CHECK_THROWS_AS(build_incidence(t), InvalidTopologyError);
}

TEST_CASE("2-bus PTDF routes everything over the only line") {
    const NetworkTopology t = two_bus();
    const PtdfMatrix ptdf = build_ptdf(t, t.reactances());
    REQUIRE(ptdf.entries.rows() == 1);
    CHECK(ptdf.entries(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ptdf.entries(0, 1) == 0.0);
}

TEST_CASE("triangle PTDF splits an injection 1/3 - 2/3") {
    const NetworkTopology t = triangle();
    const PtdfMatrix ptdf = build_ptdf(t, t.reactances());
    CHECK(ptdf.entries(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(ptdf.entries(1, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(ptdf.entries(2, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(ptdf.entries.col(t.slack_bus).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("PTDF columns reproduce DC power-flow unit injections") {
    const GridFixture fx = load_grid_file(ieee14_path());
    for (const NetworkTopology& topo : {two_bus(), triangle(), fx.topology}) {
        const Eigen::VectorXd x = topo.reactances();
        const PtdfMatrix ptdf = build_ptdf(topo, x);
        CHECK(ptdf.entries.col(topo.slack_bus).cwiseAbs().maxCoeff() == 0.0);
        for (int b = 0; b < topo.bus_count; ++b) {
            if (b == topo.slack_bus) continue;
            Eigen::VectorXd injection = Eigen::VectorXd::Zero(topo.bus_count);
            injection[b] = 1.0;
            injection[topo.slack_bus] = -1.0;
            const Eigen::VectorXd oracle = oracles::dc_powerflow_flows(topo, x, injection);
            CHECK((ptdf.entries.col(b) - oracle).cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
}

TEST_CASE("PTDF is invariant under a common reactance scaling") {
    const GridFixture fx = load_grid_file(ieee14_path());
    const Eigen::VectorXd x = fx.topology.reactances();
    const PtdfMatrix base = build_ptdf(fx.topology, x);
    for (double alpha : {0.25, 3.0, 117.0}) {
        const PtdfMatrix scaled = build_ptdf(fx.topology, alpha * x);
        CHECK((base.entries - scaled.entries).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("bridge line to a leaf bus carries the whole injection") {
    NetworkTopology path;
    path.bus_count = 3;
    path.slack_bus = 0;
    path.lines.push_back({0, 1, 0.2, -10.0, 10.0});
    path.lines.push_back({1, 2, 0.7, -10.0, 10.0});
    path.gen_bus = {0};
    path.ext_bus = 0;
    const PtdfMatrix ptdf = build_ptdf(path, path.reactances());
    CHECK(std::abs(ptdf.entries(1, 2)) == doctest::Approx(1.0));
}

TEST_CASE("disconnected network raises the singular error") {
    NetworkTopology t;
    t.bus_count = 4;
    t.slack_bus = 0;
    t.lines.push_back({0, 1, 0.1, -10.0, 10.0});
    t.lines.push_back({2, 3, 0.1, -10.0, 10.0});
    t.gen_bus = {0};
    t.ext_bus = 0;
    CHECK_THROWS_AS(build_ptdf(t, t.reactances()), SingularNetworkError);
}

TEST_CASE("line_flows is the PTDF product") {
    const NetworkTopology t = two_bus();
    const PtdfMatrix ptdf = build_ptdf(t, t.reactances());
    CHECK(line_flows(ptdf, Eigen::VectorXd::Zero(2)).cwiseAbs().maxCoeff() == 0.0);
    Eigen::VectorXd inj(2);
    inj << 5.0, -5.0;
    CHECK(line_flows(ptdf, inj)[0] == doctest::Approx(5.0));
    CHECK_THROWS_AS(line_flows(ptdf, Eigen::VectorXd::Zero(3)), InvalidTopologyError);
}

TEST_CASE("IEEE-14 balanced injection matches the power-flow oracle") {
    const GridFixture fx = load_grid_file(ieee14_path());
    const Eigen::VectorXd x = fx.topology.reactances();
    const PtdfMatrix ptdf = build_ptdf(fx.topology, x);
    oracles::TestRng rng(2024);
    Eigen::VectorXd injection(14);
    for (int i = 0; i < 14; ++i) injection[i] = rng.uniform(-20.0, 20.0);
    injection[fx.topology.slack_bus] -= injection.sum();  // balance on the slack
    const Eigen::VectorXd flows = line_flows(ptdf, injection);
    const Eigen::VectorXd oracle = oracles::dc_powerflow_flows(fx.topology, x, injection);
    CHECK((flows - oracle).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("fixture loader validates and reports bad records") {
    const GridFixture fx = load_grid_file(ieee14_path());
    CHECK(fx.topology.bus_count == 14);
    CHECK(fx.topology.line_count() == 20);
    CHECK(fx.fleet.size() == 7);
    CHECK(fx.zone_bus.size() == 8);
    CHECK(fx.fleet.ext_cost == doctest::Approx(800.0));
    CHECK_THROWS_AS(load_grid_file("/nonexistent/file.grid"), DataError);
}

TEST_SUITE_END();
