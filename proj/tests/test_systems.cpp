#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "osnet/systems.hpp"

using namespace osnet;

namespace {

SystemSpec rossler(double c) { return {SystemName::rossler, {{"c", c}}}; }
SystemSpec sprott(double nu) { return {SystemName::sprott, {{"nu", nu}}}; }

}  // namespace

TEST_CASE("rossler field evaluates the printed equations") {
    const VectorField f = make_field(rossler(6.0));
    const Vector d = f.eval(Vector{0.0, -9.1238, 0.0});
    CHECK(d[0] == Catch::Approx(9.1238).margin(1e-14));
    CHECK(d[1] == Catch::Approx(-0.91238).margin(1e-14));
    CHECK(d[2] == Catch::Approx(0.1).margin(1e-14));

    const Matrix j = f.jacobian(Vector{0.0, 0.0, 0.0});
    const Matrix expected =
        Matrix::from_rows({{0, -1, -1}, {1, 0.1, 0}, {0, 0, -6}});
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) CHECK(j(i, k) == expected(i, k));
}

TEST_CASE("sprott field evaluates the printed equations") {
    const VectorField f = make_field(sprott(2.1));
    const Vector d = f.eval(Vector{5.7043, 0.0, -2.12778});
    CHECK(d[0] == Catch::Approx(0.0).margin(1e-14));
    CHECK(d[1] == Catch::Approx(-2.12778).margin(1e-14));
    // -nu*z - x + y^2 = 2.1*2.12778 - 5.7043 = -1.235962
    CHECK(d[2] == Catch::Approx(-1.235962).margin(1e-12));
}

TEST_CASE("missing parameters are rejected") {
    SystemSpec bad{SystemName::rossler, {{"nu", 2.0}}};
    CHECK_THROWS_AS(make_field(bad), std::invalid_argument);
}

TEST_CASE("analytic Jacobians match central finite differences") {
    oracles::Rng rng(2718);
    for (const SystemSpec& spec : {rossler(6.0), rossler(18.0), sprott(2.1)}) {
        const VectorField f = make_field(spec);
        for (int trial = 0; trial < 100; ++trial) {
            // states sampled from a box covering the attractors
            const Vector x = rng.vector(3, -25.0, 25.0);
            const Matrix j = f.jacobian(x);
            const double step = 1e-5;
            for (int col = 0; col < 3; ++col) {
                Vector xp = x, xm = x;
                xp[col] += step;
                xm[col] -= step;
                const Vector dp = f.eval(xp);
                const Vector dm = f.eval(xm);
                for (int row = 0; row < 3; ++row) {
                    const double fd = (dp[row] - dm[row]) / (2.0 * step);
                    const double scale = std::max(1.0, std::abs(fd));
                    CHECK(std::abs(j(row, col) - fd) <= 1e-6 * scale);
                }
            }
        }
    }
}

TEST_CASE("paper initial conditions are stored verbatim") {
    const auto r6 = paper_initial_condition(rossler(6.0));
    REQUIRE(r6.has_value());
    CHECK((*r6)[0] == 0.0);
    CHECK((*r6)[1] == -9.1238);
    CHECK((*r6)[2] == 0.0);

    const auto r18 = paper_initial_condition(rossler(18.0));
    REQUIRE(r18.has_value());
    CHECK((*r18)[1] == -22.9049);

    const auto s = paper_initial_condition(sprott(2.1));
    REQUIRE(s.has_value());
    CHECK((*s)[0] == 5.7043);
    CHECK((*s)[1] == 0.0);
    CHECK((*s)[2] == -2.12778);

    CHECK_FALSE(paper_initial_condition(rossler(7.0)).has_value());
    CHECK_FALSE(paper_initial_condition(sprott(2.0)).has_value());
}

TEST_CASE("validation perturbations land on the per-experiment coordinate") {
    const auto r6 = paper_validation_perturbation(rossler(6.0));
    REQUIRE(r6.has_value());
    CHECK((*r6)[0] == 0.0);
    CHECK((*r6)[1] == 0.01);

    const auto s = paper_validation_perturbation(sprott(2.1));
    REQUIRE(s.has_value());
    CHECK((*s)[0] == 0.01);
    CHECK((*s)[1] == 0.0);
}

TEST_CASE("rossler c=6 stays bounded to t=2000") {
    const VectorField f = make_field(rossler(6.0));
    const Trajectory t =
        integrate(f, *paper_initial_condition(rossler(6.0)), 0.0, 2000.0, 0.001);
    CHECK(t.max_norm() < 100.0);
}
