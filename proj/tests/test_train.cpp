#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "osnet/train.hpp"

using namespace osnet;

namespace {

TrainConfig tiny_config(double alpha) {
    TrainConfig cfg;
    cfg.alpha = alpha;
    cfg.epochs = 1;
    cfg.rollout_step = 0.01;
    cfg.lbfgs.inner_iterations = 5;
    return cfg;
}

/// Five snapshots produced by rolling a reference net, so the optimum is
/// exactly representable.
Trajectory tiny_data(const OsNet& source, std::uint64_t seed) {
    oracles::Rng rng(seed);
    const Vector x0 = rng.vector(3, -0.8, 0.8);
    const std::vector<double> times{0.0, 0.05, 0.1, 0.15, 0.2};
    const NetEvaluator eval(source);
    return Trajectory(times, rollout_snapshots(eval, x0, times, 0.01));
}

OsNet tiny_net(std::uint64_t seed) {
    OsNet net = init_osnet(3, 4, {ActivationKind::snake, 0.5}, seed);
    oracles::Rng rng(seed ^ 0xfeed);
    for (int i = 0; i < net.hidden(); ++i) net.b[i] = rng.uniform(-0.3, 0.3);
    return net;
}

Vector flatten(const ParameterGradients& g) {
    std::vector<double> v;
    v.insert(v.end(), g.w.data().begin(), g.w.data().end());
    v.insert(v.end(), g.k.data().begin(), g.k.data().end());
    v.insert(v.end(), g.b.data().begin(), g.b.data().end());
    return Vector(std::move(v));
}

}  // namespace

TEST_CASE("loss") {
    SECTION("a net rolled on its own rollout has zero data loss") {
        const OsNet net = tiny_net(11);
        const Trajectory data = tiny_data(net, 12);
        const TrainConfig cfg = tiny_config(0.5);
        const LossValue v = loss(net, data, cfg);
        CHECK(v.data_loss == 0.0);
        CHECK(v.reg == regularizer(net).value);
        CHECK(v.total == 0.5 * v.reg);
    }

    SECTION("alpha = 0 reduces the total to the data term") {
        const OsNet net = tiny_net(13);
        const Trajectory data = tiny_data(tiny_net(14), 15);
        const LossValue v = loss(net, data, tiny_config(0.0));
        CHECK(v.total == v.data_loss);
        CHECK(v.data_loss > 0.0);
    }

    SECTION("a frozen net scores the data's spread around its start point") {
        OsNet net = tiny_net(16);
        net.K = Matrix::identity(4);  // Omega = 0: the field is zero
        const Trajectory data = tiny_data(tiny_net(17), 18);
        const LossValue v = loss(net, data, tiny_config(0.0));

        double expected = 0.0;
        for (std::size_t k = 1; k < data.size(); ++k) {
            const Vector diff = data.states()[k] - data.states()[0];
            expected += dot(diff, diff);
        }
        expected /= static_cast<double>((data.size() - 1) * 3);
        CHECK(v.data_loss == Catch::Approx(expected).margin(1e-14));
    }

    SECTION("total decomposes exactly") {
        const OsNet net = tiny_net(19);
        const Trajectory data = tiny_data(tiny_net(20), 21);
        const TrainConfig cfg = tiny_config(0.37);
        const LossValue v = loss(net, data, cfg);
        CHECK(v.total == Catch::Approx(v.data_loss + cfg.alpha * v.reg).margin(1e-12));
    }
}

TEST_CASE("adjoint_gradient") {
    SECTION("zero mismatch with alpha = 0 gives near-zero gradients") {
        const OsNet net = tiny_net(31);
        const Trajectory data = tiny_data(net, 32);
        const auto g = adjoint_gradient(net, data, tiny_config(0.0));
        CHECK(norm_inf(flatten(g.gradients)) <= 1e-10);
        CHECK(g.value.data_loss == 0.0);
    }

    SECTION("matches central finite differences of the loss") {
        for (int trial = 0; trial < 6; ++trial) {
            OsNet net = tiny_net(100 + trial);
            const Trajectory data = tiny_data(tiny_net(200 + trial), 300 + trial);
            const TrainConfig cfg = tiny_config(trial % 2 ? 0.37 : 0.0);

            const auto g = adjoint_gradient(net, data, cfg);
            const Vector analytic = flatten(g.gradients);

            const double step = 1e-5;
            std::vector<double> fd;
            auto probe = [&](double& param) {
                const double saved = param;
                param = saved + step;
                const double fp = loss(net, data, cfg).total;
                param = saved - step;
                const double fm = loss(net, data, cfg).total;
                param = saved;
                fd.push_back((fp - fm) / (2.0 * step));
            };
            for (double& p : net.W.data()) probe(p);
            for (double& p : net.K.data()) probe(p);
            for (double& p : net.b.data()) probe(p);

            // each entry within 1e-4 relative to itself or the gradient scale
            double fd_max = 0.0;
            for (double v : fd) fd_max = std::max(fd_max, std::abs(v));
            REQUIRE(fd_max > 0.0);
            for (std::size_t i = 0; i < fd.size(); ++i)
                CHECK(std::abs(analytic[static_cast<int>(i)] - fd[i]) <=
                      1e-4 * std::max(std::abs(fd[i]), fd_max));
        }
    }

    SECTION("a dominant penalty reproduces the pure regularizer direction") {
        const OsNet net = tiny_net(41);
        const Trajectory data = tiny_data(tiny_net(42), 43);
        TrainConfig cfg = tiny_config(1e8);
        const Vector total = flatten(adjoint_gradient(net, data, cfg).gradients);
        const Vector reg = flatten(regularizer_gradient(net));

        const Vector tu = total * (1.0 / norm2(total));
        const Vector ru = reg * (1.0 / norm2(reg));
        for (int i = 0; i < tu.dim(); ++i) CHECK(tu[i] == Catch::Approx(ru[i]).margin(1e-6));
    }
}

TEST_CASE("lbfgs_minimize") {
    LbfgsConfig cfg;

    SECTION("strictly convex quadratic converges within 10 iterations") {
        oracles::Rng rng(71);
        const Matrix m = rng.matrix(5, 5, -1.0, 1.0);
        const Matrix a = transpose(m) * m + Matrix::identity(5);
        const Vector b = rng.vector(5, -2.0, 2.0);
        const Vector solution = oracles::gauss_inverse(a) * b;

        Objective objective = [&](const Vector& x) {
            const Vector ax = a * x;
            return ObjectiveValue{0.5 * dot(x, ax) - dot(b, x), ax - b};
        };

        cfg.inner_iterations = 10;
        cfg.c2 = 0.1;  // accurate steps: on a quadratic this recovers CG-like termination
        const LbfgsResult res = lbfgs_minimize(objective, Vector(5), cfg);
        CHECK(res.stop == LbfgsStop::gradient_converged);
        CHECK(static_cast<int>(res.iterations.size()) <= 10);
        CHECK(norm2(res.gradient) < 1e-9);
        for (int i = 0; i < 5; ++i) CHECK(res.x[i] == Catch::Approx(solution[i]).margin(1e-8));
    }

    SECTION("Rosenbrock from (-1.2, 1) reaches (1, 1)") {
        Objective rosenbrock = [](const Vector& x) {
            const double a = 1.0 - x[0];
            const double b = x[1] - x[0] * x[0];
            ObjectiveValue v;
            v.value = a * a + 100.0 * b * b;
            v.gradient = Vector{-2.0 * a - 400.0 * x[0] * b, 200.0 * b};
            return v;
        };
        cfg.inner_iterations = 100;
        const LbfgsResult res = lbfgs_minimize(rosenbrock, Vector{-1.2, 1.0}, cfg);
        CHECK(std::hypot(res.x[0] - 1.0, res.x[1] - 1.0) <= 1e-5);
        CHECK(res.iterations.size() <= 100);

        // every accepted step satisfies both strong Wolfe inequalities
        double prev = rosenbrock(Vector{-1.2, 1.0}).value;
        for (const auto& it : res.iterations) {
            CHECK(it.wolfe_sufficient);
            CHECK(it.wolfe_curvature);
            CHECK(it.value <= prev + 1e-12);  // monotone over accepted iterates
            prev = it.value;
        }
    }

    SECTION("zero gradient at init returns immediately") {
        Objective flat = [](const Vector& x) { return ObjectiveValue{1.0, Vector(x.dim())}; };
        const LbfgsResult res = lbfgs_minimize(flat, Vector{2.0, 3.0}, cfg);
        CHECK(res.stop == LbfgsStop::gradient_converged);
        CHECK(res.iterations.empty());
        CHECK(res.x[0] == 2.0);
        CHECK(res.x[1] == 3.0);
    }

    SECTION("non-finite init is flagged, not fatal") {
        Objective bad = [](const Vector& x) {
            return ObjectiveValue{std::numeric_limits<double>::quiet_NaN(), Vector(x.dim())};
        };
        const LbfgsResult res = lbfgs_minimize(bad, Vector{1.0}, cfg);
        CHECK(res.stop == LbfgsStop::init_not_finite);
        CHECK(res.divergence_seen);
    }

    SECTION("divergent trial values shrink the step instead of aborting") {
        // steep parabola near the origin, divergent beyond |x| = 2
        Objective guarded = [](const Vector& x) {
            ObjectiveValue v;
            if (std::abs(x[0]) > 2.0) {
                v.value = std::numeric_limits<double>::infinity();
                v.gradient = Vector(1);
                return v;
            }
            v.value = 10.0 * x[0] * x[0];
            v.gradient = Vector{20.0 * x[0]};
            return v;
        };
        // gradient 20 at init: the unit step overshoots into the divergent zone
        const LbfgsResult res = lbfgs_minimize(guarded, Vector{1.0}, cfg);
        CHECK(res.divergence_seen);
        CHECK(std::abs(res.x[0]) < 0.5);
    }
}

TEST_CASE("train") {
    SECTION("zero epochs leave the net untouched") {
        const OsNet net = tiny_net(81);
        const Trajectory data = tiny_data(tiny_net(82), 83);
        TrainConfig cfg = tiny_config(0.1);
        cfg.epochs = 0;
        const auto [trained, report] = train(net, data, cfg);
        CHECK(report.epochs.empty());
        CHECK(trained.W.data() == net.W.data());
        CHECK(trained.K.data() == net.K.data());
    }

    SECTION("training decreases the loss and reports consistently") {
        const OsNet net = tiny_net(84);
        const Trajectory data = tiny_data(tiny_net(85), 86);
        TrainConfig cfg = tiny_config(0.05);
        cfg.epochs = 3;
        cfg.lbfgs.inner_iterations = 8;

        const double before = loss(net, data, cfg).total;
        const auto [trained, report] = train(net, data, cfg);
        REQUIRE(report.epochs.size() == 3);
        CHECK(report.epochs.back().total_loss < before);

        double prev = before;
        for (const auto& e : report.epochs) {
            CHECK(e.total_loss ==
                  Catch::Approx(e.data_loss + cfg.alpha * e.reg_value).margin(1e-12));
            CHECK(e.total_loss <= prev + 1e-12);  // warm start: epochs never regress
            prev = e.total_loss;
        }
        CHECK(report.final.j_a_norm == Catch::Approx(regularizer(trained).norm).margin(1e-12));
        CHECK(report.final.omega_min <= report.final.omega_max);
    }

    SECTION("deterministic given identical config and seed") {
        const Trajectory data = tiny_data(tiny_net(91), 92);
        TrainConfig cfg = tiny_config(0.1);
        cfg.epochs = 2;

        const auto run = [&]() {
            const OsNet net = init_osnet(3, 4, {ActivationKind::snake, 0.5}, cfg.seed);
            return train(net, data, cfg);
        };
        const auto [net_a, rep_a] = run();
        const auto [net_b, rep_b] = run();

        CHECK(net_a.W.data() == net_b.W.data());
        CHECK(net_a.K.data() == net_b.K.data());
        CHECK(net_a.b.data() == net_b.b.data());
        REQUIRE(rep_a.epochs.size() == rep_b.epochs.size());
        for (std::size_t i = 0; i < rep_a.epochs.size(); ++i) {
            CHECK(rep_a.epochs[i].total_loss == rep_b.epochs[i].total_loss);
            CHECK(rep_a.epochs[i].gradient_norm == rep_b.epochs[i].gradient_norm);
            CHECK(rep_a.epochs[i].line_search_evals == rep_b.epochs[i].line_search_evals);
        }
        // wall_time is the one field allowed to differ between the two runs
        CHECK(rep_a.final.j_a_norm == rep_b.final.j_a_norm);
        CHECK(rep_a.final.omega_min == rep_b.final.omega_min);
        CHECK(rep_a.final.omega_max == rep_b.final.omega_max);
    }
}
