#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "osnet/model.hpp"
#include "osnet/ode.hpp"

/// \file train.hpp
/// Trajectory-matching loss with the spectral-norm penalty, continuous
/// adjoint gradients through the RK4 rollout, and a full-batch L-BFGS
/// optimizer with strong Wolfe line search (initial trial step 1).

namespace osnet {

struct LbfgsConfig {
    int history = 10;
    int inner_iterations = 20;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_line_search = 25;

    void validate() const {
        require(history >= 1 && inner_iterations >= 1 && max_line_search >= 1,
                "LbfgsConfig: counts must be positive");
        require(0.0 < c1 && c1 < c2 && c2 < 1.0, "LbfgsConfig: need 0 < c1 < c2 < 1");
    }
};

struct TrainConfig {
    double alpha = 0.07;        // regularization weight
    int epochs = 10;
    double rollout_step = 0.005;
    LbfgsConfig lbfgs;
    std::uint64_t seed = 0;

    void validate() const {
        require(alpha >= 0.0 && std::isfinite(alpha), "TrainConfig: alpha must be >= 0");
        require(epochs >= 0, "TrainConfig: epochs must be >= 0");
        require(rollout_step > 0.0, "TrainConfig: rollout step must be positive");
        lbfgs.validate();
    }
};

struct LossValue {
    double total = 0.0;
    double data_loss = 0.0;
    double reg = 0.0;
    bool diverged = false;
    double failure_time = 0.0;
};

/// Model states at the given snapshot times, sub-stepping between
/// consecutive snapshots so every snapshot is hit exactly.
inline std::vector<Vector> rollout_snapshots(const NetEvaluator& eval, const Vector& x0,
                                             const std::vector<double>& times, double h) {
    require(times.size() >= 2, "rollout_snapshots: need at least 2 snapshot times");
    std::vector<Vector> states;
    states.reserve(times.size());
    Vector x = x0;
    states.push_back(x);
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double dt = times[k + 1] - times[k];
        require(dt > 0.0, "rollout_snapshots: times must be strictly increasing");
        const long nsub = std::max<long>(1, std::lround(dt / h));
        const double sub = dt / static_cast<double>(nsub);
        double t = times[k];
        for (long i = 0; i < nsub; ++i) {
            const Vector k1 = eval.eval(x);
            detail::check_state(k1, t, x);
            Vector mid = x;
            axpy(0.5 * sub, k1, mid);
            const Vector k2 = eval.eval(mid);
            detail::check_state(k2, t, x);
            mid = x;
            axpy(0.5 * sub, k2, mid);
            const Vector k3 = eval.eval(mid);
            detail::check_state(k3, t, x);
            mid = x;
            axpy(sub, k3, mid);
            const Vector k4 = eval.eval(mid);
            detail::check_state(k4, t, x);
            axpy(sub / 6.0, k1, x);
            axpy(sub / 3.0, k2, x);
            axpy(sub / 3.0, k3, x);
            axpy(sub / 6.0, k4, x);
            t += sub;
            detail::check_state(x, t, states.back());
        }
        states.push_back(x);
    }
    return states;
}

/// total = data_loss + alpha * reg with
///   data_loss = mean over snapshots (excluding index 0) and over state
///               components of the squared rollout mismatch,
///   reg       = || |J| ||_2^2.
/// A diverging rollout is reported, not thrown; the optimizer treats it as
/// a line-search rejection.
inline LossValue loss(const OsNet& net, const Trajectory& data, const TrainConfig& cfg) {
    cfg.validate();
    require(data.size() >= 2, "loss: need at least 2 snapshots");
    require(data.dim() == net.n, "loss: data dimension mismatch");

    LossValue out;
    out.reg = regularizer(net).value;

    const NetEvaluator eval(net);
    std::vector<Vector> model;
    try {
        model = rollout_snapshots(eval, data.states().front(), data.times(), cfg.rollout_step);
    } catch (const divergence_error& e) {
        out.diverged = true;
        out.failure_time = e.time();
        out.total = std::numeric_limits<double>::infinity();
        return out;
    }

    const std::size_t count = data.size() - 1;
    double acc = 0.0;
    for (std::size_t k = 1; k < data.size(); ++k) {
        const Vector diff = model[k] - data.states()[k];
        acc += dot(diff, diff);
    }
    out.data_loss = acc / (static_cast<double>(count) * net.n);
    out.total = out.data_loss + cfg.alpha * out.reg;
    return out;
}

namespace detail {

/// Augmented backward state: base orbit, adjoint, and the running parameter
/// gradient (Omega-space for K).
struct AdjointState {
    Vector x, a;
    Matrix gw, gomega;
    Vector gb;

    AdjointState(int n, int hidden)
        : x(n), a(n), gw(n, hidden), gomega(hidden, hidden), gb(hidden) {}

    void add_scaled(double s, const AdjointState& d) {
        axpy(s, d.x, x);
        axpy(s, d.a, a);
        for (std::size_t i = 0; i < gw.data().size(); ++i) gw.data()[i] += s * d.gw.data()[i];
        for (std::size_t i = 0; i < gomega.data().size(); ++i)
            gomega.data()[i] += s * d.gomega.data()[i];
        axpy(s, d.gb, gb);
    }
};

/// Time derivative of the augmented state for backward integration:
///   x' = f(x),  a' = -(df/dx)ᵀ a,  G' = -aᵀ df/dθ.
inline void adjoint_derivative(const NetEvaluator& ev, const AdjointState& s, AdjointState& out) {
    const Vector u = ev.preactivation(s.x);
    const auto [sv, dv] = activation_eval(ev.activation(), u);

    out.x = ev.decoder() * sv;

    Vector p = transpose_times(ev.decoder(), s.a);  // Omegaᵀ Wᵀ a
    Vector q = p;
    for (int i = 0; i < q.dim(); ++i) q[i] *= dv[i];
    out.a = -(ev.weight() * q);

    const Vector oms = ev.omega_matrix() * sv;
    const Vector wta = transpose_times(ev.weight(), s.a);
    const int n = s.x.dim(), hidden = q.dim();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < hidden; ++j)
            out.gw(i, j) = -(s.a[i] * oms[j] + s.x[i] * q[j]);
    for (int i = 0; i < hidden; ++i)
        for (int j = 0; j < hidden; ++j) out.gomega(i, j) = -(wta[i] * sv[j]);
    out.gb = -q;
}

inline void check_adjoint_state(const AdjointState& s, double t, const Vector& anchor) {
    check_state(s.x, t, anchor);
    check_state(s.a, t, anchor);
}

}  // namespace detail

struct GradientResult {
    ParameterGradients gradients;
    LossValue value;
};

/// Continuous-adjoint gradient of loss(). The backward pass restarts each
/// segment from the stored forward snapshot state, which bounds the drift
/// the backward integration can accumulate; the loss jump
/// 2 (model - data)/count lands on the adjoint at each snapshot.
inline GradientResult adjoint_gradient(const OsNet& net, const Trajectory& data,
                                       const TrainConfig& cfg) {
    cfg.validate();
    require(data.size() >= 2, "adjoint_gradient: need at least 2 snapshots");
    require(data.dim() == net.n, "adjoint_gradient: data dimension mismatch");

    GradientResult result;
    result.gradients = ParameterGradients(net.n, net.hidden());
    result.value.reg = regularizer(net).value;

    const NetEvaluator eval(net);
    std::vector<Vector> model;
    try {
        model = rollout_snapshots(eval, data.states().front(), data.times(), cfg.rollout_step);
    } catch (const divergence_error& e) {
        result.value.diverged = true;
        result.value.failure_time = e.time();
        result.value.total = std::numeric_limits<double>::infinity();
        return result;
    }

    const int n = net.n, hidden = net.hidden();
    const double count = static_cast<double>(data.size() - 1) * n;

    double acc = 0.0;
    for (std::size_t k = 1; k < data.size(); ++k) {
        const Vector diff = model[k] - data.states()[k];
        acc += dot(diff, diff);
    }
    result.value.data_loss = acc / count;
    result.value.total = result.value.data_loss + cfg.alpha * result.value.reg;

    detail::AdjointState s(n, hidden);
    detail::AdjointState k1(n, hidden), k2(n, hidden), k3(n, hidden), k4(n, hidden),
        stage(n, hidden);

    for (std::size_t seg = data.size() - 1; seg >= 1; --seg) {
        // restart the base orbit from the stored forward state and apply the
        // loss jump for this snapshot
        s.x = model[seg];
        const Vector jump = (2.0 / count) * (model[seg] - data.states()[seg]);
        s.a += jump;

        const double dt = data.times()[seg] - data.times()[seg - 1];
        const long nsub = std::max<long>(1, std::lround(dt / cfg.rollout_step));
        const double sub = -dt / static_cast<double>(nsub);

        double t = data.times()[seg];
        for (long i = 0; i < nsub; ++i) {
            detail::adjoint_derivative(eval, s, k1);
            stage = s;
            stage.add_scaled(0.5 * sub, k1);
            detail::adjoint_derivative(eval, stage, k2);
            stage = s;
            stage.add_scaled(0.5 * sub, k2);
            detail::adjoint_derivative(eval, stage, k3);
            stage = s;
            stage.add_scaled(sub, k3);
            detail::adjoint_derivative(eval, stage, k4);
            s.add_scaled(sub / 6.0, k1);
            s.add_scaled(sub / 3.0, k2);
            s.add_scaled(sub / 3.0, k3);
            s.add_scaled(sub / 6.0, k4);
            t += sub;
            detail::check_adjoint_state(s, t, model[seg]);
        }
    }

    result.gradients.w = s.gw;
    result.gradients.k = s.gomega - transpose(s.gomega);
    result.gradients.b = s.gb;

    if (cfg.alpha != 0.0) {
        ParameterGradients reg = regularizer_gradient(net);
        reg *= cfg.alpha;
        result.gradients += reg;
    }
    return result;
}

// ---------------------------------------------------------------------------
// L-BFGS with strong Wolfe line search
// ---------------------------------------------------------------------------

struct ObjectiveValue {
    double value = 0.0;
    Vector gradient;
};

using Objective = std::function<ObjectiveValue(const Vector&)>;

enum class LbfgsStop {
    gradient_converged,
    iteration_budget,
    line_search_failed,
    init_not_finite,
};

struct LbfgsIterate {
    double value = 0.0;
    double gradient_norm = 0.0;
    double step = 0.0;
    int ls_evals = 0;
    bool wolfe_sufficient = false;
    bool wolfe_curvature = false;
};

struct LbfgsResult {
    Vector x;
    double value = 0.0;
    Vector gradient;
    std::vector<LbfgsIterate> iterations;
    LbfgsStop stop = LbfgsStop::iteration_budget;
    int total_evals = 0;
    bool divergence_seen = false;
};

namespace detail {

struct LineSearchOutcome {
    bool success = false;
    double alpha = 0.0;
    double f = 0.0;
    Vector g;
    int evals = 0;
    bool saw_nonfinite = false;
};

inline double wolfe_value_slack(double f0) {
    return 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f0));
}

/// Strong Wolfe line search, bracketing + bisection zoom. Non-finite trial
/// values are treated as "too far" and shrink the bracket.
inline LineSearchOutcome strong_wolfe_search(const Objective& objective, const Vector& x,
                                             const Vector& p, double f0, double dphi0,
                                             const LbfgsConfig& cfg) {
    LineSearchOutcome out;
    const double c1 = cfg.c1, c2 = cfg.c2;
    // Near a minimum the decrease per step drops below the resolution of
    // f itself; the slack keeps the sufficient-decrease test meaningful
    // there (approximate-Wolfe style) so the gradient can keep shrinking.
    const double f_slack = wolfe_value_slack(f0);

    auto eval_at = [&](double alpha, double& f, Vector& g, double& dphi) {
        Vector trial = x;
        axpy(alpha, p, trial);
        ObjectiveValue v = objective(trial);
        ++out.evals;
        f = v.value;
        g = std::move(v.gradient);
        if (!std::isfinite(f)) {
            out.saw_nonfinite = true;
            dphi = std::numeric_limits<double>::quiet_NaN();
            return false;
        }
        dphi = dot(g, p);
        return true;
    };

    // Zoom with quadratic interpolation through (lo, f_lo, f'_lo) and f_hi,
    // guarded to the inner 80% of the bracket; bisection otherwise.
    auto zoom = [&](double lo, double f_lo, double d_lo, double hi,
                    double f_hi) -> LineSearchOutcome {
        while (out.evals < cfg.max_line_search) {
            double alpha = 0.5 * (lo + hi);
            if (std::isfinite(f_hi)) {
                const double delta = hi - lo;
                const double curv = f_hi - f_lo - d_lo * delta;
                if (curv > 0.0) {
                    const double trial = lo - 0.5 * d_lo * delta * delta / curv;
                    const double inner_lo = std::min(lo, hi) + 0.1 * std::abs(delta);
                    const double inner_hi = std::max(lo, hi) - 0.1 * std::abs(delta);
                    if (trial >= inner_lo && trial <= inner_hi) alpha = trial;
                }
            }
            double f, dphi;
            Vector g;
            const bool finite = eval_at(alpha, f, g, dphi);
            if (!finite || f > f0 + c1 * alpha * dphi0 + f_slack || f >= f_lo + f_slack) {
                hi = alpha;
                f_hi = f;
            } else {
                if (std::abs(dphi) <= -c2 * dphi0) {
                    out.success = true;
                    out.alpha = alpha;
                    out.f = f;
                    out.g = std::move(g);
                    return out;
                }
                if (dphi * (hi - lo) >= 0.0) {
                    hi = lo;
                    f_hi = f_lo;
                }
                lo = alpha;
                f_lo = f;
                d_lo = dphi;
            }
            if (std::abs(hi - lo) <= 1e-14 * std::max(1.0, std::abs(lo))) break;
        }
        return out;
    };

    double alpha_prev = 0.0, f_prev = f0, d_prev = dphi0;
    double alpha = 1.0;  // lr = 1: first trial is always the unit step
    const double alpha_max = 1e6;

    for (int i = 1; out.evals < cfg.max_line_search; ++i) {
        double f, dphi;
        Vector g;
        const bool finite = eval_at(alpha, f, g, dphi);
        if (!finite || f > f0 + c1 * alpha * dphi0 + f_slack || (i > 1 && f >= f_prev))
            return zoom(alpha_prev, f_prev, d_prev, alpha, f);
        if (std::abs(dphi) <= -c2 * dphi0) {
            out.success = true;
            out.alpha = alpha;
            out.f = f;
            out.g = std::move(g);
            return out;
        }
        if (dphi >= 0.0) return zoom(alpha, f, dphi, alpha_prev, f_prev);
        alpha_prev = alpha;
        f_prev = f;
        d_prev = dphi;
        if (alpha >= alpha_max) break;
        alpha = std::min(2.0 * alpha, alpha_max);
    }
    return out;
}

}  // namespace detail

/// Two-loop-recursion L-BFGS. Terminates on gradient norm < 1e-9, the
/// iteration budget, or a failed line search (best-so-far is returned with
/// the stop reason). Curvature pairs with yᵀs <= 1e-10 are skipped.
inline LbfgsResult lbfgs_minimize(const Objective& objective, Vector init,
                                  const LbfgsConfig& cfg) {
    cfg.validate();
    constexpr double kGradTol = 1e-9;
    constexpr double kCurvatureFloor = 1e-10;

    LbfgsResult result;
    result.x = std::move(init);

    ObjectiveValue v0 = objective(result.x);
    ++result.total_evals;
    if (!std::isfinite(v0.value)) {
        result.stop = LbfgsStop::init_not_finite;
        result.divergence_seen = true;
        result.value = v0.value;
        result.gradient = Vector(result.x.dim());
        return result;
    }
    result.value = v0.value;
    result.gradient = std::move(v0.gradient);

    if (norm2(result.gradient) < kGradTol) {
        result.stop = LbfgsStop::gradient_converged;
        return result;
    }

    std::deque<std::pair<Vector, Vector>> pairs;  // (s, y), most recent at back

    for (int iter = 0; iter < cfg.inner_iterations; ++iter) {
        // two-loop recursion for p = -H g
        Vector q = result.gradient;
        std::vector<double> alpha_memo(pairs.size());
        for (std::size_t i = pairs.size(); i-- > 0;) {
            const auto& [sv, yv] = pairs[i];
            const double rho = 1.0 / dot(yv, sv);
            alpha_memo[i] = rho * dot(sv, q);
            axpy(-alpha_memo[i], yv, q);
        }
        if (!pairs.empty()) {
            const auto& [sv, yv] = pairs.back();
            q *= dot(sv, yv) / dot(yv, yv);
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& [sv, yv] = pairs[i];
            const double rho = 1.0 / dot(yv, sv);
            const double beta = rho * dot(yv, q);
            axpy(alpha_memo[i] - beta, sv, q);
        }
        Vector p = -q;

        double dphi0 = dot(result.gradient, p);
        if (dphi0 >= 0.0) {
            // not a descent direction (stale curvature); fall back to steepest descent
            pairs.clear();
            p = -result.gradient;
            dphi0 = dot(result.gradient, p);
        }

        detail::LineSearchOutcome ls =
            detail::strong_wolfe_search(objective, result.x, p, result.value, dphi0, cfg);
        result.total_evals += ls.evals;
        result.divergence_seen = result.divergence_seen || ls.saw_nonfinite;

        if (!ls.success) {
            result.stop = LbfgsStop::line_search_failed;
            return result;
        }

        Vector x_new = result.x;
        axpy(ls.alpha, p, x_new);
        Vector s = x_new - result.x;
        Vector y = ls.g - result.gradient;

        LbfgsIterate rec;
        rec.value = ls.f;
        rec.gradient_norm = norm2(ls.g);
        rec.step = ls.alpha;
        rec.ls_evals = ls.evals;
        rec.wolfe_sufficient = ls.f <= result.value + cfg.c1 * ls.alpha * dphi0 +
                                           detail::wolfe_value_slack(result.value);
        rec.wolfe_curvature = std::abs(dot(ls.g, p)) <= -cfg.c2 * dphi0 + 1e-15;
        result.iterations.push_back(rec);

        result.x = std::move(x_new);
        result.value = ls.f;
        result.gradient = std::move(ls.g);

        if (dot(y, s) > kCurvatureFloor) {
            pairs.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(pairs.size()) > cfg.history) pairs.pop_front();
        }

        if (norm2(result.gradient) < kGradTol) {
            result.stop = LbfgsStop::gradient_converged;
            return result;
        }
    }
    result.stop = LbfgsStop::iteration_budget;
    return result;
}

// ---------------------------------------------------------------------------
// Training driver
// ---------------------------------------------------------------------------

struct EpochRecord {
    int epoch = 0;
    double data_loss = 0.0;
    double reg_value = 0.0;
    double total_loss = 0.0;
    double gradient_norm = 0.0;
    int line_search_evals = 0;
    bool line_search_failed = false;
    bool divergence_seen = false;
};

struct TrainFinal {
    double j_a_norm = 0.0;
    double wall_time_seconds = 0.0;
    double omega_min = 0.0;
    double omega_max = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    TrainFinal final;

    bool any_divergence() const {
        for (const auto& e : epochs)
            if (e.divergence_seen && e.line_search_failed) return true;
        return false;
    }
};

namespace detail {

inline Vector pack_parameters(const OsNet& net) {
    Vector v(net.n * net.hidden() + net.hidden() * net.hidden() + net.hidden());
    int at = 0;
    for (double x : net.W.data()) v[at++] = x;
    for (double x : net.K.data()) v[at++] = x;
    for (int i = 0; i < net.hidden(); ++i) v[at++] = net.b[i];
    return v;
}

inline OsNet unpack_parameters(const Vector& v, const OsNet& like) {
    OsNet net = like;
    int at = 0;
    for (double& x : net.W.data()) x = v[at++];
    for (double& x : net.K.data()) x = v[at++];
    for (int i = 0; i < net.hidden(); ++i) net.b[i] = v[at++];
    return net;
}

inline Vector pack_gradients(const ParameterGradients& g) {
    Vector v(static_cast<int>(g.w.data().size() + g.k.data().size()) + g.b.dim());
    int at = 0;
    for (double x : g.w.data()) v[at++] = x;
    for (double x : g.k.data()) v[at++] = x;
    for (int i = 0; i < g.b.dim(); ++i) v[at++] = g.b[i];
    return v;
}

}  // namespace detail

/// One epoch = one lbfgs_minimize call with the configured inner-iteration
/// budget, warm-started from the previous epoch's parameters with the
/// curvature history reset. Divergence and line-search failures are
/// recorded per epoch and do not abort the remaining epochs.
inline std::pair<OsNet, TrainReport> train(OsNet net, const Trajectory& data,
                                           const TrainConfig& cfg) {
    cfg.validate();
    net.validate();
    const auto start = std::chrono::steady_clock::now();

    Objective objective = [&net, &data, &cfg](const Vector& params) {
        const OsNet candidate = detail::unpack_parameters(params, net);
        GradientResult g = adjoint_gradient(candidate, data, cfg);
        ObjectiveValue out;
        if (g.value.diverged) {
            out.value = std::numeric_limits<double>::infinity();
            out.gradient = Vector(params.dim());
            return out;
        }
        out.value = g.value.total;
        out.gradient = detail::pack_gradients(g.gradients);
        return out;
    };

    Vector params = detail::pack_parameters(net);
    TrainReport report;
    report.epochs.reserve(static_cast<std::size_t>(cfg.epochs));

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        LbfgsResult res = lbfgs_minimize(objective, params, cfg.lbfgs);
        params = res.x;

        const OsNet current = detail::unpack_parameters(params, net);
        const LossValue lv = loss(current, data, cfg);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.data_loss = lv.data_loss;
        rec.reg_value = lv.reg;
        rec.total_loss = lv.data_loss + cfg.alpha * lv.reg;
        rec.gradient_norm = norm2(res.gradient);
        rec.line_search_evals = res.total_evals;
        rec.line_search_failed =
            res.stop == LbfgsStop::line_search_failed || res.stop == LbfgsStop::init_not_finite;
        rec.divergence_seen = res.divergence_seen;
        report.epochs.push_back(rec);
    }

    OsNet trained = detail::unpack_parameters(params, net);
    const Matrix om = omega(trained);
    report.final.j_a_norm = regularizer(trained).norm;
    report.final.omega_min = om.data().empty() ? 0.0 : *std::min_element(om.data().begin(), om.data().end());
    report.final.omega_max = om.data().empty() ? 0.0 : *std::max_element(om.data().begin(), om.data().end());
    report.final.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(trained), std::move(report)};
}

}  // namespace osnet
