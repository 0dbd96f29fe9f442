#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "osnet/matrix.hpp"

/// \file ode.hpp
/// Fixed-step classical RK4 for vector fields and time-dependent linear
/// (variational) systems, with full trajectory recording and snapshot
/// subsampling. No adaptive stepping, by design: runs must be reproducible
/// bit-for-bit.

namespace osnet {

/// Any state component beyond this magnitude aborts integration loudly.
inline constexpr double kDivergenceThreshold = 1e8;

struct VectorField {
    int dim = 0;
    std::function<Vector(const Vector&)> eval;
    std::function<Matrix(const Vector&)> jacobian;  // optional, dim x dim

    bool has_jacobian() const { return static_cast<bool>(jacobian); }
};

/// Thrown when a state or stage derivative leaves the finite range; carries
/// the time of failure and the last finite state reached.
class divergence_error : public std::runtime_error {
public:
    divergence_error(double time, Vector last_state)
        : std::runtime_error("integration diverged at t = " + std::to_string(time)),
          time_(time),
          last_state_(std::move(last_state)) {}

    double time() const { return time_; }
    const Vector& last_state() const { return last_state_; }

private:
    double time_;
    Vector last_state_;
};

class Trajectory {
public:
    Trajectory(std::vector<double> times, std::vector<Vector> states)
        : times_(std::move(times)), states_(std::move(states)) {
        require(!times_.empty() && times_.size() == states_.size(),
                "Trajectory: need equally many times and states, at least one");
        const int d = states_.front().dim();
        for (std::size_t i = 0; i < times_.size(); ++i) {
            require(states_[i].dim() == d, "Trajectory: state dimension mismatch");
            require(states_[i].finite(), "Trajectory: non-finite state");
            if (i > 0)
                require(times_[i] > times_[i - 1], "Trajectory: times must be strictly increasing");
        }
    }

    const std::vector<double>& times() const { return times_; }
    const std::vector<Vector>& states() const { return states_; }
    std::size_t size() const { return times_.size(); }
    int dim() const { return states_.front().dim(); }
    double duration() const { return times_.back() - times_.front(); }

    double max_norm() const {
        double m = 0.0;
        for (const auto& s : states_) m = std::max(m, norm_inf(s));
        return m;
    }

private:
    std::vector<double> times_;
    std::vector<Vector> states_;
};

namespace detail {

inline void check_state(const Vector& v, double t, const Vector& last_finite) {
    for (int i = 0; i < v.dim(); ++i) {
        const double x = v[i];
        if (!std::isfinite(x) || std::abs(x) > kDivergenceThreshold)
            throw divergence_error(t, last_finite);
    }
}

}  // namespace detail

/// One classical 4-stage RK4 update. `t` is only used to report divergence;
/// the fields here are autonomous.
inline Vector rk4_step(const VectorField& field, const Vector& state, double h,
                       double t = 0.0) {
    require(h > 0.0, "rk4_step: step must be positive");
    require(field.dim == state.dim(), "rk4_step: state dimension mismatch");

    const Vector k1 = field.eval(state);
    detail::check_state(k1, t, state);

    Vector mid = state;
    axpy(0.5 * h, k1, mid);
    const Vector k2 = field.eval(mid);
    detail::check_state(k2, t, state);

    mid = state;
    axpy(0.5 * h, k2, mid);
    const Vector k3 = field.eval(mid);
    detail::check_state(k3, t, state);

    mid = state;
    axpy(h, k3, mid);
    const Vector k4 = field.eval(mid);
    detail::check_state(k4, t, state);

    Vector next = state;
    axpy(h / 6.0, k1, next);
    axpy(h / 3.0, k2, next);
    axpy(h / 3.0, k3, next);
    axpy(h / 6.0, k4, next);
    detail::check_state(next, t + h, state);
    return next;
}

/// Integrate over [t0, t1] recording every step. The grid is t0 + k*h with a
/// final partial step clamped so t1 is always a sample.
inline Trajectory integrate(const VectorField& field, const Vector& x0, double t0,
                            double t1, double h) {
    require(t1 > t0, "integrate: t1 must exceed t0");
    require(h > 0.0, "integrate: step must be positive");

    const double span = t1 - t0;
    const long nfull = static_cast<long>(std::floor(span / h + 1e-9));

    std::vector<double> times;
    std::vector<Vector> states;
    times.reserve(static_cast<std::size_t>(nfull) + 2);
    states.reserve(static_cast<std::size_t>(nfull) + 2);

    Vector x = x0;
    detail::check_state(x, t0, x0);
    times.push_back(t0);
    states.push_back(x);

    for (long k = 1; k <= nfull; ++k) {
        const double t_prev = t0 + static_cast<double>(k - 1) * h;
        x = rk4_step(field, x, h, t_prev);
        times.push_back(t0 + static_cast<double>(k) * h);
        states.push_back(x);
    }

    const double t_last = times.back();
    if (t1 - t_last > 1e-9 * h) {
        x = rk4_step(field, x, t1 - t_last, t_last);
        times.push_back(t1);
        states.push_back(x);
    } else if (t_last != t1) {
        times.back() = t1;  // snap a rounding-level residual onto t1
    }
    return Trajectory(std::move(times), std::move(states));
}

/// Keep samples at indices 0, stride, 2*stride, ...
inline Trajectory subsample(const Trajectory& traj, int stride) {
    require(stride >= 1, "subsample: stride must be >= 1");
    std::vector<double> times;
    std::vector<Vector> states;
    for (std::size_t i = 0; i < traj.size(); i += static_cast<std::size_t>(stride)) {
        times.push_back(traj.times()[i]);
        states.push_back(traj.states()[i]);
    }
    return Trajectory(std::move(times), std::move(states));
}

namespace detail {

inline void check_matrix_state(const Matrix& m, double t) {
    for (double v : m.data())
        if (!std::isfinite(v) || std::abs(v) > kDivergenceThreshold)
            throw divergence_error(t, Vector(0));
}

}  // namespace detail

/// Solve the matrix ODE Y' = A(t) Y from Y(t0) = y0 to t1 with RK4 (applied
/// columnwise, which is what plain matrix RK4 does). Returns Y(t1).
inline Matrix integrate_linear(const std::function<Matrix(double)>& coef, const Matrix& y0,
                               double t0, double t1, double h) {
    require(t1 > t0, "integrate_linear: t1 must exceed t0");
    require(h > 0.0, "integrate_linear: step must be positive");
    require(y0.square(), "integrate_linear: y0 must be square");

    const int n = y0.rows();
    auto coef_at = [&](double t) {
        Matrix a = coef(t);
        require(a.rows() == n && a.cols() == n, "integrate_linear: coefficient shape mismatch");
        return a;
    };

    auto step = [&](Matrix y, double t, double dt) {
        const Matrix k1 = coef_at(t) * y;
        const Matrix k2 = coef_at(t + 0.5 * dt) * (y + (0.5 * dt) * k1);
        const Matrix k3 = coef_at(t + 0.5 * dt) * (y + (0.5 * dt) * k2);
        const Matrix k4 = coef_at(t + dt) * (y + dt * k3);
        y += (dt / 6.0) * k1 + (dt / 3.0) * k2 + (dt / 3.0) * k3 + (dt / 6.0) * k4;
        detail::check_matrix_state(y, t + dt);
        return y;
    };

    const double span = t1 - t0;
    const long nfull = static_cast<long>(std::floor(span / h + 1e-9));
    Matrix y = y0;
    double t = t0;
    for (long k = 1; k <= nfull; ++k) {
        y = step(std::move(y), t, h);
        t = t0 + static_cast<double>(k) * h;
    }
    if (t1 - t > 1e-9 * h) y = step(std::move(y), t, t1 - t);
    return y;
}

}  // namespace osnet
