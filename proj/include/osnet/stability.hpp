#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "osnet/model.hpp"
#include "osnet/numerics.hpp"
#include "osnet/ode.hpp"

/// \file stability.hpp
/// Orbital-stability diagnostics: Poincaré sections with period-k attractor
/// detection, monodromy matrices and Floquet multipliers through the first
/// variational equation, the central-zone criterion for canonical systems
/// with nonnegative coefficients, and the norm-bound report for learned
/// nets.

namespace osnet {

class precondition_error : public std::runtime_error {
public:
    explicit precondition_error(const std::string& what) : std::runtime_error(what) {}
};

struct SectionSpec {
    Vector anchor;
    Vector normal;             // unit length
    bool positive_direction = true;
    double transient_skip = 0.0;  // time discarded from the trajectory start

    void validate() const {
        require(anchor.dim() == normal.dim() && anchor.dim() > 0,
                "SectionSpec: anchor/normal dimension mismatch");
        require(std::abs(norm2(normal) - 1.0) <= 1e-12, "SectionSpec: normal must be unit length");
        require(transient_skip >= 0.0, "SectionSpec: transient_skip must be >= 0");
    }
};

/// Plane through the trajectory's temporal mean, normal along the
/// coordinate axis of maximal variance, positive crossings, with 20% of the
/// duration discarded as transient.
inline SectionSpec default_section(const Trajectory& traj) {
    const int n = traj.dim();
    Vector mean(n), var(n);
    for (const auto& s : traj.states()) axpy(1.0, s, mean);
    mean *= 1.0 / static_cast<double>(traj.size());
    for (const auto& s : traj.states())
        for (int i = 0; i < n; ++i) var[i] += (s[i] - mean[i]) * (s[i] - mean[i]);

    int axis = 0;
    for (int i = 1; i < n; ++i)
        if (var[i] > var[axis]) axis = i;

    SectionSpec section;
    section.anchor = mean;
    section.normal = Vector(n);
    section.normal[axis] = 1.0;
    section.positive_direction = true;
    section.transient_skip = 0.2 * traj.duration();
    return section;
}

struct Crossing {
    double time = 0.0;
    Vector point;
};

/// Sign changes of <state - anchor, normal> between consecutive samples
/// whose crossing velocity matches the requested direction, refined by
/// linear interpolation in time. Crossings inside the transient window are
/// dropped. No crossings is an empty list, not an error.
inline std::vector<Crossing> poincare_crossings(const Trajectory& traj,
                                                const SectionSpec& section) {
    section.validate();
    require(traj.dim() == section.anchor.dim(), "poincare_crossings: dimension mismatch");

    const double t_min = traj.times().front() + section.transient_skip;
    std::vector<Crossing> out;

    double prev = dot(traj.states().front() - section.anchor, section.normal);
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const double cur = dot(traj.states()[i] - section.anchor, section.normal);
        const bool crosses = section.positive_direction ? (prev < 0.0 && cur >= 0.0)
                                                        : (prev > 0.0 && cur <= 0.0);
        if (crosses && cur != prev) {
            const double frac = -prev / (cur - prev);
            const double t = traj.times()[i - 1] + frac * (traj.times()[i] - traj.times()[i - 1]);
            if (t >= t_min) {
                Vector point = traj.states()[i - 1];
                point *= (1.0 - frac);
                axpy(frac, traj.states()[i], point);
                out.push_back({t, std::move(point)});
            }
        }
        prev = cur;
    }
    return out;
}

enum class PeriodKind { periodic, aperiodic, inconclusive };

struct AttractorReport {
    std::vector<Crossing> crossings;
    PeriodKind kind = PeriodKind::inconclusive;
    int period_k = 0;              // meaningful when kind == periodic
    std::optional<double> period_T;
    double cluster_tolerance_used = 0.0;
    int clusters_found = 0;
    bool bounded = true;
    double max_norm_observed = 0.0;
};

/// Greedy clustering of the crossing points with radius
/// tolerance * diameter, then the smallest k <= k_max such that the cluster
/// visitation sequence is exactly k-periodic and visits k distinct
/// clusters. T is the mean time between same-cluster returns. Fewer than 8
/// crossings is inconclusive, which is distinct from aperiodic.
inline AttractorReport detect_period(const std::vector<Crossing>& crossings, double tolerance,
                                     int k_max = 8) {
    require(tolerance > 0.0, "detect_period: tolerance must be positive");
    AttractorReport report;
    report.crossings = crossings;

    if (crossings.size() < 8) {
        report.kind = PeriodKind::inconclusive;
        return report;
    }

    double diameter = 0.0, point_scale = 0.0;
    for (std::size_t i = 0; i < crossings.size(); ++i) {
        point_scale = std::max(point_scale, norm_inf(crossings[i].point));
        for (std::size_t j = i + 1; j < crossings.size(); ++j)
            diameter = std::max(diameter, norm2(crossings[i].point - crossings[j].point));
    }
    // floor at integration-noise scale: a fully converged period-1 orbit has
    // a near-degenerate crossing set, where tolerance * diameter underflows
    const double radius = std::max(tolerance * diameter, 1e-5 * (1.0 + point_scale));
    report.cluster_tolerance_used = radius;

    // greedy assignment against cluster founders, in visitation order
    std::vector<Vector> founders;
    std::vector<int> sequence(crossings.size(), -1);
    for (std::size_t i = 0; i < crossings.size(); ++i) {
        for (std::size_t c = 0; c < founders.size(); ++c) {
            if (norm2(crossings[i].point - founders[c]) <= radius) {
                sequence[i] = static_cast<int>(c);
                break;
            }
        }
        if (sequence[i] < 0) {
            founders.push_back(crossings[i].point);
            sequence[i] = static_cast<int>(founders.size()) - 1;
        }
    }
    report.clusters_found = static_cast<int>(founders.size());

    for (int k = 1; k <= k_max; ++k) {
        bool periodic = true;
        for (std::size_t i = 0; i + k < sequence.size(); ++i) {
            if (sequence[i] != sequence[i + k]) {
                periodic = false;
                break;
            }
        }
        if (!periodic) continue;

        // a true period-k orbit pierces the section at k distinct points;
        // fewer distinct clusters means the clustering could not resolve it
        std::vector<bool> seen(founders.size(), false);
        int distinct = 0;
        for (int i = 0; i < k && i < static_cast<int>(sequence.size()); ++i) {
            if (!seen[sequence[i]]) {
                seen[sequence[i]] = true;
                ++distinct;
            }
        }
        if (distinct != k) break;

        report.kind = PeriodKind::periodic;
        report.period_k = k;
        double sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i + k < crossings.size(); ++i) {
            sum += crossings[i + k].time - crossings[i].time;
            ++count;
        }
        if (count > 0) report.period_T = sum / count;
        return report;
    }
    report.kind = PeriodKind::aperiodic;
    return report;
}

/// Principal matrix solution of the first variational equation after one
/// period: base orbit and Pi' = A(t) Pi co-integrated from (orbit_point, I)
/// over [0, T] with RK4 at step h.
inline Matrix monodromy(const VectorField& field, const Vector& orbit_point, double period_T,
                        double h) {
    require(field.has_jacobian(), "monodromy: field must provide a Jacobian");
    require(period_T > 0.0 && h > 0.0, "monodromy: period and step must be positive");
    require(field.dim == orbit_point.dim(), "monodromy: dimension mismatch");
    const int n = field.dim;

    Vector x = orbit_point;
    Matrix pi = Matrix::identity(n);

    auto deriv = [&](const Vector& xs, const Matrix& ps, Vector& dx, Matrix& dp) {
        dx = field.eval(xs);
        dp = field.jacobian(xs) * ps;
    };

    const long nfull = static_cast<long>(std::floor(period_T / h + 1e-9));
    double t = 0.0;
    auto step = [&](double dt) {
        Vector k1x(n), k2x(n), k3x(n), k4x(n);
        Matrix k1p(n, n), k2p(n, n), k3p(n, n), k4p(n, n);
        deriv(x, pi, k1x, k1p);
        Vector xs = x;
        axpy(0.5 * dt, k1x, xs);
        deriv(xs, pi + (0.5 * dt) * k1p, k2x, k2p);
        xs = x;
        axpy(0.5 * dt, k2x, xs);
        deriv(xs, pi + (0.5 * dt) * k2p, k3x, k3p);
        xs = x;
        axpy(dt, k3x, xs);
        deriv(xs, pi + dt * k3p, k4x, k4p);
        axpy(dt / 6.0, k1x, x);
        axpy(dt / 3.0, k2x, x);
        axpy(dt / 3.0, k3x, x);
        axpy(dt / 6.0, k4x, x);
        pi += (dt / 6.0) * k1p + (dt / 3.0) * k2p + (dt / 3.0) * k3p + (dt / 6.0) * k4p;
        detail::check_state(x, t, orbit_point);
        detail::check_matrix_state(pi, t);
    };
    for (long k = 0; k < nfull; ++k) {
        step(h);
        t = static_cast<double>(k + 1) * h;
    }
    if (period_T - t > 1e-9 * h) step(period_T - t);
    return pi;
}

struct FloquetResult {
    Spectrum multipliers;
    bool stable = false;
    bool marginal = false;  // some non-trivial multiplier sits near the unit circle
};

/// Eigenvalues of the monodromy matrix with the trivial multiplier (the one
/// closest to 1, along the flow) discarded; stable when every remaining
/// modulus is below 1 - 1e-6.
inline FloquetResult floquet_stability(const Matrix& mono) {
    require(mono.square(), "floquet_stability: monodromy must be square");
    FloquetResult out;
    out.multipliers = eigenvalues(mono);

    std::size_t trivial = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.multipliers.eigenvalues.size(); ++i) {
        const double d = std::abs(out.multipliers.eigenvalues[i] - std::complex<double>(1.0, 0.0));
        if (d < best) {
            best = d;
            trivial = i;
        }
    }

    out.stable = true;
    for (std::size_t i = 0; i < out.multipliers.eigenvalues.size(); ++i) {
        if (i == trivial) continue;
        const double mod = std::abs(out.multipliers.eigenvalues[i]);
        if (mod >= 1.0 - 1e-6) out.stable = false;
        if (std::abs(mod - 1.0) <= 1e-4) out.marginal = true;
    }
    return out;
}

struct KreinResult {
    double bound = 0.0;           // 2 / M(C)
    bool lambda_one_inside = false;
    double perron_root_of_c = 0.0;
};

/// Central-zone criterion for y' = lambda J H(t) y of positive type:
/// lambda is inside the central zone when |lambda| < 2 / M(C) with
/// C = |J| * integral of |H|. Preconditions (J skew-symmetric, every H(t)
/// PSD, integral of H positive definite) are validated and violations name
/// the failed premise.
inline KreinResult krein_central_zone(const Matrix& j,
                                      const std::vector<std::pair<double, Matrix>>& h_samples,
                                      double period_T) {
    if (!j.square()) throw precondition_error("krein_central_zone: J must be square");
    if (max_abs(j + transpose(j)) > 1e-10)
        throw precondition_error("krein_central_zone: J is not skew-symmetric");
    if (h_samples.size() < 2)
        throw precondition_error("krein_central_zone: need at least two H samples");
    if (period_T <= 0.0) throw precondition_error("krein_central_zone: period must be positive");

    for (const auto& [t, h] : h_samples) {
        if (!h.square() || h.rows() != j.rows())
            throw precondition_error("krein_central_zone: H sample shape mismatch");
        if (max_abs(h - transpose(h)) > 1e-10)
            throw precondition_error("krein_central_zone: H sample is not symmetric");
        for (const auto& ev : eigenvalues(h).eigenvalues)
            if (ev.real() < -1e-10)
                throw precondition_error(
                    "krein_central_zone: H sample indefinite (positive type violated)");
    }

    const Matrix h_integral = trapezoid_integral(h_samples);
    double min_eig = std::numeric_limits<double>::infinity();
    for (const auto& ev : eigenvalues(h_integral).eigenvalues)
        min_eig = std::min(min_eig, ev.real());
    if (min_eig <= 1e-12)
        throw precondition_error(
            "krein_central_zone: integral of H is singular (positive type violated)");

    std::vector<std::pair<double, Matrix>> abs_samples;
    abs_samples.reserve(h_samples.size());
    for (const auto& [t, h] : h_samples) abs_samples.emplace_back(t, elementwise_abs(h));

    KreinResult out;
    const Matrix c = elementwise_abs(j) * trapezoid_integral(abs_samples);
    out.perron_root_of_c = perron_root(c);
    if (out.perron_root_of_c <= 0.0) {
        out.bound = std::numeric_limits<double>::infinity();
        out.lambda_one_inside = true;
        return out;
    }
    out.bound = 2.0 / out.perron_root_of_c;
    out.lambda_one_inside = 1.0 < out.bound;
    return out;
}

struct StabilityReport {
    double j_a_norm = 0.0;
    double corollary_threshold = 0.0;  // 2 / (L T)
    bool corollary_satisfied = false;
    std::optional<Spectrum> floquet_multipliers;
    std::optional<double> krein_bound;
    std::string notes;
};

/// Norm-bound verdict for a net over a horizon T: the dynamics are stable
/// when || |J| ||_2 < 2/(L T) with L = 2 for both supported activations.
/// The horizon stands in for the (a priori unknown) orbit period.
inline StabilityReport corollary_report(const OsNet& net, double horizon_T) {
    require(horizon_T > 0.0, "corollary_report: horizon must be positive");
    StabilityReport report;
    report.j_a_norm = regularizer(net).norm;
    report.corollary_threshold = 2.0 / (ActivationSpec::derivative_bound() * horizon_T);
    report.corollary_satisfied = report.j_a_norm < report.corollary_threshold;
    report.notes = "horizon T = " + std::to_string(horizon_T) +
                   " is a surrogate for the unknown orbit period; threshold = 2/(L T) with L = 2";
    return report;
}

}  // namespace osnet
