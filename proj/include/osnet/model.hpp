#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "osnet/numerics.hpp"
#include "osnet/ode.hpp"

/// \file model.hpp
/// The learned vector field: a single hidden layer whose decoder is tied to
/// the encoder through a skew-symmetric product. With Omega = K - Kᵀ the
/// field reads
///
///     f(x) = W · Omega · sigma(Wᵀ x + b)
///
/// so the weight product J = W · Omega · Wᵀ is skew-symmetric by
/// construction, which is what the stability analysis in stability.hpp
/// relies on.

namespace osnet {

enum class ActivationKind { snake, x_plus_sin };

inline std::string to_string(ActivationKind k) {
    return k == ActivationKind::snake ? "snake" : "x_plus_sin";
}

inline ActivationKind activation_kind_from_string(const std::string& s) {
    if (s == "snake") return ActivationKind::snake;
    if (s == "x_plus_sin") return ActivationKind::x_plus_sin;
    throw std::invalid_argument("unknown activation kind: " + s);
}

struct ActivationSpec {
    ActivationKind kind = ActivationKind::snake;
    double a = 0.2;  // snake frequency; unused for x_plus_sin

    /// sup of the derivative; 2 for both supported kinds
    /// (1 + sin(2ax) and 1 + cos(x) are each bounded by 2).
    static constexpr double derivative_bound() { return 2.0; }

    void validate() const {
        if (kind == ActivationKind::snake)
            require(std::isfinite(a) && a > 0.0, "ActivationSpec: snake frequency must be > 0");
    }
};

/// Componentwise activation value and derivative.
///   snake:      x + sin(ax)^2 / a,  derivative 1 + sin(2ax)
///   x_plus_sin: x + sin(x),         derivative 1 + cos(x)
inline std::pair<Vector, Vector> activation_eval(const ActivationSpec& spec, const Vector& v) {
    spec.validate();
    Vector value(v.dim()), deriv(v.dim());
    if (spec.kind == ActivationKind::snake) {
        const double a = spec.a;
        for (int i = 0; i < v.dim(); ++i) {
            const double s = std::sin(a * v[i]);
            value[i] = v[i] + s * s / a;
            deriv[i] = 1.0 + std::sin(2.0 * a * v[i]);
        }
    } else {
        for (int i = 0; i < v.dim(); ++i) {
            value[i] = v[i] + std::sin(v[i]);
            deriv[i] = 1.0 + std::cos(v[i]);
        }
    }
    return {std::move(value), std::move(deriv)};
}

struct OsNet {
    int n = 0;          // state dimension
    int m = 0;          // half hidden width; hidden size is 2m
    Matrix W;           // n x 2m
    Matrix K;           // 2m x 2m
    Vector b;           // 2m
    ActivationSpec activation;

    int hidden() const { return 2 * m; }

    void validate() const {
        require(n > 0 && m > 0, "OsNet: n and m must be positive");
        require(W.rows() == n && W.cols() == hidden(), "OsNet: W must be n x 2m");
        require(K.rows() == hidden() && K.cols() == hidden(), "OsNet: K must be 2m x 2m");
        require(b.dim() == hidden(), "OsNet: b must have dimension 2m");
        activation.validate();
    }
};

/// Omega = K - Kᵀ, skew-symmetric for every K.
inline Matrix omega(const OsNet& net) { return net.K - transpose(net.K); }

/// J = W · Omega · Wᵀ (n x n, skew-symmetric).
inline Matrix j_matrix(const OsNet& net) {
    const Matrix om = omega(net);
    return net.W * om * transpose(net.W);
}

inline Vector forward(const OsNet& net, const Vector& x) {
    require(x.dim() == net.n, "forward: state dimension mismatch");
    const Vector u = transpose_times(net.W, x) + net.b;
    const auto [s, d] = activation_eval(net.activation, u);
    (void)d;
    return net.W * (omega(net) * s);
}

/// d(forward)/dx = W · Omega · diag(sigma'(Wᵀx + b)) · Wᵀ.
inline Matrix state_jacobian(const OsNet& net, const Vector& x) {
    require(x.dim() == net.n, "state_jacobian: state dimension mismatch");
    const Vector u = transpose_times(net.W, x) + net.b;
    const auto [s, d] = activation_eval(net.activation, u);
    (void)s;
    const Matrix dec = net.W * omega(net);  // n x 2m
    Matrix scaled = transpose(net.W);       // 2m x n
    for (int i = 0; i < scaled.rows(); ++i)
        for (int j = 0; j < scaled.cols(); ++j) scaled(i, j) *= d[i];
    return dec * scaled;
}

struct RegularizerValue {
    double value = 0.0;  // norm^2, the quantity the loss penalizes
    double norm = 0.0;   // || |J| ||_2
};

inline RegularizerValue regularizer(const OsNet& net) {
    const double norm = spectral_norm(elementwise_abs(j_matrix(net)));
    return {norm * norm, norm};
}

struct ParameterGradients {
    Matrix w;  // n x 2m
    Matrix k;  // 2m x 2m
    Vector b;  // 2m

    ParameterGradients() = default;
    ParameterGradients(int n, int hidden) : w(n, hidden), k(hidden, hidden), b(hidden) {}

    ParameterGradients& operator+=(const ParameterGradients& o) {
        w += o.w;
        k += o.k;
        b += o.b;
        return *this;
    }
    ParameterGradients& operator*=(double s) {
        w *= s;
        k *= s;
        b *= s;
        return *this;
    }
};

/// Gradients of adjointᵀ · forward(net, x) with respect to W, K and b.
/// The K-gradient is reduced through Omega = K - Kᵀ, so it is antisymmetric:
/// perturbing K by any symmetric matrix leaves the field unchanged.
inline ParameterGradients parameter_gradient_products(const OsNet& net, const Vector& x,
                                                      const Vector& adjoint) {
    require(x.dim() == net.n && adjoint.dim() == net.n,
            "parameter_gradient_products: dimension mismatch");
    const Matrix om = omega(net);
    const Vector u = transpose_times(net.W, x) + net.b;
    const auto [s, d] = activation_eval(net.activation, u);

    const Vector wta = transpose_times(net.W, adjoint);  // Wᵀ a
    const Vector p = transpose_times(om, wta);           // Omegaᵀ Wᵀ a
    Vector q = p;                                        // dL/du
    for (int i = 0; i < q.dim(); ++i) q[i] *= d[i];

    ParameterGradients g(net.n, net.hidden());
    g.w = outer(adjoint, om * s) + outer(x, q);
    const Matrix grad_omega = outer(wta, s);
    g.k = grad_omega - transpose(grad_omega);
    g.b = q;
    return g;
}

/// Analytic gradient of regularizer(net).value = || |J| ||_2^2. The spectral
/// norm derivative uses the leading singular pair of |J|; entries where J is
/// exactly zero (the diagonal, structurally) contribute nothing.
inline ParameterGradients regularizer_gradient(const OsNet& net) {
    const Matrix om = omega(net);
    const Matrix j = net.W * om * transpose(net.W);
    const auto [sigma, usv_u, usv_v] = leading_singular_triple(elementwise_abs(j));

    ParameterGradients g(net.n, net.hidden());
    if (sigma == 0.0) return g;

    Matrix gj(net.n, net.n);  // d(norm^2)/dJ = 2 sigma * sign(J) .* (u vᵀ)
    for (int i = 0; i < net.n; ++i)
        for (int jj = 0; jj < net.n; ++jj) {
            const double sgn = (j(i, jj) > 0.0) ? 1.0 : (j(i, jj) < 0.0 ? -1.0 : 0.0);
            gj(i, jj) = 2.0 * sigma * sgn * usv_u[i] * usv_v[jj];
        }

    g.w = gj * net.W * transpose(om) + transpose(gj) * net.W * om;
    const Matrix grad_omega = transpose(net.W) * gj * net.W;
    g.k = grad_omega - transpose(grad_omega);
    return g;
}

/// Deterministic fan-in initialization: W, K entries i.i.d. uniform on
/// [-s, s] with s = 1/sqrt(2m); b = 0. Draw order is W row-major, then K
/// row-major, from a splitmix64 stream seeded by `seed`.
inline OsNet init_osnet(int n, int hidden_2m, const ActivationSpec& activation,
                        std::uint64_t seed) {
    require(n > 0, "init_osnet: n must be positive");
    require(hidden_2m >= 2 && hidden_2m % 2 == 0, "init_osnet: hidden width must be even");
    OsNet net;
    net.n = n;
    net.m = hidden_2m / 2;
    net.W = Matrix(n, hidden_2m);
    net.K = Matrix(hidden_2m, hidden_2m);
    net.b = Vector(hidden_2m);
    net.activation = activation;

    const double scale = 1.0 / std::sqrt(static_cast<double>(hidden_2m));
    std::uint64_t state = seed;
    for (double& v : net.W.data()) v = scale * (2.0 * detail::uniform01(state) - 1.0);
    for (double& v : net.K.data()) v = scale * (2.0 * detail::uniform01(state) - 1.0);
    net.validate();
    return net;
}

/// Precomputed evaluation form used by rollouts and training: the encoder
/// Wᵀ and decoder W·Omega are fixed per parameter snapshot.
class NetEvaluator {
public:
    explicit NetEvaluator(const OsNet& net)
        : n_(net.n),
          hidden_(net.hidden()),
          w_(net.W),
          omega_(omega(net)),
          dec_(net.W * omega_),
          b_(net.b),
          act_(net.activation) {}

    int dim() const { return n_; }
    int hidden() const { return hidden_; }
    const Matrix& weight() const { return w_; }
    const Matrix& omega_matrix() const { return omega_; }
    const Matrix& decoder() const { return dec_; }
    const Vector& bias() const { return b_; }
    const ActivationSpec& activation() const { return act_; }

    Vector preactivation(const Vector& x) const { return transpose_times(w_, x) + b_; }

    Vector eval(const Vector& x) const {
        const Vector u = preactivation(x);
        const auto [s, d] = activation_eval(act_, u);
        (void)d;
        return dec_ * s;
    }

    Matrix jacobian(const Vector& x) const {
        const Vector u = preactivation(x);
        const auto [s, d] = activation_eval(act_, u);
        (void)s;
        Matrix scaled = transpose(w_);
        for (int i = 0; i < scaled.rows(); ++i)
            for (int j = 0; j < scaled.cols(); ++j) scaled(i, j) *= d[i];
        return dec_ * scaled;
    }

    /// (df/dx)ᵀ · a without materializing the Jacobian; the adjoint-side
    /// workhorse. Uses (W Omega D Wᵀ)ᵀ = W D decᵀ with D = diag(sigma').
    Vector jacobian_transpose_times(const Vector& x, const Vector& a) const {
        const Vector u = preactivation(x);
        const auto [s, d] = activation_eval(act_, u);
        (void)s;
        Vector t = transpose_times(dec_, a);
        for (int i = 0; i < t.dim(); ++i) t[i] *= d[i];
        return w_ * t;
    }

private:
    int n_;
    int hidden_;
    Matrix w_;
    Matrix omega_;
    Matrix dec_;
    Vector b_;
    ActivationSpec act_;
};

/// Wrap a parameter snapshot as a VectorField for the integrators.
inline VectorField as_vector_field(const OsNet& net) {
    auto eval = std::make_shared<NetEvaluator>(net);
    VectorField f;
    f.dim = net.n;
    f.eval = [eval](const Vector& x) { return eval->eval(x); };
    f.jacobian = [eval](const Vector& x) { return eval->jacobian(x); };
    return f;
}

}  // namespace osnet
