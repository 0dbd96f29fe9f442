#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "osnet/matrix.hpp"

/// \file numerics.hpp
/// Spectral norm, Perron root, dense eigenvalues (Hessenberg + Francis
/// double-shift QR) and matrix-valued trapezoid quadrature. Everything here
/// targets small matrices (order <= 64); no external solver is used.

namespace osnet {

/// Eigenvalues of a real square matrix. Complex values occur in exact
/// conjugate pairs and pairs are adjacent in the list.
struct Spectrum {
    std::vector<std::complex<double>> eigenvalues;

    double max_modulus() const {
        double m = 0.0;
        for (const auto& z : eigenvalues) m = std::max(m, std::abs(z));
        return m;
    }
};

class eigensolver_error : public std::runtime_error {
public:
    explicit eigensolver_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double uniform01(std::uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

/// Deterministic dense start vector for the power iterations. The fixed seed
/// makes every norm evaluation reproducible bit-for-bit.
inline Vector seeded_unit_vector(int dim, std::uint64_t seed) {
    std::uint64_t state = seed;
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = 2.0 * uniform01(state) - 1.0;
    double n = norm2(v);
    if (n == 0.0) {
        v[0] = 1.0;
        n = 1.0;
    }
    return v * (1.0 / n);
}

constexpr std::uint64_t kPowerIterationSeed = 0x05e31a7u;

}  // namespace detail

/// Largest singular value. Power iteration on the Gram matrix of the smaller
/// side, tolerance 1e-12 on the Rayleigh quotient, at most 10000 iterations.
inline double spectral_norm(const Matrix& m) {
    require(!m.empty(), "spectral_norm: empty matrix");
    const bool gram_cols = m.cols() <= m.rows();
    const int d = gram_cols ? m.cols() : m.rows();

    Vector v = detail::seeded_unit_vector(d, detail::kPowerIterationSeed);
    double lambda = 0.0, lambda_prev = -1.0;
    for (int iter = 0; iter < 10000; ++iter) {
        Vector w = gram_cols ? transpose_times(m, m * v) : m * transpose_times(m, v);
        lambda = dot(v, w);  // Rayleigh quotient of the PSD Gram matrix
        const double nw = norm2(w);
        if (nw == 0.0) return 0.0;
        v = w * (1.0 / nw);
        if (std::abs(lambda - lambda_prev) <= 1e-12 * std::max(1.0, std::abs(lambda))) break;
        lambda_prev = lambda;
    }
    return std::sqrt(std::max(lambda, 0.0));
}

/// Leading singular triple (sigma, u, v) with m ≈ sigma * u * vᵀ on the top
/// subspace. Same deterministic power iteration as spectral_norm.
inline std::tuple<double, Vector, Vector> leading_singular_triple(const Matrix& m) {
    require(!m.empty(), "leading_singular_triple: empty matrix");
    const bool gram_cols = m.cols() <= m.rows();
    const int d = gram_cols ? m.cols() : m.rows();

    Vector v = detail::seeded_unit_vector(d, detail::kPowerIterationSeed);
    double lambda_prev = -1.0;
    for (int iter = 0; iter < 10000; ++iter) {
        Vector w = gram_cols ? transpose_times(m, m * v) : m * transpose_times(m, v);
        const double lambda = dot(v, w);
        const double nw = norm2(w);
        if (nw == 0.0) return {0.0, Vector(m.rows()), Vector(m.cols())};
        v = w * (1.0 / nw);
        if (std::abs(lambda - lambda_prev) <= 1e-12 * std::max(1.0, std::abs(lambda))) break;
        lambda_prev = lambda;
    }
    if (gram_cols) {
        Vector mv = m * v;
        const double sigma = norm2(mv);
        if (sigma == 0.0) return {0.0, Vector(m.rows()), v};
        return {sigma, mv * (1.0 / sigma), v};
    }
    Vector mtu = transpose_times(m, v);
    const double sigma = norm2(mtu);
    if (sigma == 0.0) return {0.0, v, Vector(m.cols())};
    return {sigma, v, mtu * (1.0 / sigma)};
}

inline Matrix elementwise_abs(const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data()) v = std::abs(v);
    return out;
}

namespace detail {

inline void hessenberg_reduce(Matrix& h) {
    const int n = h.rows();
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int k = 0; k + 2 < n; ++k) {
        double scale = 0.0;
        for (int i = k + 1; i < n; ++i) scale += std::abs(h(i, k));
        if (scale == 0.0) continue;
        double xnorm2 = 0.0;
        for (int i = k + 1; i < n; ++i) {
            v[i] = h(i, k) / scale;
            xnorm2 += v[i] * v[i];
        }
        const double xnorm = std::sqrt(xnorm2);
        const double alpha = (v[k + 1] >= 0.0) ? -xnorm : xnorm;
        v[k + 1] -= alpha;
        const double denom = -alpha * v[k + 1];  // vᵀv/2
        if (denom <= 0.0) continue;
        const double tau = 1.0 / denom;
        // rows k+1..n-1, all columns from k
        for (int c = k; c < n; ++c) {
            double s = 0.0;
            for (int i = k + 1; i < n; ++i) s += v[i] * h(i, c);
            s *= tau;
            for (int i = k + 1; i < n; ++i) h(i, c) -= v[i] * s;
        }
        // columns k+1..n-1, all rows
        for (int r = 0; r < n; ++r) {
            double s = 0.0;
            for (int j = k + 1; j < n; ++j) s += v[j] * h(r, j);
            s *= tau;
            for (int j = k + 1; j < n; ++j) h(r, j) -= v[j] * s;
        }
        h(k + 1, k) = alpha * scale;
        for (int i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

inline void append_eig_2x2(double a, double b, double c, double d,
                           std::vector<std::complex<double>>& out) {
    const double p = 0.5 * (a + d);
    const double det = a * d - b * c;
    const double disc = p * p - det;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double l1 = (p >= 0.0) ? p + sq : p - sq;
        const double l2 = (l1 != 0.0) ? det / l1 : ((p >= 0.0) ? p - sq : p + sq);
        out.emplace_back(l1, 0.0);
        out.emplace_back(l2, 0.0);
    } else {
        const double iq = std::sqrt(-disc);
        out.emplace_back(p, iq);
        out.emplace_back(p, -iq);
    }
}

/// One reflector of order 2 or 3 applied as a similarity restricted to the
/// active block [lo..hi]; rows rr..rr+len-1.
inline void apply_bulge_reflector(Matrix& h, int lo, int hi, int rr, int len,
                                  double x, double y, double z) {
    double w[3] = {x, y, len == 3 ? z : 0.0};
    const double scale = std::abs(w[0]) + std::abs(w[1]) + std::abs(w[2]);
    if (scale == 0.0) return;
    for (int i = 0; i < len; ++i) w[i] /= scale;
    double nrm = 0.0;
    for (int i = 0; i < len; ++i) nrm += w[i] * w[i];
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return;
    const double alpha = (w[0] >= 0.0) ? -nrm : nrm;
    w[0] -= alpha;
    const double denom = -alpha * w[0];  // vᵀv/2
    if (denom <= 0.0) return;
    const double tau = 1.0 / denom;     // P = I - tau·v·vᵀ

    const int q = std::max(lo, rr - 1);
    for (int c = q; c <= hi; ++c) {
        double s = 0.0;
        for (int i = 0; i < len; ++i) s += w[i] * h(rr + i, c);
        s *= tau;
        for (int i = 0; i < len; ++i) h(rr + i, c) -= w[i] * s;
    }
    const int rend = std::min(hi, rr + len);
    for (int r = lo; r <= rend; ++r) {
        double s = 0.0;
        for (int j = 0; j < len; ++j) s += w[j] * h(r, rr + j);
        s *= tau;
        for (int j = 0; j < len; ++j) h(r, rr + j) -= w[j] * s;
    }
}

}  // namespace detail

/// All eigenvalues of a real square matrix of order <= 64. Hessenberg
/// reduction followed by Francis double-shift QR with deflation; throws
/// eigensolver_error if the iteration cap is exceeded.
inline Spectrum eigenvalues(const Matrix& m) {
    require(m.square(), "eigenvalues: matrix must be square");
    require(m.rows() <= 64, "eigenvalues: order cap is 64");
    const int n = m.rows();

    Spectrum spec;
    spec.eigenvalues.reserve(n);
    if (n == 1) {
        spec.eigenvalues.emplace_back(m(0, 0), 0.0);
        return spec;
    }

    Matrix h = m;
    detail::hessenberg_reduce(h);

    const double eps = std::numeric_limits<double>::epsilon();
    const double anorm = std::max(frobenius_norm(h), std::numeric_limits<double>::min());
    auto& out = spec.eigenvalues;

    int hi = n - 1;
    int iters_this_block = 0;
    int total_iters = 0;
    const int iter_cap = 60 * n;

    while (hi >= 0) {
        if (hi == 0) {
            out.emplace_back(h(0, 0), 0.0);
            break;
        }
        // Deflate negligible subdiagonals, scanning up from hi.
        int lo = hi;
        while (lo > 0) {
            double s = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
            if (s == 0.0) s = anorm;
            if (std::abs(h(lo, lo - 1)) <= eps * s) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi) {
            out.emplace_back(h(hi, hi), 0.0);
            --hi;
            iters_this_block = 0;
            continue;
        }
        if (lo == hi - 1) {
            detail::append_eig_2x2(h(lo, lo), h(lo, hi), h(hi, lo), h(hi, hi), out);
            hi -= 2;
            iters_this_block = 0;
            continue;
        }

        ++iters_this_block;
        if (++total_iters > iter_cap)
            throw eigensolver_error("eigenvalues: QR iteration did not converge");

        double s, t;
        if (iters_this_block % 10 == 0) {
            // exceptional shift to break symmetric stalling
            const double w = std::abs(h(hi, hi - 1)) + std::abs(h(hi - 1, hi - 2));
            s = 1.5 * w;
            t = w * w;
        } else {
            s = h(hi - 1, hi - 1) + h(hi, hi);
            t = h(hi - 1, hi - 1) * h(hi, hi) - h(hi - 1, hi) * h(hi, hi - 1);
        }

        // First column of (H - aI)(H - bI) on the active block.
        double x = h(lo, lo) * h(lo, lo) + h(lo, lo + 1) * h(lo + 1, lo) - s * h(lo, lo) + t;
        double y = h(lo + 1, lo) * (h(lo, lo) + h(lo + 1, lo + 1) - s);
        double z = h(lo + 2, lo + 1) * h(lo + 1, lo);

        const int bs = hi - lo + 1;
        for (int k0 = 0; k0 <= bs - 3; ++k0) {
            const int rr = lo + k0;
            detail::apply_bulge_reflector(h, lo, hi, rr, 3, x, y, z);
            x = h(rr + 1, rr);
            y = h(rr + 2, rr);
            z = (k0 < bs - 3) ? h(rr + 3, rr) : 0.0;
        }
        detail::apply_bulge_reflector(h, lo, hi, hi - 1, 2, x, y, 0.0);
    }

    // Deterministic order; conjugate partners stay adjacent.
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() > b.imag();
    });
    return spec;
}

/// Perron root M(m) of a nonnegative square matrix: the spectral radius,
/// which Perron-Frobenius guarantees is itself an eigenvalue. Power
/// iteration from a strictly positive start; falls back to the dense
/// eigensolver when the iteration stalls (non-primitive matrices).
inline double perron_root(const Matrix& m) {
    require(m.square(), "perron_root: matrix must be square");
    for (double v : m.data())
        require(v >= 0.0, "perron_root: negative entry violates the Perron precondition");

    const int n = m.rows();
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = 1.0 / std::sqrt(static_cast<double>(n));

    double est_prev = -1.0;
    int consecutive = 0;
    for (int iter = 0; iter < 2000; ++iter) {
        Vector w = m * v;
        const double est = norm2(w);
        if (est == 0.0) return 0.0;
        v = w * (1.0 / est);
        if (std::abs(est - est_prev) <= 1e-12 * std::max(1.0, est)) {
            if (++consecutive >= 2) return est;
        } else {
            consecutive = 0;
        }
        est_prev = est;
    }
    return eigenvalues(m).max_modulus();
}

/// Entrywise composite trapezoid rule for matrix-valued samples over
/// [t_first, t_last]. Times must be strictly increasing, shapes uniform.
inline Matrix trapezoid_integral(const std::vector<std::pair<double, Matrix>>& samples) {
    require(samples.size() >= 2, "trapezoid_integral: need at least 2 samples");
    const int r = samples.front().second.rows();
    const int c = samples.front().second.cols();
    Matrix acc(r, c);
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const auto& [t0, m0] = samples[i];
        const auto& [t1, m1] = samples[i + 1];
        require(t1 > t0, "trapezoid_integral: times must be strictly increasing");
        require(m0.rows() == r && m0.cols() == c && m1.rows() == r && m1.cols() == c,
                "trapezoid_integral: sample shape mismatch");
        const double half_dt = 0.5 * (t1 - t0);
        for (std::size_t k = 0; k < acc.data().size(); ++k)
            acc.data()[k] += half_dt * (m0.data()[k] + m1.data()[k]);
    }
    return acc;
}

}  // namespace osnet
