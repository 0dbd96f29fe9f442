#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "osnet/matrix.hpp"

/// Test-only oracles, independent of the library's own numerical paths.

namespace oracles {

/// All singular values by one-sided Jacobi rotations on the columns.
/// Deliberately unrelated to the power-iteration path under test.
inline std::vector<double> jacobi_singular_values(const osnet::Matrix& input) {
    osnet::Matrix a = input.rows() >= input.cols() ? input : osnet::transpose(input);
    const int m = a.rows(), n = a.cols();

    auto col_dot = [&](int i, int j) {
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += a(r, i) * a(r, j);
        return s;
    };

    const double tol = 1e-14;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int i = 0; i < n - 1; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double alpha = col_dot(i, i);
                const double beta = col_dot(j, j);
                const double gamma = col_dot(i, j);
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = ((zeta >= 0.0) ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int r = 0; r < m; ++r) {
                    const double ai = a(r, i), aj = a(r, j);
                    a(r, i) = c * ai - s * aj;
                    a(r, j) = s * ai + c * aj;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sv(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int r = 0; r < m; ++r) s += a(r, j) * a(r, j);
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

/// Deterministic RNG for test fixtures (xorshift-free; splitmix64).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    double uniform01() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    osnet::Matrix matrix(int rows, int cols, double lo = -1.0, double hi = 1.0) {
        osnet::Matrix m(rows, cols);
        for (double& v : m.data()) v = uniform(lo, hi);
        return m;
    }

    osnet::Vector vector(int dim, double lo = -1.0, double hi = 1.0) {
        osnet::Vector v(dim);
        for (int i = 0; i < dim; ++i) v[i] = uniform(lo, hi);
        return v;
    }

private:
    std::uint64_t state_;
};

/// Central finite difference of a scalar function of one coordinate.
inline double central_difference(const std::function<double(double)>& f, double x0,
                                 double step) {
    return (f(x0 + step) - f(x0 - step)) / (2.0 * step);
}

/// Inverse by Gauss-Jordan elimination with partial pivoting. Test helper;
/// inputs are small and well conditioned.
inline osnet::Matrix gauss_inverse(const osnet::Matrix& input) {
    const int n = input.rows();
    osnet::Matrix a = input;
    osnet::Matrix inv = osnet::Matrix::identity(n);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        for (int c = 0; c < n; ++c) {
            std::swap(a(piv, c), a(col, c));
            std::swap(inv(piv, c), inv(col, c));
        }
        const double diag = a(col, col);
        for (int c = 0; c < n; ++c) {
            a(col, c) /= diag;
            inv(col, c) /= diag;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            for (int c = 0; c < n; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

}  // namespace oracles
