#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

/// \file matrix.hpp
/// Dense row-major matrices and vectors over double, sized for small
/// problems (state dimensions <= 64). Operations are pure: they take
/// their inputs by const reference and return new values.

namespace osnet {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

class Vector {
public:
    Vector() = default;

    explicit Vector(int dim) : data_(static_cast<std::size_t>(dim), 0.0) {
        require(dim >= 0, "Vector: negative dimension");
    }

    Vector(std::initializer_list<double> entries) : data_(entries) {
        check_finite();
    }

    explicit Vector(std::vector<double> entries) : data_(std::move(entries)) {
        check_finite();
    }

    static Vector zeros(int dim) { return Vector(dim); }

    int dim() const { return static_cast<int>(data_.size()); }

    double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    Vector& operator+=(const Vector& o) {
        require(o.dim() == dim(), "Vector +=: dimension mismatch");
        for (int i = 0; i < dim(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Vector& operator-=(const Vector& o) {
        require(o.dim() == dim(), "Vector -=: dimension mismatch");
        for (int i = 0; i < dim(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Vector& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

private:
    void check_finite() const {
        require(finite(), "Vector: non-finite entry");
    }

    std::vector<double> data_;
};

inline Vector operator+(Vector a, const Vector& b) { return a += b; }
inline Vector operator-(Vector a, const Vector& b) { return a -= b; }
inline Vector operator*(double s, Vector v) { return v *= s; }
inline Vector operator*(Vector v, double s) { return v *= s; }
inline Vector operator-(Vector v) { return v *= -1.0; }

inline double dot(const Vector& a, const Vector& b) {
    require(a.dim() == b.dim(), "dot: dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

inline double norm_inf(const Vector& v) {
    double m = 0.0;
    for (int i = 0; i < v.dim(); ++i) m = std::max(m, std::abs(v[i]));
    return m;
}

/// a += s*b without temporaries; the workhorse of the integrators.
inline void axpy(double s, const Vector& b, Vector& a) {
    require(a.dim() == b.dim(), "axpy: dimension mismatch");
    for (int i = 0; i < a.dim(); ++i) a[i] += s * b[i];
}

class Matrix {
public:
    Matrix() = default;

    Matrix(int rows, int cols)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {
        require(rows >= 0 && cols >= 0, "Matrix: negative shape");
    }

    Matrix(int rows, int cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        require(rows > 0 && cols > 0, "Matrix: empty shape");
        require(data_.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                "Matrix: entries.length != rows*cols");
        for (double v : data_)
            require(std::isfinite(v), "Matrix: non-finite entry");
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        std::vector<double> flat;
        int r = 0, c = -1;
        for (const auto& row : rows) {
            if (c < 0) c = static_cast<int>(row.size());
            require(static_cast<int>(row.size()) == c, "Matrix: ragged rows");
            flat.insert(flat.end(), row.begin(), row.end());
            ++r;
        }
        return Matrix(r, c, std::move(flat));
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }
    bool square() const { return rows_ == cols_ && rows_ > 0; }

    double operator()(int i, int j) const {
        return data_[static_cast<std::size_t>(i) * cols_ + j];
    }
    double& operator()(int i, int j) {
        return data_[static_cast<std::size_t>(i) * cols_ + j];
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Matrix& operator+=(const Matrix& o) {
        require(o.rows_ == rows_ && o.cols_ == cols_, "Matrix +=: shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        require(o.rows_ == rows_ && o.cols_ == cols_, "Matrix -=: shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
inline Matrix operator*(double s, Matrix m) { return m *= s; }
inline Matrix operator*(Matrix m, double s) { return m *= s; }
inline Matrix operator-(Matrix m) { return m *= -1.0; }

inline Matrix operator*(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "Matrix *: inner dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Vector operator*(const Matrix& m, const Vector& v) {
    require(m.cols() == v.dim(), "Matrix * Vector: dimension mismatch");
    Vector out(m.rows());
    for (int i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols(); ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

/// mᵀ·v without materializing the transpose.
inline Vector transpose_times(const Matrix& m, const Vector& v) {
    require(m.rows() == v.dim(), "transpose_times: dimension mismatch");
    Vector out(m.cols());
    for (int i = 0; i < m.rows(); ++i) {
        const double vi = v[i];
        for (int j = 0; j < m.cols(); ++j) out[j] += m(i, j) * vi;
    }
    return out;
}

inline Matrix outer(const Vector& a, const Vector& b) {
    Matrix m(a.dim(), b.dim());
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < b.dim(); ++j) m(i, j) = a[i] * b[j];
    return m;
}

inline double max_abs(const Matrix& m) {
    double r = 0.0;
    for (double v : m.data()) r = std::max(r, std::abs(v));
    return r;
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return std::sqrt(s);
}

}  // namespace osnet
