#pragma once

#include <roughpath/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace roughpath {

/**
 * @brief Dense real vector of fixed length.
 *
 * Elements of V = R^d. Storage is a plain std::vector; the dimension is
 * fixed at construction and every binary operation checks it.
 */
class Vec {
public:
    Vec() = default;
    explicit Vec(std::size_t n, double value = 0.0) : data_(n, value) {}
    Vec(std::initializer_list<double> values) : data_(values) {}
    explicit Vec(std::span<const double> values) : data_(values.begin(), values.end()) {}
    explicit Vec(std::vector<double> values) : data_(std::move(values)) {}

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> span() noexcept { return data_; }
    std::span<const double> span() const noexcept { return data_; }
    operator std::span<const double>() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    const std::vector<double>& values() const noexcept { return data_; }

    Vec& operator+=(const Vec& o) {
        check_same(o, "Vec +=");
        for (std::size_t i = 0; i < size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) {
        check_same(o, "Vec -=");
        for (std::size_t i = 0; i < size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Vec& operator*=(double a) noexcept {
        for (double& x : data_) x *= a;
        return *this;
    }

    friend bool operator==(const Vec&, const Vec&) = default;

private:
    void check_same(const Vec& o, const char* op) const {
        detail::require_shape(size() == o.size(),
                              std::string(op) + ": dimension mismatch " + std::to_string(size()) +
                                  " vs " + std::to_string(o.size()));
    }

    std::vector<double> data_;
};

inline Vec operator+(Vec a, const Vec& b) { return a += b; }
inline Vec operator-(Vec a, const Vec& b) { return a -= b; }
inline Vec operator*(double s, Vec a) { return a *= s; }
inline Vec operator*(Vec a, double s) { return a *= s; }

inline double dot(std::span<const double> a, std::span<const double> b) {
    detail::require_shape(a.size() == b.size(), "dot: dimension mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double euclidean_norm(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Max-abs distance, used for iteration stopping rules.
inline double sup_distance(std::span<const double> a, std::span<const double> b) {
    detail::require_shape(a.size() == b.size(), "sup_distance: dimension mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/**
 * @brief Dense row-major real matrix.
 *
 * Represents both V (x) V = R^{d x d} and L(R^n, R^m) = R^{m x n}.
 */
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, value) {}
    Mat(std::size_t rows, std::size_t cols, std::vector<double> row_major)
        : rows_(rows), cols_(cols), data_(std::move(row_major)) {
        detail::require_shape(data_.size() == rows_ * cols_, "Mat: storage size does not match shape");
    }
    Mat(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            detail::require_shape(r.size() == cols_, "Mat: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> span() noexcept { return data_; }
    std::span<const double> span() const noexcept { return data_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    Mat transpose() const {
        Mat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Mat& operator+=(const Mat& o) {
        check_same(o, "Mat +=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        check_same(o, "Mat -=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Mat& operator*=(double a) noexcept {
        for (double& x : data_) x *= a;
        return *this;
    }

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    void check_same(const Mat& o, const char* op) const {
        detail::require_shape(rows_ == o.rows_ && cols_ == o.cols_, std::string(op) + ": shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Mat operator+(Mat a, const Mat& b) { return a += b; }
inline Mat operator-(Mat a, const Mat& b) { return a -= b; }
inline Mat operator*(double s, Mat a) { return a *= s; }
inline Mat operator*(Mat a, double s) { return a *= s; }

inline double frobenius_norm(const Mat& m) noexcept { return euclidean_norm(m.span()); }

/// Dyadic product v (x) w = v w^T.
inline Mat outer(std::span<const double> v, std::span<const double> w) {
    detail::require_shape(v.size() == w.size(), "outer: dimension mismatch");
    Mat m(v.size(), w.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < w.size(); ++j) m(i, j) = v[i] * w[j];
    return m;
}

inline Mat sym(const Mat& m) {
    detail::require_shape(m.is_square(), "sym: matrix is not square");
    Mat s(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
}

inline Mat anti(const Mat& m) {
    detail::require_shape(m.is_square(), "anti: matrix is not square");
    Mat a(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) a(i, j) = 0.5 * (m(i, j) - m(j, i));
    return a;
}

inline Vec operator*(const Mat& m, std::span<const double> v) {
    detail::require_shape(m.cols() == v.size(), "matvec: shape mismatch");
    Vec out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}
inline Vec operator*(const Mat& m, const Vec& v) { return m * v.span(); }

inline Mat operator*(const Mat& a, const Mat& b) {
    detail::require_shape(a.cols() == b.rows(), "matmul: shape mismatch");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

/// Full contraction sum_{ab} a[a][b] * b[a][b] (Frobenius inner product).
inline double contract(std::span<const double> a, std::span<const double> b) { return dot(a, b); }

namespace detail {

// out += v (x) w, all length-d, out is d*d row-major. Used in hot loops.
inline void add_outer(double* out, const double* v, const double* w, std::size_t d) noexcept {
    for (std::size_t i = 0; i < d; ++i) {
        const double vi = v[i];
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] += vi * w[j];
    }
}

inline bool all_finite(std::span<const double> xs) noexcept {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

} // namespace detail

} // namespace roughpath
