#pragma once

// Differential-transformation (Taylor coefficient) series arithmetic.
//
// A series holds X(0..K) such that x(t) = sum_k X(k) t^k on the current
// window, with t measured from the window start.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace heies::dt {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Scalar DT series with dense coefficient storage.
template <std::floating_point T = double>
class Series {
public:
    Series() = default;
    explicit Series(std::size_t order) : coeffs_(order + 1, T{0}) {}
    Series(std::initializer_list<T> c) : coeffs_(c) {}
    explicit Series(std::vector<T> c) : coeffs_(std::move(c)) {}

    /// Constant c as c*delta(k).
    static Series constant(T c, std::size_t order) {
        Series s(order);
        s.coeffs_[0] = c;
        return s;
    }

    [[nodiscard]] std::size_t order() const noexcept {
        return coeffs_.empty() ? 0 : coeffs_.size() - 1;
    }
    [[nodiscard]] std::size_t size() const noexcept { return coeffs_.size(); }
    [[nodiscard]] bool empty() const noexcept { return coeffs_.empty(); }

    T& operator[](std::size_t k) { return coeffs_[k]; }
    const T& operator[](std::size_t k) const { return coeffs_[k]; }

    [[nodiscard]] std::span<const T> coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] std::span<T> coeffs() noexcept { return coeffs_; }

    /// Horner evaluation of the polynomial at t.
    [[nodiscard]] T evaluate(T t) const noexcept { return evaluate(t, order()); }

    /// Evaluate using only coefficients 0..upto.
    [[nodiscard]] T evaluate(T t, std::size_t upto) const noexcept {
        if (coeffs_.empty()) return T{0};
        upto = std::min(upto, order());
        T acc = coeffs_[upto];
        for (std::size_t k = upto; k-- > 0;) acc = acc * t + coeffs_[k];
        return acc;
    }

    /// d/dt as a series: B(k) = (k+1) A(k+1). Order drops by one.
    [[nodiscard]] Series derivative() const {
        if (order() == 0) return Series(std::vector<T>{T{0}});
        Series d(order() - 1);
        for (std::size_t k = 0; k + 1 < coeffs_.size(); ++k)
            d.coeffs_[k] = static_cast<T>(k + 1) * coeffs_[k + 1];
        return d;
    }

    Series& operator+=(const Series& o) {
        check_same(o);
        for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
        return *this;
    }
    Series& operator-=(const Series& o) {
        check_same(o);
        for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= o.coeffs_[k];
        return *this;
    }
    Series& operator*=(T c) {
        for (auto& x : coeffs_) x *= c;
        return *this;
    }

    friend Series operator+(Series a, const Series& b) { return a += b; }
    friend Series operator-(Series a, const Series& b) { return a -= b; }
    friend Series operator*(T c, Series a) { return a *= c; }
    friend Series operator*(Series a, T c) { return a *= c; }

    bool operator==(const Series&) const = default;

private:
    void check_same(const Series& o) const {
        if (o.coeffs_.size() != coeffs_.size())
            throw DimensionError("series order mismatch: " + std::to_string(order()) + " vs " +
                                 std::to_string(o.order()));
    }

    std::vector<T> coeffs_;
};

/// k-th coefficient of the product a(t)*b(t): sum_{m=0..k} a(m) b(k-m).
template <std::floating_point T>
[[nodiscard]] T convolution(std::span<const T> a, std::span<const T> b, std::size_t k) {
    if (k >= a.size() || k >= b.size())
        throw DimensionError("convolution order " + std::to_string(k) + " exceeds series length");
    T acc{0};
    for (std::size_t m = 0; m <= k; ++m) acc += a[m] * b[k - m];
    return acc;
}

template <std::floating_point T>
[[nodiscard]] T convolution(const Series<T>& a, const Series<T>& b, std::size_t k) {
    return convolution<T>(a.coeffs(), b.coeffs(), k);
}

/// Same sum with the m = 0 and m = k end terms removed; the part of an
/// order-k product that depends only on strictly lower orders.
template <std::floating_point T>
[[nodiscard]] T convolution_interior(std::span<const T> a, std::span<const T> b, std::size_t k) {
    T acc{0};
    for (std::size_t m = 1; m < k; ++m) acc += a[m] * b[k - m];
    return acc;
}

/// Full product truncated to the common order.
template <std::floating_point T>
[[nodiscard]] Series<T> product(const Series<T>& a, const Series<T>& b) {
    const std::size_t n = std::min(a.order(), b.order());
    Series<T> out(n);
    for (std::size_t k = 0; k <= n; ++k) out[k] = convolution(a, b, k);
    return out;
}

/// Series of vectors, one column per order.
class VectorSeries {
public:
    VectorSeries() = default;
    VectorSeries(Eigen::Index dim, std::size_t order)
        : coeffs_(Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(order + 1))) {}
    explicit VectorSeries(Eigen::MatrixXd coeffs) : coeffs_(std::move(coeffs)) {}

    [[nodiscard]] Eigen::Index dim() const noexcept { return coeffs_.rows(); }
    [[nodiscard]] std::size_t order() const noexcept {
        return coeffs_.cols() == 0 ? 0 : static_cast<std::size_t>(coeffs_.cols() - 1);
    }

    [[nodiscard]] auto coefficient(std::size_t k) { return coeffs_.col(static_cast<Eigen::Index>(k)); }
    [[nodiscard]] auto coefficient(std::size_t k) const {
        return coeffs_.col(static_cast<Eigen::Index>(k));
    }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return coeffs_; }

    [[nodiscard]] Eigen::VectorXd evaluate(double t) const {
        Eigen::VectorXd acc = coeffs_.col(coeffs_.cols() - 1);
        for (Eigen::Index k = coeffs_.cols() - 1; k-- > 0;) acc = acc * t + coeffs_.col(k);
        return acc;
    }

    friend VectorSeries operator+(const VectorSeries& a, const VectorSeries& b) {
        a.check_same(b);
        return VectorSeries(a.coeffs_ + b.coeffs_);
    }
    friend VectorSeries operator*(double c, const VectorSeries& a) { return VectorSeries(c * a.coeffs_); }

private:
    void check_same(const VectorSeries& o) const {
        if (o.coeffs_.rows() != coeffs_.rows() || o.coeffs_.cols() != coeffs_.cols())
            throw DimensionError("vector series shape mismatch");
    }

    Eigen::MatrixXd coeffs_;
};

/// k-th coefficient of diag(a(t)) b(t).
[[nodiscard]] inline Eigen::VectorXd product(const VectorSeries& a, const VectorSeries& b, std::size_t k) {
    if (a.dim() != b.dim()) throw DimensionError("vector series dimension mismatch");
    if (k > a.order() || k > b.order()) throw DimensionError("product order exceeds series order");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(a.dim());
    for (std::size_t m = 0; m <= k; ++m) acc += a.coefficient(m).cwiseProduct(b.coefficient(k - m));
    return acc;
}

/// Smallest t in (0, dt] where the polynomial vanishes, bracketed by a
/// uniform scan and refined by bisection. Empty when no sign change exists.
template <std::floating_point T>
[[nodiscard]] std::optional<T> first_root_in_window(const Series<T>& a, T dt, int scan_intervals = 64) {
    if (a.empty() || !(dt > T{0})) return std::nullopt;
    T scale{0};
    for (T c : a.coeffs()) scale = std::max(scale, std::abs(c));
    if (scale == T{0}) return std::nullopt;

    T lo = T{0};
    T f_lo = a.evaluate(lo);
    for (int i = 1; i <= scan_intervals; ++i) {
        const T hi = dt * static_cast<T>(i) / static_cast<T>(scan_intervals);
        const T f_hi = a.evaluate(hi);
        if (f_hi == T{0}) return hi;
        if ((f_lo > T{0}) != (f_hi > T{0}) && f_lo != T{0}) {
            T b_lo = lo, b_hi = hi, fb_lo = f_lo;
            while (b_hi - b_lo > std::numeric_limits<T>::epsilon() * b_hi) {
                const T mid = T(0.5) * (b_lo + b_hi);
                if (mid <= b_lo || mid >= b_hi) break;
                const T fm = a.evaluate(mid);
                if (fm == T{0}) return mid;
                if ((fm > T{0}) == (fb_lo > T{0})) {
                    b_lo = mid;
                    fb_lo = fm;
                } else {
                    b_hi = mid;
                }
            }
            // the bracket end with the smaller residual
            return std::abs(a.evaluate(b_lo)) <= std::abs(a.evaluate(b_hi)) ? b_lo : b_hi;
        }
        lo = hi;
        f_lo = f_hi;
    }
    return std::nullopt;
}

}  // namespace heies::dt
