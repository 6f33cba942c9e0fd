#pragma once

// Known-variable trajectories and their DT expansion at a window start.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dt_series.hpp"

namespace heies {

class DriverError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace profile {

struct Constant {
    double value = 0.0;
};

// values[0] holds before times[0]; values[i+1] from times[i] on.
struct Step {
    std::vector<double> times;
    std::vector<double> values;
};

// Linear between knots, flat outside.
struct PiecewiseLinear {
    std::vector<double> times;
    std::vector<double> values;
};

// offset + amplitude * sin(2*pi*(t - start)/period + phase) on [start, end],
// held at the edge values outside.
struct Sinusoid {
    double offset = 0.0;
    double amplitude = 0.0;
    double period = 1.0;
    double phase = 0.0;
    double start = 0.0;
    std::optional<double> end;
};

// sum_i coeffs[i] * t^i in absolute time.
struct Polynomial {
    std::vector<double> coeffs;
};

}  // namespace profile

class DriverProfile {
public:
    using Shape = std::variant<profile::Constant, profile::Step, profile::PiecewiseLinear,
                               profile::Sinusoid, profile::Polynomial>;

    DriverProfile() : shape_(profile::Constant{}) {}
    DriverProfile(Shape shape) : shape_(std::move(shape)) { validate(); }  // NOLINT

    static DriverProfile constant(double v) { return DriverProfile(profile::Constant{v}); }

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }

    [[nodiscard]] std::string kind() const {
        return std::visit(
            [](const auto& s) -> std::string {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, profile::Constant>) return "constant";
                else if constexpr (std::is_same_v<S, profile::Step>) return "step";
                else if constexpr (std::is_same_v<S, profile::PiecewiseLinear>) return "piecewise_linear";
                else if constexpr (std::is_same_v<S, profile::Sinusoid>) return "sinusoid";
                else return "polynomial";
            },
            shape_);
    }

    /// Times where the profile or one of its derivatives jumps.
    [[nodiscard]] std::vector<double> breakpoints() const {
        return std::visit(
            [](const auto& s) -> std::vector<double> {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, profile::Step> ||
                              std::is_same_v<S, profile::PiecewiseLinear>) {
                    return s.times;
                } else if constexpr (std::is_same_v<S, profile::Sinusoid>) {
                    std::vector<double> b{s.start};
                    if (s.end) b.push_back(*s.end);
                    return b;
                } else {
                    return {};
                }
            },
            shape_);
    }

    /// First breakpoint strictly after t.
    [[nodiscard]] std::optional<double> next_breakpoint(double t) const {
        for (double b : breakpoints())
            if (b > t) return b;
        return std::nullopt;
    }

    [[nodiscard]] bool is_breakpoint(double t) const {
        const auto b = breakpoints();
        return std::find(b.begin(), b.end(), t) != b.end();
    }

    /// Right-continuous value.
    [[nodiscard]] double value(double t) const { return expand(t, 0)[0]; }

    /// W(0..K) of the profile expanded at t0, valid on [t0, next breakpoint].
    [[nodiscard]] dt::Series<double> expand(double t0, std::size_t K) const {
        dt::Series<double> w(K);
        std::visit([&](const auto& s) { fill(s, t0, w); }, shape_);
        return w;
    }

    /// Multiplies every value by factor (load-level sweeps).
    [[nodiscard]] DriverProfile scaled(double factor) const {
        Shape s = shape_;
        std::visit(
            [factor](auto& p) {
                using S = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<S, profile::Constant>) {
                    p.value *= factor;
                } else if constexpr (std::is_same_v<S, profile::Step> ||
                                     std::is_same_v<S, profile::PiecewiseLinear>) {
                    for (auto& v : p.values) v *= factor;
                } else if constexpr (std::is_same_v<S, profile::Sinusoid>) {
                    p.offset *= factor;
                    p.amplitude *= factor;
                } else {
                    for (auto& c : p.coeffs) c *= factor;
                }
            },
            s);
        return DriverProfile(std::move(s));
    }

    /// Uniform relative noise on breakpoint values: v *= 1 + U(-amplitude, amplitude).
    /// Profiles without breakpoint values are returned unchanged.
    template <class Rng>
    [[nodiscard]] DriverProfile with_noise(double amplitude, Rng& rng) const {
        Shape s = shape_;
        std::uniform_real_distribution<double> u(-amplitude, amplitude);
        std::visit(
            [&](auto& p) {
                using S = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<S, profile::Step> ||
                              std::is_same_v<S, profile::PiecewiseLinear>) {
                    for (auto& v : p.values) v *= 1.0 + u(rng);
                }
            },
            s);
        return DriverProfile(std::move(s));
    }

private:
    void validate() const {
        std::visit(
            [](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, profile::Step>) {
                    if (s.values.size() != s.times.size() + 1)
                        throw DriverError("step profile needs one more value than breakpoints");
                    check_increasing(s.times);
                } else if constexpr (std::is_same_v<S, profile::PiecewiseLinear>) {
                    if (s.times.empty() || s.values.size() != s.times.size())
                        throw DriverError("piecewise-linear profile needs matching times and values");
                    check_increasing(s.times);
                } else if constexpr (std::is_same_v<S, profile::Sinusoid>) {
                    if (!(s.period > 0.0)) throw DriverError("sinusoid period must be positive");
                    if (s.end && !(*s.end > s.start))
                        throw DriverError("sinusoid end must follow its start");
                } else if constexpr (std::is_same_v<S, profile::Polynomial>) {
                    if (s.coeffs.empty()) throw DriverError("polynomial profile has no coefficients");
                }
            },
            shape_);
    }

    static void check_increasing(const std::vector<double>& t) {
        for (std::size_t i = 1; i < t.size(); ++i)
            if (!(t[i] > t[i - 1])) throw DriverError("breakpoint times must be strictly increasing");
    }

    static void fill(const profile::Constant& s, double, dt::Series<double>& w) { w[0] = s.value; }

    static void fill(const profile::Step& s, double t0, dt::Series<double>& w) {
        const auto it = std::upper_bound(s.times.begin(), s.times.end(), t0);
        w[0] = s.values[static_cast<std::size_t>(it - s.times.begin())];
    }

    static void fill(const profile::PiecewiseLinear& s, double t0, dt::Series<double>& w) {
        const auto& t = s.times;
        if (t0 < t.front()) {
            w[0] = s.values.front();
            return;
        }
        const auto i = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), t0) - t.begin());
        if (i >= t.size()) {
            w[0] = s.values.back();
            return;
        }
        const double slope = (s.values[i] - s.values[i - 1]) / (t[i] - t[i - 1]);
        w[0] = s.values[i - 1] + slope * (t0 - t[i - 1]);
        if (w.order() >= 1) w[1] = slope;
    }

    static void fill(const profile::Sinusoid& s, double t0, dt::Series<double>& w) {
        const double omega = 2.0 * std::numbers::pi / s.period;
        double tau = t0;
        bool frozen = false;
        if (t0 < s.start) {
            tau = s.start;
            frozen = true;
        } else if (s.end && t0 >= *s.end) {
            tau = *s.end;
            frozen = true;
        }
        double sk = std::sin(omega * (tau - s.start) + s.phase);
        double ck = std::cos(omega * (tau - s.start) + s.phase);
        w[0] = s.offset + s.amplitude * sk;
        if (frozen) return;
        for (std::size_t k = 0; k < w.order(); ++k) {
            const double sn = omega * ck / static_cast<double>(k + 1);
            const double cn = -omega * sk / static_cast<double>(k + 1);
            sk = sn;
            ck = cn;
            w[k + 1] = s.amplitude * sk;
        }
    }

    static void fill(const profile::Polynomial& s, double t0, dt::Series<double>& w) {
        // Taylor shift: coefficient j of p(t0 + tau) = p^(j)(t0)/j!.
        std::vector<double> c = s.coeffs;
        for (std::size_t j = 0; j <= w.order(); ++j) {
            if (c.empty()) break;
            double acc = 0.0;
            for (std::size_t i = c.size(); i-- > 0;) acc = acc * t0 + c[i];
            w[j] = acc;
            // c <- derivative / (j+1)
            std::vector<double> d(c.size() > 1 ? c.size() - 1 : 0);
            for (std::size_t i = 1; i < c.size(); ++i)
                d[i - 1] = c[i] * static_cast<double>(i) / static_cast<double>(j + 1);
            c = std::move(d);
        }
    }

    Shape shape_;
};

/// DT expansion of a driver on [window_start, window_start + window_length].
/// A window that straddles a breakpoint has no Taylor series and is rejected.
inline dt::Series<double> derive_driver_dt(const DriverProfile& p, double window_start, std::size_t K,
                                           double window_length = 0.0) {
    if (window_length > 0.0) {
        const auto nb = p.next_breakpoint(window_start);
        if (nb && *nb < window_start + window_length - 1e-12 * std::max(1.0, std::abs(*nb)))
            throw DriverError("window [" + std::to_string(window_start) + ", " +
                              std::to_string(window_start + window_length) + "] straddles breakpoint " +
                              std::to_string(*nb));
    }
    return p.expand(window_start, K);
}

}  // namespace heies
