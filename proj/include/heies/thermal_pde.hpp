#pragma once

// Semi-discrete TVD discretization of the pipe heat-transport PDE
//   dtau/dt + (m/(gamma rho)) dtau/dx + (lambda/(gamma rho cp)) (tau - tau_amb) = 0
// and its DT recursion.
//
// Grid node i = 0 is the inlet (boundary), i = M-1 the outlet, in flow order.
// For 1 <= i <= M-1:
//   dtau_i/dt = m/(gamma rho dx) * g_i - lambda/(gamma rho cp) * (tau_i - tau_amb)
//   g_i = tau_{i-1} + dx/2 s_{i-1} - tau_i - dx/2 s_i
// where s is the minmod-selected slope, frozen per window. In the first and
// last equations (i = 1 and i = M-1) both slopes are taken as zero.
// Taking the DT of both sides gives, with M(k) the flow series,
//   T_i(k+1) = [ (1/(gamma rho dx)) sum_m M(m) G_i(k-m)
//               - lambda/(gamma rho cp) (T_i(k) - tau_amb delta(k)) ] / (k+1)
// with G_i(k) the same linear stencil applied to the order-k coefficients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "driver.hpp"
#include "dt_series.hpp"
#include "network.hpp"

namespace heies {

enum class Slope { Zero, Left, Central, Right };

[[nodiscard]] inline double minmod(double a, double b, double c) noexcept {
    if (a > 0.0 && b > 0.0 && c > 0.0) return std::min({a, b, c});
    if (a < 0.0 && b < 0.0 && c < 0.0) return std::max({a, b, c});
    return 0.0;
}

/// Which argument attains the minmod; ties go central, then left, then right.
[[nodiscard]] inline Slope select_slope(double chi1, double chi2, double chi3) noexcept {
    const double mm = minmod(chi1, chi2, chi3);
    if (mm == 0.0) return Slope::Zero;
    if (chi2 == mm) return Slope::Central;
    if (chi1 == mm) return Slope::Left;
    return Slope::Right;
}

/// Slope selections from window-start values tau0 (flow order). Inlet and
/// outlet nodes have no neighbours on one side and are always Zero.
[[nodiscard]] inline std::vector<Slope> freeze_slopes(std::span<const double> tau0, double dx, double theta) {
    const auto M = tau0.size();
    std::vector<Slope> s(M, Slope::Zero);
    for (std::size_t i = 1; i + 1 < M; ++i) {
        const double chi1 = theta * (tau0[i] - tau0[i - 1]) / dx;
        const double chi2 = (tau0[i + 1] - tau0[i - 1]) / (2.0 * dx);
        const double chi3 = theta * (tau0[i + 1] - tau0[i]) / dx;
        s[i] = select_slope(chi1, chi2, chi3);
    }
    return s;
}

struct PipeThermal {
    double area = 1.0;
    double density = 1.0;
    double cp = 1.0;
    double lambda = 0.0;
    double ambient = 0.0;

    [[nodiscard]] double capacity() const noexcept { return area * density; }
    [[nodiscard]] double decay() const noexcept { return lambda / (area * density * cp); }
};

inline PipeThermal thermal_of(const Pipe& p, double ambient) {
    return {p.area, p.density, p.cp, p.lambda, ambient};
}

/// Grid spacing dx' = H/(M-1) <= dx_requested.
[[nodiscard]] inline int grid_points(double length, double dx_requested) {
    if (!(dx_requested > 0.0)) throw std::invalid_argument("dx must be positive");
    const double cells = std::ceil(length / dx_requested - 1e-9);
    return std::max(2, static_cast<int>(cells) + 1);
}

using Stencil = std::vector<std::pair<int, double>>;

/// Weights w such that g_i = sum w * tau[node].
[[nodiscard]] inline Stencil flux_stencil(const std::vector<Slope>& slopes, int i, double dx, double theta) {
    const int M = static_cast<int>(slopes.size());
    Stencil w{{i - 1, 1.0}, {i, -1.0}};
    if (i == 1 || i == M - 1) return w;
    auto add_slope = [&](int node, double scale) {
        switch (slopes[static_cast<std::size_t>(node)]) {
            case Slope::Zero: break;
            case Slope::Left:
                w.emplace_back(node, scale * theta / dx);
                w.emplace_back(node - 1, -scale * theta / dx);
                break;
            case Slope::Central:
                w.emplace_back(node + 1, scale / (2.0 * dx));
                w.emplace_back(node - 1, -scale / (2.0 * dx));
                break;
            case Slope::Right:
                w.emplace_back(node + 1, scale * theta / dx);
                w.emplace_back(node, -scale * theta / dx);
                break;
        }
    };
    add_slope(i - 1, dx / 2.0);
    add_slope(i, -dx / 2.0);
    return w;
}

/// Per-pipe grid with DT coefficients T(i, k), rows in flow order.
struct PipeGrid {
    std::string pipe_id;
    double dx = 1.0;
    int M = 2;
    double theta = 1.0;
    PipeThermal phys;
    std::vector<Slope> slopes;
    std::vector<Stencil> stencils;  // index i = 1..M-1
    Eigen::MatrixXd T;              // M x (order + 1)

    PipeGrid() = default;
    PipeGrid(std::string id, double length, double dx_requested, double theta_, PipeThermal phys_,
             std::size_t order)
        : pipe_id(std::move(id)),
          M(grid_points(length, dx_requested)),
          theta(theta_),
          phys(phys_),
          slopes(static_cast<std::size_t>(M), Slope::Zero),
          T(Eigen::MatrixXd::Zero(M, static_cast<Eigen::Index>(order + 1))) {
        dx = length / (M - 1);
        refresh_stencils();
    }

    [[nodiscard]] std::size_t order() const noexcept { return static_cast<std::size_t>(T.cols() - 1); }

    void resize_order(std::size_t order) {
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(M, static_cast<Eigen::Index>(order + 1));
        const auto keep = std::min(t.cols(), T.cols());
        t.leftCols(keep) = T.leftCols(keep);
        T = std::move(t);
    }

    /// Freeze selections from the zeroth-order column.
    void freeze(double theta_) {
        theta = theta_;
        std::vector<double> tau0(static_cast<std::size_t>(M));
        for (int i = 0; i < M; ++i) tau0[static_cast<std::size_t>(i)] = T(i, 0);
        slopes = freeze_slopes(tau0, dx, theta);
        refresh_stencils();
    }

    void set_slopes(std::vector<Slope> s) {
        slopes = std::move(s);
        refresh_stencils();
    }

    void refresh_stencils() {
        stencils.assign(static_cast<std::size_t>(M), {});
        for (int i = 1; i < M; ++i) stencils[static_cast<std::size_t>(i)] = flux_stencil(slopes, i, dx, theta);
    }

    /// Flip flow order (pipe reversal).
    void reverse() {
        T = T.colwise().reverse().eval();
        std::reverse(slopes.begin(), slopes.end());
        refresh_stencils();
    }

    [[nodiscard]] double flux(int i, Eigen::Index k) const {
        double g = 0.0;
        for (const auto& [node, w] : stencils[static_cast<std::size_t>(i)]) g += w * T(node, k);
        return g;
    }
};

/// T_i(k+1) for i = 1..M-1 from T(.,0..k) and the flow series M(0..k).
[[nodiscard]] inline Eigen::VectorXd dt_pde_coefficient(const PipeGrid& g, std::span<const double> mdot,
                                                        std::size_t k) {
    if (k + 1 > g.order())
        throw dt::DimensionError("pde order " + std::to_string(k + 1) + " exceeds grid storage " +
                                 std::to_string(g.order()));
    if (mdot.size() <= k) throw dt::DimensionError("flow series shorter than requested order");
    const double inv_cap = 1.0 / (g.phys.capacity() * g.dx);
    const double decay = g.phys.decay();
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::VectorXd out(g.M - 1);
    for (int i = 1; i < g.M; ++i) {
        double conv = 0.0;
        for (std::size_t m = 0; m <= k; ++m) conv += mdot[m] * g.flux(i, static_cast<Eigen::Index>(k - m));
        double src = g.T(i, kk);
        if (k == 0) src -= g.phys.ambient;
        out(i - 1) = (inv_cap * conv - decay * src) / static_cast<double>(k + 1);
    }
    return out;
}

/// Writes T_i(k+1) into the grid.
inline void advance_order(PipeGrid& g, std::span<const double> mdot, std::size_t k) {
    const Eigen::VectorXd c = dt_pde_coefficient(g, mdot, k);
    g.T.col(static_cast<Eigen::Index>(k + 1)).tail(g.M - 1) = c;
}

/// Time derivative of the semi-discrete system for given slopes; tau[0] is the
/// inlet value and its derivative is reported as 0.
inline void semi_discrete_rhs(std::span<const double> tau, double mdot, const PipeThermal& phys, double dx,
                              double theta, const std::vector<Slope>& slopes, std::span<double> dtau) {
    const int M = static_cast<int>(tau.size());
    const double a = mdot / (phys.capacity() * dx);
    const double b = phys.decay();
    dtau[0] = 0.0;
    for (int i = 1; i < M; ++i) {
        double g = 0.0;
        for (const auto& [node, w] : flux_stencil(slopes, i, dx, theta)) g += w * tau[static_cast<std::size_t>(node)];
        dtau[static_cast<std::size_t>(i)] = a * g - b * (tau[static_cast<std::size_t>(i)] - phys.ambient);
    }
}

/// Same operator with selections re-evaluated from the current state.
inline void semi_discrete_rhs_dynamic(std::span<const double> tau, double mdot, const PipeThermal& phys,
                                      double dx, double theta, std::span<double> dtau) {
    semi_discrete_rhs(tau, mdot, phys, dx, theta, freeze_slopes(tau, dx, theta), dtau);
}

[[nodiscard]] inline double total_variation(std::span<const double> v) {
    double tv = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
    return tv;
}

/// Characteristic-line solution for constant flow. Before the inlet signal
/// reaches x, the initial profile is transported and relaxed toward ambient.
/// The default initial profile is the steady state for the boundary value at 0.
[[nodiscard]] inline double reference_exact(const DriverProfile& boundary, const PipeThermal& phys, double mdot,
                                            double x, double t,
                                            const std::function<double(double)>& initial = {}) {
    if (!(mdot > 0.0)) throw std::invalid_argument("reference_exact needs positive mass flow");
    const double v = mdot / phys.capacity();
    const double delay = x / v;
    const double b = phys.decay();
    if (t >= delay) {
        const double att = std::exp(-b * delay);
        return (1.0 - att) * phys.ambient + att * boundary.value(t - delay);
    }
    const double x0 = x - v * t;
    double tau0;
    if (initial) {
        tau0 = initial(x0);
    } else {
        const double att0 = std::exp(-b * x0 / v);
        tau0 = (1.0 - att0) * phys.ambient + att0 * boundary.value(0.0);
    }
    return phys.ambient + (tau0 - phys.ambient) * std::exp(-b * t);
}

}  // namespace heies
