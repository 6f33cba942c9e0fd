#pragma once

// Algebraic equations of the form
//   sum_i a_i x_i + sum_j b_j x_p(j) x_q(j) + c = 0.
// Every network equation (continuity, loop, mixing, node power, power flow,
// coupling, identities) fits this shape. Its order-k DT is
//   sum_i a_i X_i(k) + sum_j b_j sum_m X_p(m) X_q(k-m) + c delta(k) = 0,
// which is linear in the order-k unknowns with the Jacobian at the order-0
// values as coefficients.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace heies {

struct LinTerm {
    int var;
    double coef;
};

struct BilTerm {
    int a;
    int b;
    double coef;
};

struct Equation {
    std::string label;
    std::string family;
    std::vector<LinTerm> lin;
    std::vector<BilTerm> bil;
    double constant = 0.0;

    /// Time-domain residual at values x.
    [[nodiscard]] double value(const Eigen::VectorXd& x) const {
        double r = constant;
        for (const auto& t : lin) r += t.coef * x(t.var);
        for (const auto& t : bil) r += t.coef * x(t.a) * x(t.b);
        return r;
    }

    /// max(1, largest term magnitude): the normalizer of scaled residuals.
    [[nodiscard]] double scale(const Eigen::VectorXd& x) const {
        double s = std::max(1.0, std::abs(constant));
        for (const auto& t : lin) s = std::max(s, std::abs(t.coef * x(t.var)));
        for (const auto& t : bil) s = std::max(s, std::abs(t.coef * x(t.a) * x(t.b)));
        return s;
    }

    [[nodiscard]] double scaled_value(const Eigen::VectorXd& x) const { return std::abs(value(x)) / scale(x); }

    /// Order-k coefficient of the residual from the coefficient table C
    /// (variables x orders).
    [[nodiscard]] double order_value(const Eigen::MatrixXd& C, Eigen::Index k) const {
        double r = k == 0 ? constant : 0.0;
        for (const auto& t : lin) r += t.coef * C(t.var, k);
        for (const auto& t : bil) {
            double conv = 0.0;
            for (Eigen::Index m = 0; m <= k; ++m) conv += C(t.a, m) * C(t.b, k - m);
            r += t.coef * conv;
        }
        return r;
    }

    /// Appends d(residual)/dx at x for variables with col[var] >= 0.
    void jacobian(const Eigen::VectorXd& x, const std::vector<int>& col, int row,
                  std::vector<Eigen::Triplet<double>>& out) const {
        for (const auto& t : lin)
            if (col[static_cast<std::size_t>(t.var)] >= 0)
                out.emplace_back(row, col[static_cast<std::size_t>(t.var)], t.coef);
        for (const auto& t : bil) {
            if (col[static_cast<std::size_t>(t.a)] >= 0)
                out.emplace_back(row, col[static_cast<std::size_t>(t.a)], t.coef * x(t.b));
            if (col[static_cast<std::size_t>(t.b)] >= 0)
                out.emplace_back(row, col[static_cast<std::size_t>(t.b)], t.coef * x(t.a));
        }
    }
};

/// Dense Jacobian of rows w.r.t. the unknown columns.
[[nodiscard]] inline Eigen::MatrixXd dense_jacobian(const std::vector<Equation>& rows, const Eigen::VectorXd& x,
                                                    const std::vector<int>& col, Eigen::Index ncols) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r].jacobian(x, col, static_cast<int>(r), trip);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), ncols);
    for (const auto& t : trip) J(t.row(), t.col()) += t.value();
    return J;
}

[[nodiscard]] inline Eigen::SparseMatrix<double> sparse_jacobian(const std::vector<Equation>& rows,
                                                                 const Eigen::VectorXd& x,
                                                                 const std::vector<int>& col, Eigen::Index ncols) {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r].jacobian(x, col, static_cast<int>(r), trip);
    Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(rows.size()), ncols);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

}  // namespace heies
