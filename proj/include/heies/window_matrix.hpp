#pragma once

// Row-equilibrated LU factorization of the window matrix A0, reused for every
// order and every retry within a window.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "equations.hpp"

namespace heies {

class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, std::string label)
        : std::runtime_error(what), equation(std::move(label)) {}
    std::string equation;
};

struct FactorOptions {
    Eigen::Index sparse_threshold = 500;
    double pivot_tolerance = 1e-13;
    bool equilibrate = true;
};

class WindowMatrix {
public:
    WindowMatrix() = default;

    /// Factorizes A (rows labelled for diagnostics).
    void factorize(const Eigen::SparseMatrix<double>& A, const std::vector<std::string>& labels,
                   const FactorOptions& opt = {}) {
        if (A.rows() != A.cols())
            throw std::invalid_argument("window matrix is " + std::to_string(A.rows()) + "x" +
                                        std::to_string(A.cols()) + ", expected square");
        n_ = A.rows();
        row_scale_ = Eigen::VectorXd::Ones(n_);
        if (opt.equilibrate) {
            Eigen::VectorXd mx = Eigen::VectorXd::Zero(n_);
            for (int c = 0; c < A.outerSize(); ++c)
                for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it)
                    mx(it.row()) = std::max(mx(it.row()), std::abs(it.value()));
            for (Eigen::Index r = 0; r < n_; ++r) {
                if (mx(r) == 0.0)
                    throw SingularMatrixError("window matrix row '" + label(labels, r) + "' is identically zero",
                                              label(labels, r));
                row_scale_(r) = 1.0 / mx(r);
            }
        }
        Eigen::SparseMatrix<double> S = row_scale_.asDiagonal() * A;
        sparse_ = n_ >= opt.sparse_threshold;
        if (sparse_) {
            S.makeCompressed();
            splu_.analyzePattern(S);
            splu_.factorize(S);
            if (splu_.info() != Eigen::Success)
                throw SingularMatrixError("sparse LU failed: " + splu_.lastErrorMessage(), "");
        } else {
            dense_ = Eigen::MatrixXd(S);
            lu_.compute(dense_);
            const Eigen::MatrixXd& LU = lu_.matrixLU();
            Eigen::Index worst = 0;
            double smallest = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < n_; ++i) {
                if (std::abs(LU(i, i)) < smallest) {
                    smallest = std::abs(LU(i, i));
                    worst = i;
                }
            }
            if (n_ > 0 && smallest < opt.pivot_tolerance) {
                // (P A).row(P.indices()(i)) == A.row(i)
                const auto& perm = lu_.permutationP().indices();
                Eigen::Index orig = worst;
                for (Eigen::Index i = 0; i < n_; ++i)
                    if (perm(i) == worst) orig = i;
                throw SingularMatrixError("singular window matrix: zero pivot at equation '" +
                                              label(labels, orig) + "'",
                                          label(labels, orig));
            }
        }
        ++factorizations_;
    }

    void factorize(const Eigen::MatrixXd& A, const std::vector<std::string>& labels, const FactorOptions& opt = {}) {
        factorize(Eigen::SparseMatrix<double>(A.sparseView()), labels, opt);
    }

    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        if (n_ == 0) return {};
        const Eigen::VectorXd b = row_scale_.cwiseProduct(rhs);
        if (sparse_) return const_cast<Eigen::SparseLU<Eigen::SparseMatrix<double>>&>(splu_).solve(b);
        return lu_.solve(b);
    }

    [[nodiscard]] Eigen::Index size() const noexcept { return n_; }
    [[nodiscard]] bool is_sparse() const noexcept { return sparse_; }
    [[nodiscard]] std::size_t factorizations() const noexcept { return factorizations_; }

private:
    static std::string label(const std::vector<std::string>& labels, Eigen::Index r) {
        return static_cast<std::size_t>(r) < labels.size() ? labels[static_cast<std::size_t>(r)]
                                                           : "row " + std::to_string(r);
    }

    Eigen::Index n_ = 0;
    bool sparse_ = false;
    Eigen::VectorXd row_scale_;
    Eigen::MatrixXd dense_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> splu_;
    std::size_t factorizations_ = 0;
};

}  // namespace heies
