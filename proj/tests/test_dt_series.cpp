#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heies/dt_series.hpp"
#include "oracles.hpp"

using heies::dt::Series;
namespace dt = heies::dt;

TEST(DtSeries, AddCoefficientwise) {
    const Series<double> a{1, 2}, b{3, 4};
    EXPECT_EQ(a + b, (Series<double>{4, 6}));
    EXPECT_EQ(a + Series<double>(1), a);
}

TEST(DtSeries, AddOrderMismatchThrows) {
    EXPECT_THROW((void)(Series<double>{1, 2} + Series<double>{1, 2, 3}), dt::DimensionError);
}

TEST(DtSeries, SumEvaluatesToSumOfValues) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> ca(6), cb(6);
        for (auto& c : ca) c = u(rng);
        for (auto& c : cb) c = u(rng);
        const double t = std::abs(u(rng));
        const Series<double> a(ca), b(cb);
        EXPECT_NEAR((a + b).evaluate(t), oracle::power_sum(ca, t) + oracle::power_sum(cb, t), 1e-12);
    }
}

TEST(DtSeries, ProductOrderK) {
    const Series<double> a{1, 0, 0}, b{2, 3, 0};
    EXPECT_DOUBLE_EQ(dt::convolution(a, b, 1), 3.0);
    const Series<double> t{0, 1};
    EXPECT_DOUBLE_EQ(dt::convolution(t, t, 1), 0.0);
}

TEST(DtSeries, ProductMatchesPolynomialMultiplication) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> ca(4), cb(4);
        for (auto& c : ca) c = u(rng);
        for (auto& c : cb) c = u(rng);
        // pad so the full product fits
        std::vector<double> pa = ca, pb = cb;
        pa.resize(7, 0.0);
        pb.resize(7, 0.0);
        const auto full = oracle::poly_mul(ca, cb);
        const auto prod = dt::product(Series<double>(pa), Series<double>(pb));
        for (std::size_t k = 0; k < full.size(); ++k) EXPECT_NEAR(prod[k], full[k], 1e-12);
    }
}

TEST(DtSeries, ProductEvaluatesToProductOfValues) {
    const Series<double> a{1, -2, 0.5, 0, 0, 0, 0}, b{0.3, 1, 0, 2, 0, 0, 0};
    const auto p = dt::product(a, b);
    for (double t : {0.0, 0.3, 1.1}) EXPECT_NEAR(p.evaluate(t), a.evaluate(t) * b.evaluate(t), 1e-12);
}

TEST(DtSeries, VectorProductIsElementwise) {
    Eigen::MatrixXd ma(2, 3), mb(2, 3);
    ma << 1, 2, 0, 0, 1, 0;
    mb << 2, 3, 0, 0, 1, 0;
    const dt::VectorSeries a(ma), b(mb);
    const Eigen::VectorXd k1 = dt::product(a, b, 1);
    EXPECT_DOUBLE_EQ(k1(0), 1 * 3 + 2 * 2);
    EXPECT_DOUBLE_EQ(k1(1), 0.0);
    EXPECT_THROW((void)dt::product(a, dt::VectorSeries(Eigen::MatrixXd::Zero(3, 3)), 1), dt::DimensionError);
}

TEST(DtSeries, Derivative) {
    EXPECT_EQ((Series<double>{0, 0, 1}).derivative(), (Series<double>{0, 2}));
    EXPECT_EQ((Series<double>{5}).derivative(), (Series<double>{0}));
    const Series<double> p{1, -1, 3, 0.5};
    const auto d = p.derivative();
    for (double t : {0.0, 0.7, 2.0}) EXPECT_NEAR(d.evaluate(t), -1 + 6 * t + 1.5 * t * t, 1e-12);
}

TEST(DtSeries, FiniteDifferenceMatchesDerivative) {
    const Series<double> p{0.2, -1, 3, 0.5, -0.25};
    const double h = 1e-6;
    for (double t : {0.1, 0.9, 1.7}) {
        const double fd = (p.evaluate(t + h) - p.evaluate(t - h)) / (2 * h);
        const double d = p.derivative().evaluate(t);
        EXPECT_NEAR(fd, d, 1e-5 * std::abs(d));
    }
}

TEST(DtSeries, Evaluate) {
    EXPECT_DOUBLE_EQ((Series<double>{1, 1}).evaluate(2.0), 3.0);
    const Series<double> a{4.5, 2, -1, 7};
    EXPECT_EQ(a.evaluate(0.0), 4.5);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> c(9);
        for (auto& x : c) x = u(rng);
        const double t = std::abs(u(rng)) * 2;
        EXPECT_NEAR(Series<double>(c).evaluate(t), oracle::power_sum(c, t), 1e-12 * (1 + std::pow(t, 8)));
    }
}

TEST(DtSeries, Linearity) {
    const Series<double> a{1, 2, 3}, b{-1, 0.5, 4};
    for (double t : {0.0, 0.5, 1.5})
        EXPECT_NEAR((2.0 * a + (-3.0) * b).evaluate(t), 2 * a.evaluate(t) - 3 * b.evaluate(t), 1e-12);
}

TEST(FirstRoot, Linear) {
    const auto r = dt::first_root_in_window(Series<double>{1, -2}, 1.0);
    ASSERT_TRUE(r);
    EXPECT_NEAR(*r, 0.5, 1e-15);
}

TEST(FirstRoot, NoSignChange) { EXPECT_FALSE(dt::first_root_in_window(Series<double>{1, 0, 1}, 1.0)); }

TEST(FirstRoot, SmallestRootOfFactoredCubic) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> roots{u(rng), u(rng), 1.5 + u(rng)};
        if (std::abs(roots[0] - roots[1]) < 0.05) continue;  // double roots have no sign change
        const auto c = oracle::from_roots(roots);
        const auto r = dt::first_root_in_window(Series<double>(c), 1.0);
        ASSERT_TRUE(r);
        EXPECT_NEAR(*r, std::min(roots[0], roots[1]), 1e-10);
        double mx = 0;
        for (double x : c) mx = std::max(mx, std::abs(x));
        EXPECT_LE(std::abs(oracle::power_sum(c, *r)), 1e-12 * mx);
    }
}
