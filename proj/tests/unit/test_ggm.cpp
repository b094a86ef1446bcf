#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "missgraph/error.hpp"
#include "missgraph/ggm.hpp"
#include "missgraph/rng.hpp"
#include "missgraph/simulator.hpp"

using namespace missgraph;

namespace {

TransformedMatrix as_transformed(const Eigen::MatrixXd& x) {
    TransformedMatrix t;
    t.values = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) t.names.push_back("v" + std::to_string(j));
    return t;
}

Eigen::MatrixXd ar1_precision(Eigen::Index p, double rho) {
    Eigen::MatrixXd c(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) c(i, j) = std::pow(rho, std::abs(static_cast<double>(i - j)));
    return c.inverse();
}

std::size_t support_size(const Eigen::MatrixXd& theta) {
    std::size_t s = 0;
    for (Eigen::Index i = 0; i < theta.rows(); ++i)
        for (Eigen::Index j = i + 1; j < theta.cols(); ++j) s += theta(i, j) != 0.0;
    return s;
}

}  // namespace

TEST_CASE("correlation matrix examples") {
    Eigen::MatrixXd x(5, 3);
    x.col(0) << 1, 2, 4, 3, 9;
    x.col(1) = x.col(0);
    x.col(2) = -x.col(0);
    const Eigen::MatrixXd r = correlation_matrix(x);
    CHECK(r(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r(0, 2) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(r.diagonal() == Eigen::VectorXd::Ones(3));
    CHECK(r == r.transpose());

    const Eigen::MatrixXd b = oracle::bivariate_normal(100'000, 0.6, 17);
    CHECK(std::abs(correlation_matrix(b)(0, 1) - 0.6) <= 0.01);

    Eigen::MatrixXd flat = x;
    flat.col(1).setConstant(2.0);
    const std::vector<std::string> names{"a", "b", "c"};
    try {
        correlation_matrix(flat, names);
        FAIL("expected DegenerateColumnError");
    } catch (const DegenerateColumnError& e) {
        CHECK(e.column() == "b");
    }
}

TEST_CASE("glasso on the identity") {
    for (double lambda : {0.0, 0.1, 0.5, 2.0}) {
        const auto r = glasso(Eigen::MatrixXd::Identity(4, 4), lambda);
        CHECK((r.theta - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("glasso at lambda 0 is the inverse") {
    const Eigen::MatrixXd s = oracle::random_correlation(6, 3);
    CHECK((glasso_fit(s, 0.0) - s.inverse()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("glasso matches the 2x2 soft-threshold closed form") {
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 0.5, 0.5, 1.0;
    const auto r = glasso(s, 0.2);
    CHECK(std::abs(r.w(0, 1) - 0.3) < 1e-8);
    CHECK(std::abs(r.theta(0, 0) - 1.0 / 0.91) < 1e-8);
    CHECK(std::abs(r.theta(0, 1) + 0.3 / 0.91) < 1e-8);
    CHECK(std::abs(r.theta(0, 0) - 1.098901) < 1e-6);
    CHECK(std::abs(r.theta(0, 1) + 0.329670) < 1e-6);

    for (double sv : {-0.8, -0.3, 0.05, 0.45, 0.9})
        for (double lambda : {0.0, 0.04, 0.2, 0.5}) {
            s << 1.0, sv, sv, 1.0;
            CHECK((glasso_fit(s, lambda) - Eigen::MatrixXd(oracle::glasso_2x2(sv, lambda))).cwiseAbs().maxCoeff() <
                  1e-8);
        }
}

TEST_CASE("glasso solutions satisfy the KKT certificate") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Eigen::MatrixXd s = oracle::random_correlation(8, seed);
        for (double lambda : {0.02, 0.1, 0.3}) {
            const auto r = glasso(s, lambda);
            CHECK(glasso_kkt_violation(s, r.theta, lambda) <= 1e-6);
            CHECK(r.duality_gap <= 1e-6);
            CHECK(r.theta == r.theta.transpose());
            CHECK(r.theta.llt().info() == Eigen::Success);
        }
    }
}

TEST_CASE("glasso errors") {
    Eigen::MatrixXd s = oracle::random_correlation(5, 1);
    Eigen::MatrixXd asym = s;
    asym(0, 1) += 0.1;
    CHECK_THROWS_AS(glasso(asym, 0.1), ContractError);
    CHECK_THROWS_AS(glasso(s, -0.1), ContractError);
    CHECK_THROWS_AS(glasso(Eigen::MatrixXd(2, 3), 0.1), ContractError);

    GlassoOptions tight;
    tight.max_sweeps = 1;
    tight.tolerance = 1e-15;
    try {
        glasso(s, 0.05, tight);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.code() == ErrorCode::Convergence);
        CHECK(e.residual() > 0.0);
    }
}

TEST_CASE("support shrinks monotonically in lambda") {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        const Eigen::MatrixXd s = oracle::random_correlation(8, seed);
        std::size_t prev = support_size(glasso_fit(s, 0.0));
        for (double lambda = 0.02; lambda < 0.8; lambda += 0.04) {
            const std::size_t cur = support_size(glasso_fit(s, lambda));
            CHECK(cur <= prev);
            prev = cur;
        }
        CHECK(prev == 0);
    }
}

TEST_CASE("RIC lambda: reproducible and reconstructible by hand") {
    const auto t = as_transformed(oracle::bivariate_normal(50, 0.3, 4));
    const double a = select_lambda_ric(t, 1, 99);
    CHECK(a == select_lambda_ric(t, 1, 99));

    rng::Engine eng(99);
    Eigen::MatrixXd x = t.values;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        std::vector<double> col(x.col(j).data(), x.col(j).data() + x.rows());
        rng::shuffle(std::span<double>(col), eng);
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = col[static_cast<std::size_t>(i)];
    }
    CHECK(a == std::abs(correlation_matrix(x)(0, 1)));
    CHECK(std::abs(a - std::abs(oracle::pearson(x.col(0), x.col(1)))) < 1e-14);
}

TEST_CASE("RIC lambda shrinks with n") {
    double small = 0, large = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        small += select_lambda_ric(as_transformed(oracle::bivariate_normal(100, 0.0, s)), 5, s);
        large += select_lambda_ric(as_transformed(oracle::bivariate_normal(10'000, 0.0, s)), 5, s);
    }
    CHECK(large < small);
}

TEST_CASE("RIC lambda ignores the dependence it permutes away") {
    std::vector<double> dep, ind;
    for (std::uint64_t s = 0; s < 200; ++s) {
        Eigen::MatrixXd d = oracle::bivariate_normal(200, 0.0, s);
        d.col(1) = d.col(0);
        dep.push_back(select_lambda_ric(as_transformed(d), 1, 1000 + s));
        ind.push_back(select_lambda_ric(as_transformed(oracle::bivariate_normal(200, 0.0, 5000 + s)), 1, 9000 + s));
    }
    CHECK(oracle::ks_two_sample_p(dep, ind) > 0.01);
}

TEST_CASE("de-sparsification identities") {
    const Eigen::MatrixXd s = oracle::random_correlation(5, 8);
    const Eigen::MatrixXd theta = s.inverse();
    const auto d = desparsify(theta, s, 100);
    CHECK((d.t_hat - theta).cwiseAbs().maxCoeff() < 1e-10);

    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
    const auto e = desparsify(id, id, 400);
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) {
            if (i == j) {
                CHECK(e.z(i, j) == 0.0);
                CHECK(e.p_values(i, j) == 1.0);
                continue;
            }
            CHECK(e.edge_sd(i, j) == 1.0);
            CHECK(e.z(i, j) == 20.0 * e.t_hat(i, j));
        }

    Eigen::MatrixXd bad = id;
    bad(0, 0) = -1.0;
    CHECK_THROWS_AS(desparsify(bad, id, 10), ContractError);
}

TEST_CASE("two-sided normal p-values") {
    CHECK(two_sided_p(0.0) == 1.0);
    CHECK(two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(two_sided_p(-2.5758293035489) == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(two_sided_p(3.0) == two_sided_p(-3.0));
}

TEST_CASE("partial correlation examples") {
    Eigen::MatrixXd t(2, 2);
    t << 2.0, -1.0, -1.0, 2.0;
    CHECK(partial_correlations(t)(0, 1) == 0.5);

    const Eigen::MatrixXd d = Eigen::VectorXd::LinSpaced(4, 1, 4).asDiagonal();
    const Eigen::MatrixXd r = partial_correlations(d);
    CHECK(r == Eigen::MatrixXd::Identity(4, 4));

    Eigen::MatrixXd bad = t;
    bad(1, 1) = 0.0;
    CHECK_THROWS_AS(partial_correlations(bad), ContractError);

    std::vector<std::string> warnings;
    Eigen::MatrixXd over(2, 2);
    over << 1.0, -1.5, -1.5, 1.0;
    const Eigen::MatrixXd c = partial_correlations(over, &warnings);
    CHECK(c(0, 1) == 1.0);
    CHECK(warnings.size() == 1);
}

TEST_CASE("AR(1) and equicorrelated partial correlations") {
    // Population values: for AR(1) with rho = 0.5 the adjacent partial
    // correlation is rho / sqrt(1 + rho^2) = 1/sqrt(5); the recursive formula
    // with rho_xz = rho_yz = 0.5, rho_xy = 0.5 (equicorrelated) gives 1/3.
    const Eigen::MatrixXd ar = ar1_precision(3, 0.5);
    const Eigen::MatrixXd pr = partial_correlations(ar);
    CHECK(std::abs(pr(0, 2)) < 1e-12);
    CHECK(pr(0, 1) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));
    CHECK(pr(1, 2) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));

    Eigen::MatrixXd eq = Eigen::MatrixXd::Constant(3, 3, 0.5);
    eq.diagonal().setOnes();
    const Eigen::MatrixXd pe = partial_correlations(eq.inverse());
    CHECK(pe(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // Sample check against the residual oracle on simulated AR(1) data.
    const std::size_t n = 20'000;
    const Eigen::MatrixXd x = generate_gaussian(ar, n, 3);
    const Eigen::MatrixXd s = correlation_matrix(x);
    const Eigen::MatrixXd ps = partial_correlations(s.inverse());
    const double tol = 2.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(ps(0, 2)) <= tol);
    CHECK(std::abs(ps(0, 1) - oracle::residual_partial_corr(x, 0, 1)) <= tol);
    CHECK(std::abs(ps(0, 1) - 1.0 / std::sqrt(5.0)) <= tol);
}

TEST_CASE("partial correlations agree with the residual oracle on 3 and 4 variables") {
    for (Eigen::Index p : {3, 4})
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Eigen::MatrixXd c = oracle::random_correlation(p, 100 + seed, 2);
            const std::size_t n = 5000;
            const Eigen::MatrixXd x = generate_gaussian(c.inverse(), n, seed);
            const Eigen::MatrixXd pr = partial_correlations(correlation_matrix(x).inverse());
            const double tol = 2.0 / std::sqrt(static_cast<double>(n));
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = i + 1; j < p; ++j)
                    CHECK(std::abs(pr(i, j) - oracle::residual_partial_corr(x, i, j)) <= tol);
        }
}

TEST_CASE("fit_precision wires the stages together") {
    const Eigen::MatrixXd x = generate_gaussian(ar1_precision(5, 0.5), 2000, 8);
    const auto t = as_transformed(x);
    FitOptions fixed;
    fixed.lambda_method = LambdaMethod::Fixed;
    fixed.lambda = 0.05;
    const auto f = fit_precision(t, fixed);
    CHECK(f.lambda == 0.05);
    CHECK(f.n == 2000);
    CHECK(f.p() == 5);
    CHECK((f.sigma_hat - correlation_matrix(x)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(glasso_kkt_violation(f.sigma_hat, f.theta_hat, f.lambda) <= 1e-6);
    const auto d = desparsify(f.theta_hat, f.sigma_hat, 2000);
    CHECK(f.t_hat == d.t_hat);
    CHECK(f.partial_corr == partial_correlations(d.t_hat));
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j) CHECK(f.in_support(i, j) == (f.theta_hat(i, j) != 0.0));

    FitOptions ric;
    ric.seed = 5;
    const auto g = fit_precision(t, ric);
    CHECK(g.lambda == select_lambda_ric(t, 20, 5));
    CHECK(g.lambda > 0.0);
}
