#include "missgraph/ggm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "missgraph/error.hpp"
#include "missgraph/rng.hpp"

namespace missgraph {

namespace {

void require_square_symmetric(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) throw ContractError(std::string(what) + " must be a non-empty square matrix");
    if (!m.allFinite()) throw ContractError(std::string(what) + " has non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw ContractError(std::string(what) + " is not symmetric");
}

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

double max_abs_offdiag(const Eigen::MatrixXd& m) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (i != j) best = std::max(best, std::abs(m(i, j)));
    return best;
}

// Precision matrix from the per-column regression coefficients.
Eigen::MatrixXd assemble_theta(const Eigen::MatrixXd& w, const Eigen::MatrixXd& beta) {
    const Eigen::Index p = w.rows();
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double tjj = 1.0 / (w(j, j) - w.col(j).dot(beta.col(j)));
        theta(j, j) = tjj;
        for (Eigen::Index i = 0; i < p; ++i)
            if (i != j) theta(i, j) = -beta(i, j) * tjj;
    }
    // Average the two estimates of each off-diagonal entry. Zeros stay zeros
    // only when both sides agree.
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = j + 1; i < p; ++i) {
            const double v = 0.5 * (theta(i, j) + theta(j, i));
            theta(i, j) = theta(j, i) = v;
        }
    return theta;
}

}  // namespace

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& x, std::span<const std::string> names) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (n < 2) throw ContractError("correlation needs at least 2 rows");
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::VectorXd norms = centered.colwise().norm();
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!(norms(j) > 0.0) || x.col(j).maxCoeff() == x.col(j).minCoeff())
            throw DegenerateColumnError(names.empty() ? "column " + std::to_string(j)
                                                      : names[static_cast<std::size_t>(j)]);
        centered.col(j) /= norms(j);
    }
    Eigen::MatrixXd r = centered.transpose() * centered;
    for (Eigen::Index j = 0; j < p; ++j) {
        r(j, j) = 1.0;
        for (Eigen::Index i = j + 1; i < p; ++i) {
            const double v = std::clamp(0.5 * (r(i, j) + r(j, i)), -1.0, 1.0);
            r(i, j) = r(j, i) = v;
        }
    }
    return r;
}

Eigen::MatrixXd correlation_matrix(const TransformedMatrix& t) {
    return correlation_matrix(t.values, t.names);
}

GlassoResult glasso(const Eigen::MatrixXd& sigma, double lambda, const GlassoOptions& options) {
    require_square_symmetric(sigma, "sigma_hat");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ContractError("lambda must be a finite non-negative number");
    const Eigen::Index p = sigma.rows();
    if ((sigma.diagonal().array() <= 0.0).any()) throw ContractError("sigma_hat must have a positive diagonal");

    GlassoResult res;
    res.lambda = lambda;

    if (lambda == 0.0) {
        Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success) throw ContractError("lambda = 0 requires an invertible sigma_hat");
        res.theta = llt.solve(Eigen::MatrixXd::Identity(p, p));
        res.theta = 0.5 * (res.theta + res.theta.transpose()).eval();
        res.w = sigma;
        res.duality_gap = glasso_duality_gap(sigma, res.theta, lambda);
        return res;
    }

    // Feasible positive-definite start: shrink S toward its diagonal just far
    // enough that every off-diagonal entry moves by at most lambda.
    const double smax = max_abs_offdiag(sigma);
    const double t0 = smax > 0.0 ? std::min(1.0, lambda / smax) : 1.0;
    Eigen::MatrixXd w = (1.0 - t0) * sigma;
    w.diagonal() = sigma.diagonal();
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(p, p);

    if (p == 1) {
        res.theta = Eigen::MatrixXd::Constant(1, 1, 1.0 / sigma(0, 0));
        res.w = sigma;
        return res;
    }

    Eigen::VectorXd wb(p);
    double tol = options.tolerance;
    double last_change = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            auto b = beta.col(j);
            // wb = W_{-j,-j} b, with b(j) == 0
            wb.noalias() = w * b;
            for (int it = 0; it < options.max_inner_iterations; ++it) {
                double delta = 0.0;
                for (Eigen::Index k = 0; k < p; ++k) {
                    if (k == j) continue;
                    const double old = b(k);
                    const double r = sigma(k, j) - (wb(k) - w(k, k) * old);
                    const double nb = soft_threshold(r, lambda) / w(k, k);
                    if (nb != old) {
                        const double d = nb - old;
                        b(k) = nb;
                        for (Eigen::Index l = 0; l < p; ++l) wb(l) += w(l, k) * d;
                        delta = std::max(delta, std::abs(d));
                    }
                }
                if (delta < options.inner_tolerance) break;
            }
            for (Eigen::Index k = 0; k < p; ++k) {
                if (k == j) continue;
                max_change = std::max(max_change, std::abs(wb(k) - w(k, j)));
                w(k, j) = w(j, k) = wb(k);
            }
        }
        last_change = max_change;
        res.sweeps = sweep;
        if (max_change < tol) {
            res.theta = assemble_theta(w, beta);
            res.duality_gap = glasso_duality_gap(sigma, res.theta, lambda);
            if (res.duality_gap <= options.max_duality_gap) {
                res.w = w;
                return res;
            }
            tol = std::max(tol * 0.1, 1e-15);
        }
    }
    throw ConvergenceError("glasso did not converge in " + std::to_string(options.max_sweeps) +
                               " sweeps; last covariance change " + std::to_string(last_change),
                           last_change);
}

double glasso_duality_gap(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& theta, double lambda) {
    const Eigen::Index p = sigma.rows();
    Eigen::LLT<Eigen::MatrixXd> lt(theta);
    if (lt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double logdet_theta = 2.0 * lt.matrixLLT().diagonal().array().log().sum();
    double l1 = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < p; ++i)
            if (i != j) l1 += std::abs(theta(i, j));
    const double primal = (sigma.cwiseProduct(theta)).sum() - logdet_theta + lambda * l1;

    Eigen::MatrixXd w = lt.solve(Eigen::MatrixXd::Identity(p, p));
    for (Eigen::Index j = 0; j < p; ++j) {
        w(j, j) = sigma(j, j);
        for (Eigen::Index i = 0; i < p; ++i)
            if (i != j) w(i, j) = std::clamp(w(i, j), sigma(i, j) - lambda, sigma(i, j) + lambda);
    }
    w = 0.5 * (w + w.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> lw(w);
    if (lw.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double dual = 2.0 * lw.matrixLLT().diagonal().array().log().sum() + static_cast<double>(p);
    return primal - dual;
}

double glasso_kkt_violation(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& theta, double lambda) {
    const Eigen::Index p = sigma.rows();
    Eigen::LLT<Eigen::MatrixXd> lt(theta);
    if (lt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd w = lt.solve(Eigen::MatrixXd::Identity(p, p));
    double worst = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        worst = std::max(worst, std::abs(w(j, j) - sigma(j, j)));
        for (Eigen::Index i = 0; i < p; ++i) {
            if (i == j) continue;
            const double g = w(i, j) - sigma(i, j);
            if (theta(i, j) != 0.0) {
                const double s = theta(i, j) > 0.0 ? 1.0 : -1.0;
                worst = std::max(worst, std::abs(g - lambda * s));
            } else {
                worst = std::max(worst, std::abs(g) - lambda);
            }
        }
    }
    return worst;
}

double select_lambda_ric(const TransformedMatrix& t, int n_rotations, std::uint64_t seed) {
    if (n_rotations < 1) throw ContractError("n_rotations must be at least 1");
    const Eigen::Index n = t.n();
    const Eigen::Index p = t.p();
    if (p < 2) return 0.0;
    // Validates columns once; permutations preserve each column's moments.
    (void)correlation_matrix(t);

    Eigen::MatrixXd z = t.values.rowwise() - t.values.colwise().mean();
    for (Eigen::Index j = 0; j < p; ++j) z.col(j) /= z.col(j).norm();

    rng::Engine eng(seed);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    Eigen::MatrixXd permuted(n, p);
    double total = 0.0;
    for (int r = 0; r < n_rotations; ++r) {
        for (Eigen::Index j = 0; j < p; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
            rng::shuffle(std::span<Eigen::Index>(perm), eng);
            for (Eigen::Index i = 0; i < n; ++i) permuted(i, j) = z(perm[static_cast<std::size_t>(i)], j);
        }
        const Eigen::MatrixXd c = permuted.transpose() * permuted;
        total += std::min(1.0, max_abs_offdiag(c));
    }
    return total / n_rotations;
}

double two_sided_p(double z) {
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

Desparsified desparsify(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& sigma, Eigen::Index n) {
    require_square_symmetric(theta, "theta_hat");
    require_square_symmetric(sigma, "sigma_hat");
    if (theta.rows() != sigma.rows()) throw ContractError("theta_hat and sigma_hat differ in size");
    if (n < 1) throw ContractError("sample size must be positive");
    Eigen::LLT<Eigen::MatrixXd> llt(theta);
    if (llt.info() != Eigen::Success) throw ContractError("theta_hat is not positive definite");

    const Eigen::Index p = theta.rows();
    Desparsified d;
    d.t_hat = 2.0 * theta - theta * sigma * theta;
    d.t_hat = 0.5 * (d.t_hat + d.t_hat.transpose()).eval();
    d.edge_sd.resize(p, p);
    d.z = Eigen::MatrixXd::Zero(p, p);
    d.p_values = Eigen::MatrixXd::Ones(p, p);
    const double root_n = std::sqrt(static_cast<double>(n));
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < p; ++i) {
            d.edge_sd(i, j) = std::sqrt(theta(i, i) * theta(j, j) + theta(i, j) * theta(i, j));
            if (i == j) continue;
            d.z(i, j) = root_n * d.t_hat(i, j) / d.edge_sd(i, j);
            d.p_values(i, j) = two_sided_p(d.z(i, j));
        }
    return d;
}

Eigen::MatrixXd partial_correlations(const Eigen::MatrixXd& t, std::vector<std::string>* warnings) {
    if (t.rows() != t.cols()) throw ContractError("precision matrix must be square");
    const Eigen::Index p = t.rows();
    for (Eigen::Index j = 0; j < p; ++j)
        if (!(t(j, j) > 0.0))
            throw ContractError("precision diagonal entry " + std::to_string(j) + " is not positive");

    Eigen::MatrixXd rho(p, p);
    double overshoot = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        rho(j, j) = 1.0;
        for (Eigen::Index i = j + 1; i < p; ++i) {
            const double v = -0.5 * (t(i, j) + t(j, i)) / std::sqrt(t(i, i) * t(j, j));
            const double c = std::clamp(v, -1.0, 1.0);
            overshoot = std::max(overshoot, std::abs(v - c));
            rho(i, j) = rho(j, i) = c;
        }
    }
    if (overshoot > 1e-6 && warnings)
        warnings->push_back("partial correlations clamped to [-1, 1]; largest excess " + std::to_string(overshoot));
    return rho;
}

PrecisionFit fit_precision(const TransformedMatrix& t, const FitOptions& options, std::vector<std::string>* warnings) {
    PrecisionFit fit;
    fit.n = t.n();
    fit.sigma_hat = correlation_matrix(t);
    switch (options.lambda_method) {
        case LambdaMethod::Ric:
            fit.lambda = select_lambda_ric(t, options.n_rotations, options.seed);
            break;
        case LambdaMethod::Fixed:
            fit.lambda = options.lambda;
            break;
    }
    GlassoResult g = glasso(fit.sigma_hat, fit.lambda, options.glasso);
    fit.theta_hat = std::move(g.theta);
    fit.sweeps = g.sweeps;
    fit.duality_gap = g.duality_gap;

    Desparsified d = desparsify(fit.theta_hat, fit.sigma_hat, fit.n);
    fit.t_hat = std::move(d.t_hat);
    fit.edge_sd = std::move(d.edge_sd);
    fit.z = std::move(d.z);
    fit.p_values = std::move(d.p_values);
    fit.partial_corr = partial_correlations(fit.t_hat, warnings);
    return fit;
}

}  // namespace missgraph
