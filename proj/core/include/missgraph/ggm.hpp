#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "missgraph/nonparanormal.hpp"

namespace missgraph {

// Pearson correlation of the columns; symmetric, unit diagonal, entries in
// [-1, 1]. Throws DegenerateColumnError for a constant column.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& x, std::span<const std::string> names = {});
Eigen::MatrixXd correlation_matrix(const TransformedMatrix& t);

struct GlassoOptions {
    // Sweep convergence: largest absolute change of the working covariance.
    double tolerance = 1e-7;
    int max_sweeps = 10'000;
    // Required duality gap before a solution is accepted. If the sweep
    // tolerance is met first, the tolerance is tightened and sweeps continue.
    double max_duality_gap = 1e-6;
    double inner_tolerance = 1e-12;
    int max_inner_iterations = 10'000;
};

struct GlassoResult {
    Eigen::MatrixXd theta;  // sparse precision estimate
    Eigen::MatrixXd w;      // working covariance, the dual variable
    double lambda = 0.0;
    int sweeps = 0;
    double duality_gap = 0.0;
};

// Minimizes trace(Theta S) - log det Theta + lambda * sum_{i != j} |Theta_ij|
// by blockwise coordinate descent on the covariance. The diagonal is not
// penalized, so W_ii = S_ii at the optimum. lambda == 0 returns S^{-1}.
GlassoResult glasso(const Eigen::MatrixXd& sigma, double lambda, const GlassoOptions& options = {});

inline Eigen::MatrixXd glasso_fit(const Eigen::MatrixXd& sigma, double lambda) {
    return glasso(sigma, lambda).theta;
}

// Primal objective minus the dual value log det W + p, where W is Theta^{-1}
// projected onto the dual feasible box. Infinite if the projection is not
// positive definite.
double glasso_duality_gap(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& theta, double lambda);

// Largest violation of the stationarity conditions for W = Theta^{-1}:
//   on the support  W_ij - S_ij == lambda * sign(Theta_ij)
//   off the support |W_ij - S_ij| <= lambda
//   diagonal        W_ii == S_ii
double glasso_kkt_violation(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& theta, double lambda);

// Rotation-invariance criterion: the mean, over n_rotations replicates, of the
// largest absolute off-diagonal correlation after each column's rows have been
// permuted independently. Permutations come from one engine seeded by `seed`,
// replicate by replicate, column by column.
double select_lambda_ric(const TransformedMatrix& t, int n_rotations, std::uint64_t seed);

struct Desparsified {
    Eigen::MatrixXd t_hat;    // 2 Theta - Theta S Theta
    Eigen::MatrixXd edge_sd;  // sqrt(Theta_ii Theta_jj + Theta_ij^2)
    Eigen::MatrixXd z;        // sqrt(n) t_ij / sd_ij; 0 on the diagonal
    Eigen::MatrixXd p_values; // two-sided normal; 1 on the diagonal
};

Desparsified desparsify(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& sigma, Eigen::Index n);

// rho_ij = -T_ij / sqrt(T_ii T_jj), unit diagonal, clamped to [-1, 1]. If
// clamping moves an entry by more than 1e-6 a message is appended to
// `warnings` when given.
Eigen::MatrixXd partial_correlations(const Eigen::MatrixXd& t, std::vector<std::string>* warnings = nullptr);

// Two-sided standard normal tail probability P(|Z| >= |z|).
double two_sided_p(double z);

enum class LambdaMethod { Ric, Fixed };

struct FitOptions {
    LambdaMethod lambda_method = LambdaMethod::Ric;
    double lambda = 0.0;  // used when lambda_method == Fixed
    int n_rotations = 20;
    std::uint64_t seed = 0;  // RIC permutation seed
    GlassoOptions glasso;
};

struct PrecisionFit {
    double lambda = 0.0;
    Eigen::Index n = 0;
    Eigen::MatrixXd sigma_hat;
    Eigen::MatrixXd theta_hat;
    Eigen::MatrixXd t_hat;
    Eigen::MatrixXd partial_corr;
    Eigen::MatrixXd edge_sd;
    Eigen::MatrixXd z;
    Eigen::MatrixXd p_values;
    int sweeps = 0;
    double duality_gap = 0.0;

    Eigen::Index p() const { return theta_hat.rows(); }
    // Conditional-dependence support of the sparse estimate.
    bool in_support(Eigen::Index i, Eigen::Index j) const { return theta_hat(i, j) != 0.0; }
};

// correlation -> lambda -> glasso -> de-sparsify -> partial correlations.
PrecisionFit fit_precision(const TransformedMatrix& t, const FitOptions& options,
                           std::vector<std::string>* warnings = nullptr);

}  // namespace missgraph
