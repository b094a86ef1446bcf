#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace missgraph {

struct TransformedMatrix {
    Eigen::MatrixXd values;
    // Mid-ranks (1-based, ties averaged) of the input, kept for audit.
    Eigen::MatrixXd ranks;
    std::vector<std::string> names;

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index p() const { return values.cols(); }
};

// Winsorization level 1 / (4 n^{1/4} sqrt(pi log n)).
double npn_truncation(Eigen::Index n);

// Mid-ranks of x, 1-based.
Eigen::VectorXd mid_ranks(const Eigen::Ref<const Eigen::VectorXd>& x);

// Rank-based Gaussianization per column: mid-rank / (n + 1), Winsorized into
// [delta_n, 1 - delta_n], mapped through the standard normal quantile, then
// centered and scaled to unit sample standard deviation.
// Requires n >= 8. Throws DegenerateColumnError for a constant column; names
// are used in error messages and default to "column <j>".
TransformedMatrix nonparanormal_transform(const Eigen::MatrixXd& m, std::span<const std::string> names = {});

}  // namespace missgraph
