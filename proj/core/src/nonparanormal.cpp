#include "missgraph/nonparanormal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "missgraph/error.hpp"

namespace missgraph {

double npn_truncation(Eigen::Index n) {
    const double nd = static_cast<double>(n);
    return 1.0 / (4.0 * std::pow(nd, 0.25) * std::sqrt(std::numbers::pi * std::log(nd)));
}

Eigen::VectorXd mid_ranks(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const Eigen::Index n = x.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });

    Eigen::VectorXd r(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i + 1;
        while (j < n && x(order[j]) == x(order[i])) ++j;
        // positions i..j-1 share ranks i+1..j
        const double avg = 0.5 * static_cast<double>(i + 1 + j);
        for (Eigen::Index k = i; k < j; ++k) r(order[k]) = avg;
        i = j;
    }
    return r;
}

TransformedMatrix nonparanormal_transform(const Eigen::MatrixXd& m, std::span<const std::string> names) {
    const Eigen::Index n = m.rows();
    const Eigen::Index p = m.cols();
    if (n < 8) throw ContractError("nonparanormal transform needs at least 8 rows, got " + std::to_string(n));
    if (!m.allFinite()) throw ContractError("nonparanormal transform needs a complete, finite matrix");
    if (!names.empty() && static_cast<Eigen::Index>(names.size()) != p)
        throw ContractError("names do not match matrix width");

    TransformedMatrix out;
    out.values.resize(n, p);
    out.ranks.resize(n, p);
    out.names.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j)
        out.names.push_back(names.empty() ? "column " + std::to_string(j) : names[static_cast<std::size_t>(j)]);

    const double delta = npn_truncation(n);
    const boost::math::normal_distribution<double> stdnorm;
    const double denom = static_cast<double>(n) + 1.0;

    for (Eigen::Index j = 0; j < p; ++j) {
        if (m.col(j).maxCoeff() == m.col(j).minCoeff()) throw DegenerateColumnError(out.names[j]);
        out.ranks.col(j) = mid_ranks(m.col(j));
        auto col = out.values.col(j);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = std::clamp(out.ranks(i, j) / denom, delta, 1.0 - delta);
            col(i) = boost::math::quantile(stdnorm, u);
        }
        col.array() -= col.mean();
        const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n - 1));
        if (!(sd > 0.0)) throw DegenerateColumnError(out.names[j]);
        col /= sd;
    }
    return out;
}

}  // namespace missgraph
