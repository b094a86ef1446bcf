#include "missgraph/imputation.hpp"

#include "missgraph/error.hpp"
#include "missgraph/rng.hpp"

namespace missgraph {

Eigen::MatrixXd hot_deck_impute(const AugmentedDataset& a, std::uint64_t seed) {
    const Dataset& base = a.base;
    const auto n = static_cast<Eigen::Index>(base.n_rows());
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(a.width()));
    rng::Engine eng(seed);

    std::vector<double> donors;
    for (std::size_t j = 0; j < base.n_columns(); ++j) {
        const Column& col = base.column(j);
        const auto cj = static_cast<Eigen::Index>(j);
        donors.clear();
        for (std::size_t i = 0; i < base.n_rows(); ++i)
            if (col.observed[i]) donors.push_back(col.values[i]);
        if (donors.empty()) throw UnimputableColumnError(col.meta.name);

        for (std::size_t i = 0; i < base.n_rows(); ++i) {
            out(static_cast<Eigen::Index>(i), cj) =
                col.observed[i] ? col.values[i] : donors[rng::uniform_index(eng, donors.size())];
        }
    }
    for (std::size_t k = 0; k < a.indicators.size(); ++k) {
        const auto cj = static_cast<Eigen::Index>(base.n_columns() + k);
        out.col(cj) = Eigen::Map<const Eigen::VectorXd>(a.indicators[k].values.data(), n);
    }
    return out;
}

ImputationEnsemble make_ensemble(const AugmentedDataset& a, std::size_t k, std::uint64_t master_seed) {
    if (k < 1) throw ContractError("ensemble size must be at least 1");
    ImputationEnsemble ens;
    ens.members.reserve(k);
    ens.seeds.reserve(k);
    for (std::size_t m = 0; m < k; ++m) {
        const std::uint64_t seed = rng::split_seed(master_seed, m);
        ens.seeds.push_back(seed);
        ens.members.push_back(hot_deck_impute(a, seed));
    }
    return ens;
}

}  // namespace missgraph
