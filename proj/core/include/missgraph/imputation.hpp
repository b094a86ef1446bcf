#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "missgraph/augmentation.hpp"

namespace missgraph {

// K complete copies of an augmented dataset. Member columns follow
// AugmentedDataset::variables() order.
struct ImputationEnsemble {
    std::vector<Eigen::MatrixXd> members;
    std::vector<std::uint64_t> seeds;

    std::size_t size() const { return members.size(); }
};

inline constexpr std::size_t kDefaultImputations = 25;

// Simple hot deck: every missing cell receives an independent draw, uniform
// with replacement, from the observed entries of the same column. Columns are
// visited left to right and rows top to bottom with a single engine seeded by
// `seed`. Indicator columns are copied unchanged.
Eigen::MatrixXd hot_deck_impute(const AugmentedDataset& a, std::uint64_t seed);

// Member k (0-based) is hot_deck_impute(a, rng::split_seed(master_seed, k)).
ImputationEnsemble make_ensemble(const AugmentedDataset& a, std::size_t k, std::uint64_t master_seed);

}  // namespace missgraph
