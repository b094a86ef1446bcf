#pragma once

#include <string>
#include <vector>

#include "missgraph/dataset.hpp"

namespace missgraph {

struct IndicatorColumn {
    VariableMeta meta;      // kind == Completeness, parent set
    std::size_t parent = 0; // column index of the parent in the base dataset
    std::vector<double> values;  // 1 = observed, 0 = missing
};

// Observation variables followed by their completeness indicators.
struct AugmentedDataset {
    Dataset base;
    std::vector<IndicatorColumn> indicators;
    // Base variables that received no indicator because their mask is constant
    // (fully observed or fully missing).
    std::vector<std::string> excluded_constant;

    std::size_t n_rows() const { return base.n_rows(); }
    std::size_t width() const { return base.n_columns() + indicators.size(); }
    // Metadata for all augmented columns in order: base columns, then indicators.
    std::vector<VariableMeta> variables() const;
};

// Name given to the completeness indicator of `observation`.
std::string completeness_name(std::string_view observation);

// One indicator per base column with mixed observed/missing status.
// Throws SchemaError if an indicator name collides with an existing column.
AugmentedDataset make_completeness_indicators(const Dataset& d);

// Base dataset and indicator columns as a single Dataset, indicators fully observed.
Dataset to_dataset(const AugmentedDataset& a);

}  // namespace missgraph
