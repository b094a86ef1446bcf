#include "missgraph/augmentation.hpp"

#include "missgraph/error.hpp"

namespace missgraph {

std::string completeness_name(std::string_view observation) {
    return "c_" + std::string(observation);
}

std::vector<VariableMeta> AugmentedDataset::variables() const {
    std::vector<VariableMeta> out;
    out.reserve(width());
    for (const auto& c : base.columns()) out.push_back(c.meta);
    for (const auto& ind : indicators) out.push_back(ind.meta);
    return out;
}

AugmentedDataset make_completeness_indicators(const Dataset& d) {
    AugmentedDataset out{d, {}, {}};
    for (std::size_t j = 0; j < d.n_columns(); ++j) {
        const Column& col = d.column(j);
        const std::size_t missing = col.missing_count();
        if (missing == 0 || missing == d.n_rows()) {
            out.excluded_constant.push_back(col.meta.name);
            continue;
        }
        IndicatorColumn ind;
        ind.meta.name = completeness_name(col.meta.name);
        ind.meta.category = col.meta.category;
        ind.meta.kind = VariableKind::Completeness;
        ind.meta.parent = col.meta.name;
        ind.parent = j;
        if (d.find(ind.meta.name))
            throw SchemaError("indicator name '" + ind.meta.name + "' collides with an existing column");
        ind.values.resize(d.n_rows());
        for (std::size_t i = 0; i < d.n_rows(); ++i) ind.values[i] = col.observed[i] ? 1.0 : 0.0;
        out.indicators.push_back(std::move(ind));
    }
    return out;
}

Dataset to_dataset(const AugmentedDataset& a) {
    std::vector<Column> cols(a.base.columns().begin(), a.base.columns().end());
    for (const auto& ind : a.indicators)
        cols.push_back(Column{ind.meta, ind.values, std::vector<bool>(ind.values.size(), true)});
    return Dataset(std::move(cols));
}

}  // namespace missgraph
