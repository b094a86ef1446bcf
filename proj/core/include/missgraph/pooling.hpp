#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "missgraph/dataset.hpp"
#include "missgraph/ggm.hpp"

namespace missgraph {

inline constexpr double kDefaultAlpha = 0.01;

struct PooledEdge {
    std::size_t i = 0;  // i < j, indices into PooledEdgeTable::variables
    std::size_t j = 0;
    double pooled_rho = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    std::vector<double> member_rho;
    std::size_t support_count = 0;  // members whose sparse estimate has the edge
};

// Pooled partial correlation for every unordered pair of the augmented
// variable set, stored in row-major upper-triangle order.
struct PooledEdgeTable {
    std::vector<VariableMeta> variables;
    std::vector<PooledEdge> edges;
    std::size_t n = 0;
    std::size_t n_members = 0;

    std::size_t p() const { return variables.size(); }
    std::optional<std::size_t> find(std::string_view name) const;
    const PooledEdge& edge(std::size_t a, std::size_t b) const;
    PooledEdge& edge(std::size_t a, std::size_t b);
};

// tanh of the mean Fisher z of the member correlations.
double fisher_pool(std::span<const double> rhos);

// Pools partial_corr entrywise across members. Throws ContractError if fits
// disagree in size or n, if `variables` does not match, or if any member
// correlation has |rho| >= 1.
PooledEdgeTable pool_partial_correlations(std::span<const PrecisionFit> fits, std::vector<VariableMeta> variables);

// Fisher significance: z = atanh(rho) * sqrt(n - (p_vars - 2) - 3), two-sided
// normal p-value. Requires n > p_vars + 3.
double fisher_z_statistic(double rho, std::size_t n, std::size_t p_vars);
void edge_p_values(PooledEdgeTable& table, std::size_t n, std::size_t p_vars);

enum class ArcSign { Positive, Negative };
std::string_view to_string(ArcSign s);

struct MissingnessArc {
    std::string observation_var;
    std::string completeness_var;
    double pooled_rho = 0.0;
    double p_value = 1.0;
    ArcSign sign = ArcSign::Positive;
    // Pooled partial correlation of (observation_var, parent of
    // completeness_var). Empty for a self-arc, whose counterpart would be the
    // variable with itself.
    std::optional<double> counterpart_rho;
    std::optional<double> counterpart_p;

    bool is_self() const { return !counterpart_rho.has_value(); }
    bool operator==(const MissingnessArc&) const = default;
};

// Every observation-completeness pair with p < alpha, sorted by p ascending
// (ties by variable names).
std::vector<MissingnessArc> extract_missingness_arcs(const PooledEdgeTable& table, double alpha = kDefaultAlpha);

struct MnarFinding {
    std::string variable;
    std::string completeness_var;
    double self_arc_rho = 0.0;
    double self_arc_p = 1.0;
    // Variables z with both (variable, z) and (completeness_var, z) significant.
    std::vector<std::string> witnesses;

    bool operator==(const MnarFinding&) const = default;
};

// One finding per significant self-arc (a, c_a).
std::vector<MnarFinding> detect_mnar(std::span<const MissingnessArc> arcs, const PooledEdgeTable& table,
                                     double alpha = kDefaultAlpha);

}  // namespace missgraph
