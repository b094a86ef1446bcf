#include "missgraph/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "missgraph/error.hpp"

namespace missgraph {

namespace {

std::size_t pair_index(std::size_t p, std::size_t i, std::size_t j) {
    // rows 0..i-1 contribute (p-1) + (p-2) + ... + (p-i) entries
    return i * p - i * (i + 1) / 2 + (j - i - 1);
}

}  // namespace

std::optional<std::size_t> PooledEdgeTable::find(std::string_view name) const {
    for (std::size_t k = 0; k < variables.size(); ++k)
        if (variables[k].name == name) return k;
    return std::nullopt;
}

const PooledEdge& PooledEdgeTable::edge(std::size_t a, std::size_t b) const {
    if (a == b || a >= p() || b >= p()) throw ContractError("invalid variable pair");
    if (a > b) std::swap(a, b);
    return edges[pair_index(p(), a, b)];
}

PooledEdge& PooledEdgeTable::edge(std::size_t a, std::size_t b) {
    return const_cast<PooledEdge&>(std::as_const(*this).edge(a, b));
}

double fisher_pool(std::span<const double> rhos) {
    if (rhos.empty()) throw ContractError("cannot pool an empty set of correlations");
    double sum = 0.0;
    for (double r : rhos) {
        if (!(std::abs(r) < 1.0)) throw ContractError("correlation " + std::to_string(r) + " is outside (-1, 1)");
        sum += std::atanh(r);
    }
    if (std::all_of(rhos.begin(), rhos.end(), [&](double r) { return r == rhos.front(); })) return rhos.front();
    return std::tanh(sum / static_cast<double>(rhos.size()));
}

PooledEdgeTable pool_partial_correlations(std::span<const PrecisionFit> fits, std::vector<VariableMeta> variables) {
    if (fits.empty()) throw ContractError("no fits to pool");
    const Eigen::Index p = fits.front().p();
    const Eigen::Index n = fits.front().n;
    for (const auto& f : fits) {
        if (f.p() != p || f.partial_corr.rows() != p || f.partial_corr.cols() != p)
            throw ContractError("fits do not share a variable set");
        if (f.n != n) throw ContractError("fits do not share a sample size");
    }
    if (static_cast<Eigen::Index>(variables.size()) != p)
        throw ContractError("variable list has " + std::to_string(variables.size()) + " entries, fits have " +
                            std::to_string(p));

    PooledEdgeTable table;
    table.variables = std::move(variables);
    table.n = static_cast<std::size_t>(n);
    table.n_members = fits.size();
    const auto up = static_cast<std::size_t>(p);
    table.edges.reserve(up * (up - 1) / 2);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j) {
            PooledEdge e;
            e.i = static_cast<std::size_t>(i);
            e.j = static_cast<std::size_t>(j);
            e.member_rho.reserve(fits.size());
            for (const auto& f : fits) {
                e.member_rho.push_back(f.partial_corr(i, j));
                if (f.in_support(i, j)) ++e.support_count;
            }
            e.pooled_rho = fisher_pool(e.member_rho);
            table.edges.push_back(std::move(e));
        }
    return table;
}

double fisher_z_statistic(double rho, std::size_t n, std::size_t p_vars) {
    if (n <= p_vars + 3)
        throw ContractError("Fisher significance needs n > p + 3 (n = " + std::to_string(n) +
                            ", p = " + std::to_string(p_vars) + ")");
    const double dof = static_cast<double>(n) - (static_cast<double>(p_vars) - 2.0) - 3.0;
    return std::atanh(rho) * std::sqrt(dof);
}

void edge_p_values(PooledEdgeTable& table, std::size_t n, std::size_t p_vars) {
    for (auto& e : table.edges) {
        e.z = fisher_z_statistic(e.pooled_rho, n, p_vars);
        e.p_value = two_sided_p(e.z);
    }
}

std::string_view to_string(ArcSign s) {
    return s == ArcSign::Positive ? "positive" : "negative";
}

std::vector<MissingnessArc> extract_missingness_arcs(const PooledEdgeTable& table, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ContractError("alpha must lie in (0, 1)");
    std::vector<MissingnessArc> arcs;
    for (const auto& e : table.edges) {
        const auto& vi = table.variables[e.i];
        const auto& vj = table.variables[e.j];
        if ((vi.kind == VariableKind::Completeness) == (vj.kind == VariableKind::Completeness)) continue;
        if (!(e.p_value < alpha)) continue;

        const std::size_t obs = vi.kind == VariableKind::Observation ? e.i : e.j;
        const std::size_t comp = obs == e.i ? e.j : e.i;
        MissingnessArc arc;
        arc.observation_var = table.variables[obs].name;
        arc.completeness_var = table.variables[comp].name;
        arc.pooled_rho = e.pooled_rho;
        arc.p_value = e.p_value;
        arc.sign = e.pooled_rho >= 0.0 ? ArcSign::Positive : ArcSign::Negative;
        const auto parent = table.find(table.variables[comp].parent);
        if (!parent) throw ContractError("completeness variable '" + arc.completeness_var + "' has no parent in the table");
        if (*parent != obs) {
            const auto& cp = table.edge(obs, *parent);
            arc.counterpart_rho = cp.pooled_rho;
            arc.counterpart_p = cp.p_value;
        }
        arcs.push_back(std::move(arc));
    }
    std::sort(arcs.begin(), arcs.end(), [](const MissingnessArc& a, const MissingnessArc& b) {
        return std::tie(a.p_value, a.observation_var, a.completeness_var) <
               std::tie(b.p_value, b.observation_var, b.completeness_var);
    });
    return arcs;
}

std::vector<MnarFinding> detect_mnar(std::span<const MissingnessArc> arcs, const PooledEdgeTable& table,
                                     double alpha) {
    std::vector<MnarFinding> out;
    for (const auto& arc : arcs) {
        if (!arc.is_self() || !(arc.p_value < alpha)) continue;
        const auto a = table.find(arc.observation_var);
        const auto c = table.find(arc.completeness_var);
        if (!a || !c) throw ContractError("arc references variables missing from the table");

        MnarFinding f;
        f.variable = arc.observation_var;
        f.completeness_var = arc.completeness_var;
        f.self_arc_rho = arc.pooled_rho;
        f.self_arc_p = arc.p_value;
        for (std::size_t z = 0; z < table.p(); ++z) {
            if (z == *a || z == *c) continue;
            if (table.edge(*a, z).p_value < alpha && table.edge(*c, z).p_value < alpha)
                f.witnesses.push_back(table.variables[z].name);
        }
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace missgraph
