#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "missgraph/dataset.hpp"
#include "missgraph/ggm.hpp"
#include "missgraph/pooling.hpp"

namespace missgraph {

struct MemberSummary {
    std::uint64_t seed = 0;
    double lambda = 0.0;
    int sweeps = 0;
    double duality_gap = 0.0;
    std::size_t support_edges = 0;

    bool operator==(const MemberSummary&) const = default;
};

// Settings that determine the analysis output.
struct RunSettings {
    double alpha = kDefaultAlpha;
    std::size_t n_imputations = 25;
    std::uint64_t seed = 0;
    LambdaMethod lambda_method = LambdaMethod::Ric;
    double lambda_value = 0.0;
    int n_rotations = 20;

    bool operator==(const RunSettings&) const = default;
};

// Wall-clock information; the only part of a report allowed to differ
// between two runs with the same settings.
struct RunTiming {
    std::string started_at;  // ISO-8601 UTC
    double elapsed_seconds = 0.0;
    std::map<std::string, double> stage_seconds;

    bool operator==(const RunTiming&) const = default;
};

struct AnalysisReport {
    std::string tool_version;
    RunSettings settings;
    std::size_t n_rows = 0;
    std::vector<MissingProfileRow> missing_profile;
    std::vector<std::string> excluded_constant;
    std::vector<MemberSummary> members;
    PooledEdgeTable edges;
    std::vector<MissingnessArc> arcs;
    std::vector<MnarFinding> mnar_findings;
    std::vector<std::string> warnings;
    RunTiming timing;

    const std::vector<VariableMeta>& variables() const { return edges.variables; }
};

std::string_view to_string(LambdaMethod m);
std::optional<LambdaMethod> parse_lambda_method(std::string_view text);

nlohmann::json to_json(const AnalysisReport& r);
// Throws ParseError on a malformed document.
AnalysisReport report_from_json(const nlohmann::json& j);

// Report JSON with two-space indentation and a trailing newline.
std::string dump_report(const AnalysisReport& r);
AnalysisReport load_report(const std::filesystem::path& path);

enum class GraphFormat { Dot, Json, Csv };
// Throws UsageError for an unknown name.
GraphFormat parse_graph_format(std::string_view name);
std::string_view file_extension(GraphFormat f);

// dot: observation nodes in the left column, completeness nodes in the right,
//      one edge per arc coloured green (positive) or red (negative) and
//      labelled "ρ=<rho>, p=<p>".
// csv: obs_var,comp_var,rho,p,counterpart_rho,counterpart_p,sign
// json: nodes and arcs.
void export_graph(const AnalysisReport& r, GraphFormat format, std::ostream& out);

}  // namespace missgraph
