#include "missgraph/report.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "missgraph/error.hpp"

namespace missgraph {

using nlohmann::json;

namespace {

std::string shortest(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::string compact(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.4g", v);
    return buf.data();
}

std::string dot_id(std::string_view s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out.push_back('\\');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

json variable_json(const VariableMeta& v) {
    json j{{"name", v.name}, {"category", to_string(v.category)}, {"kind", to_string(v.kind)}};
    if (!v.parent.empty()) j["parent"] = v.parent;
    return j;
}

VariableMeta variable_from_json(const json& j) {
    VariableMeta v;
    v.name = j.at("name").get<std::string>();
    const auto cat = parse_category(j.at("category").get<std::string>());
    const auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!cat || !kind) throw ParseError("variable '" + v.name + "' has an unknown category or kind");
    v.category = *cat;
    v.kind = *kind;
    v.parent = j.value("parent", std::string{});
    return v;
}

json arc_json(const MissingnessArc& a) {
    return json{{"observation_var", a.observation_var},
                {"completeness_var", a.completeness_var},
                {"pooled_rho", a.pooled_rho},
                {"p_value", a.p_value},
                {"sign", to_string(a.sign)},
                {"self_arc", a.is_self()},
                {"counterpart_rho", a.counterpart_rho ? json(*a.counterpart_rho) : json(nullptr)},
                {"counterpart_p", a.counterpart_p ? json(*a.counterpart_p) : json(nullptr)}};
}

MissingnessArc arc_from_json(const json& j) {
    MissingnessArc a;
    a.observation_var = j.at("observation_var").get<std::string>();
    a.completeness_var = j.at("completeness_var").get<std::string>();
    a.pooled_rho = j.at("pooled_rho").get<double>();
    a.p_value = j.at("p_value").get<double>();
    const auto sign = j.at("sign").get<std::string>();
    if (sign != "positive" && sign != "negative") throw ParseError("arc sign must be positive or negative");
    a.sign = sign == "positive" ? ArcSign::Positive : ArcSign::Negative;
    if (!j.at("counterpart_rho").is_null()) a.counterpart_rho = j.at("counterpart_rho").get<double>();
    if (!j.at("counterpart_p").is_null()) a.counterpart_p = j.at("counterpart_p").get<double>();
    return a;
}

}  // namespace

std::string_view to_string(LambdaMethod m) {
    return m == LambdaMethod::Ric ? "ric" : "fixed";
}

std::optional<LambdaMethod> parse_lambda_method(std::string_view text) {
    if (text == "ric") return LambdaMethod::Ric;
    if (text == "fixed") return LambdaMethod::Fixed;
    return std::nullopt;
}

json to_json(const AnalysisReport& r) {
    json j;
    j["tool"] = {{"name", "missgraph"}, {"version", r.tool_version}};
    j["settings"] = {{"alpha", r.settings.alpha},
                     {"n_imputations", r.settings.n_imputations},
                     {"seed", r.settings.seed},
                     {"lambda_method", to_string(r.settings.lambda_method)},
                     {"lambda_value", r.settings.lambda_value},
                     {"n_rotations", r.settings.n_rotations}};
    j["n_rows"] = r.n_rows;

    json profile = json::array();
    for (const auto& row : r.missing_profile)
        profile.push_back({{"name", row.name},
                           {"category", to_string(row.category)},
                           {"missing_proportion", row.missing_proportion}});
    j["missing_profile"] = std::move(profile);
    j["excluded_constant"] = r.excluded_constant;

    json vars = json::array();
    for (const auto& v : r.edges.variables) vars.push_back(variable_json(v));
    j["variables"] = std::move(vars);

    json members = json::array();
    for (const auto& m : r.members)
        members.push_back({{"seed", m.seed},
                           {"lambda", m.lambda},
                           {"sweeps", m.sweeps},
                           {"duality_gap", m.duality_gap},
                           {"support_edges", m.support_edges}});
    j["members"] = std::move(members);

    json edges = json::array();
    for (const auto& e : r.edges.edges)
        edges.push_back({{"a", r.edges.variables[e.i].name},
                         {"b", r.edges.variables[e.j].name},
                         {"pooled_rho", e.pooled_rho},
                         {"z", e.z},
                         {"p_value", e.p_value},
                         {"support_count", e.support_count},
                         {"member_rho", e.member_rho}});
    j["edges"] = {{"n", r.edges.n}, {"n_members", r.edges.n_members}, {"pairs", std::move(edges)}};

    json arcs = json::array();
    for (const auto& a : r.arcs) arcs.push_back(arc_json(a));
    j["arcs"] = std::move(arcs);

    json findings = json::array();
    for (const auto& f : r.mnar_findings)
        findings.push_back({{"variable", f.variable},
                            {"completeness_var", f.completeness_var},
                            {"self_arc_rho", f.self_arc_rho},
                            {"self_arc_p", f.self_arc_p},
                            {"witnesses", f.witnesses}});
    j["mnar_findings"] = std::move(findings);
    j["warnings"] = r.warnings;
    j["timing"] = {{"started_at", r.timing.started_at},
                   {"elapsed_seconds", r.timing.elapsed_seconds},
                   {"stage_seconds", r.timing.stage_seconds}};
    return j;
}

AnalysisReport report_from_json(const json& j) {
    try {
        AnalysisReport r;
        r.tool_version = j.at("tool").at("version").get<std::string>();
        const auto& s = j.at("settings");
        r.settings.alpha = s.at("alpha").get<double>();
        r.settings.n_imputations = s.at("n_imputations").get<std::size_t>();
        r.settings.seed = s.at("seed").get<std::uint64_t>();
        const auto method = parse_lambda_method(s.at("lambda_method").get<std::string>());
        if (!method) throw ParseError("unknown lambda_method in report");
        r.settings.lambda_method = *method;
        r.settings.lambda_value = s.at("lambda_value").get<double>();
        r.settings.n_rotations = s.at("n_rotations").get<int>();
        r.n_rows = j.at("n_rows").get<std::size_t>();

        for (const auto& row : j.at("missing_profile")) {
            const auto cat = parse_category(row.at("category").get<std::string>());
            if (!cat) throw ParseError("unknown category in missing_profile");
            r.missing_profile.push_back(
                {row.at("name").get<std::string>(), *cat, row.at("missing_proportion").get<double>()});
        }
        r.excluded_constant = j.at("excluded_constant").get<std::vector<std::string>>();
        for (const auto& v : j.at("variables")) r.edges.variables.push_back(variable_from_json(v));
        for (const auto& m : j.at("members"))
            r.members.push_back({m.at("seed").get<std::uint64_t>(), m.at("lambda").get<double>(),
                                 m.at("sweeps").get<int>(), m.at("duality_gap").get<double>(),
                                 m.at("support_edges").get<std::size_t>()});

        const auto& edges = j.at("edges");
        r.edges.n = edges.at("n").get<std::size_t>();
        r.edges.n_members = edges.at("n_members").get<std::size_t>();
        for (const auto& e : edges.at("pairs")) {
            const auto a = r.edges.find(e.at("a").get<std::string>());
            const auto b = r.edges.find(e.at("b").get<std::string>());
            if (!a || !b || *a >= *b) throw ParseError("edge references unknown or misordered variables");
            PooledEdge pe;
            pe.i = *a;
            pe.j = *b;
            pe.pooled_rho = e.at("pooled_rho").get<double>();
            pe.z = e.at("z").get<double>();
            pe.p_value = e.at("p_value").get<double>();
            pe.support_count = e.at("support_count").get<std::size_t>();
            pe.member_rho = e.at("member_rho").get<std::vector<double>>();
            r.edges.edges.push_back(std::move(pe));
        }
        const std::size_t p = r.edges.variables.size();
        if (r.edges.edges.size() != p * (p > 0 ? p - 1 : 0) / 2) throw ParseError("edge table does not cover all pairs");

        for (const auto& a : j.at("arcs")) r.arcs.push_back(arc_from_json(a));
        for (const auto& f : j.at("mnar_findings"))
            r.mnar_findings.push_back({f.at("variable").get<std::string>(), f.at("completeness_var").get<std::string>(),
                                       f.at("self_arc_rho").get<double>(), f.at("self_arc_p").get<double>(),
                                       f.at("witnesses").get<std::vector<std::string>>()});
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        const auto& t = j.at("timing");
        r.timing.started_at = t.at("started_at").get<std::string>();
        r.timing.elapsed_seconds = t.at("elapsed_seconds").get<double>();
        r.timing.stage_seconds = t.at("stage_seconds").get<std::map<std::string, double>>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed report: ") + e.what());
    }
}

std::string dump_report(const AnalysisReport& r) {
    return to_json(r).dump(2) + "\n";
}

AnalysisReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open report '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("report is not valid JSON: ") + e.what());
    }
    return report_from_json(j);
}

GraphFormat parse_graph_format(std::string_view name) {
    if (name == "dot") return GraphFormat::Dot;
    if (name == "json") return GraphFormat::Json;
    if (name == "csv") return GraphFormat::Csv;
    throw UsageError("unknown graph format '" + std::string(name) + "' (expected dot, json or csv)");
}

std::string_view file_extension(GraphFormat f) {
    switch (f) {
        case GraphFormat::Dot: return ".dot";
        case GraphFormat::Json: return ".json";
        case GraphFormat::Csv: return ".csv";
    }
    return "";
}

void export_graph(const AnalysisReport& r, GraphFormat format, std::ostream& out) {
    switch (format) {
        case GraphFormat::Csv: {
            out << "obs_var,comp_var,rho,p,counterpart_rho,counterpart_p,sign\n";
            for (const auto& a : r.arcs) {
                out << csv_field(a.observation_var) << ',' << csv_field(a.completeness_var) << ','
                    << shortest(a.pooled_rho) << ',' << shortest(a.p_value) << ','
                    << (a.counterpart_rho ? shortest(*a.counterpart_rho) : "") << ','
                    << (a.counterpart_p ? shortest(*a.counterpart_p) : "") << ',' << to_string(a.sign) << '\n';
            }
            return;
        }
        case GraphFormat::Json: {
            json nodes = json::array();
            for (const auto& v : r.variables()) nodes.push_back(variable_json(v));
            json edges = json::array();
            for (const auto& a : r.arcs) {
                json e = arc_json(a);
                e["color"] = a.sign == ArcSign::Positive ? "green" : "red";
                edges.push_back(std::move(e));
            }
            json findings = json::array();
            for (const auto& f : r.mnar_findings)
                findings.push_back({{"variable", f.variable}, {"witnesses", f.witnesses}});
            out << json{{"nodes", nodes}, {"arcs", edges}, {"mnar_findings", findings}}.dump(2) << '\n';
            return;
        }
        case GraphFormat::Dot: {
            out << "graph missingness {\n"
                << "  rankdir=LR;\n"
                << "  node [shape=box];\n";
            out << "  subgraph cluster_observation {\n    label=\"observation\";\n    rank=same;\n";
            for (const auto& v : r.variables())
                if (v.kind == VariableKind::Observation) out << "    " << dot_id(v.name) << ";\n";
            out << "  }\n";
            out << "  subgraph cluster_completeness {\n    label=\"completeness\";\n    rank=same;\n";
            for (const auto& v : r.variables())
                if (v.kind == VariableKind::Completeness) out << "    " << dot_id(v.name) << ";\n";
            out << "  }\n";
            for (const auto& a : r.arcs) {
                out << "  " << dot_id(a.observation_var) << " -- " << dot_id(a.completeness_var)
                    << " [color=" << (a.sign == ArcSign::Positive ? "green" : "red")
                    << ", label=\"ρ=" << compact(a.pooled_rho) << ", p=" << compact(a.p_value) << "\"];\n";
            }
            out << "}\n";
            return;
        }
    }
}

}  // namespace missgraph
