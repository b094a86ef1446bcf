// missgraph command-line interface.
//
//   missgraph analyze   --input data.csv --out results/ [--alpha 0.01 --imputations 25 --seed 1 ...]
//   missgraph simulate  --spec sim.json --out dir/
//   missgraph export    --report results/report.json --format dot [--out graph.dot]
//   missgraph benchmark --spec sim.json --replicates 50 [--out bench.json]
//
// Exit codes: 0 ok, 2 config/usage, 3 parse, 4 numeric, 5 convergence.
// Failures print one line to stderr:
//   missgraph: error code=<n> kind=<kind> stage=<stage> message="<json-escaped text>"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "missgraph/error.hpp"
#include "missgraph/pipeline.hpp"
#include "missgraph/report.hpp"
#include "missgraph/simulator.hpp"

namespace mg = missgraph;

namespace {

constexpr const char* kOutDirEnv = "MISSGRAPH_OUT_DIR";

int report_error(int code, std::string_view kind, std::string_view stage, std::string_view message) {
    std::cerr << "missgraph: error code=" << code << " kind=" << kind << " stage=" << (stage.empty() ? "-" : stage)
              << " message=" << nlohmann::json(std::string(message)).dump() << '\n';
    return code;
}

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return {};
}

struct AnalyzeFlags {
    std::string input, schema, config, out, lambda_method;
    double alpha = 0, lambda = 0;
    std::size_t imputations = 0;
    std::uint64_t seed = 0;
    int rotations = 0;
    unsigned threads = 0;
    std::vector<std::string> na_tokens;
    bool dump = false;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graphical analysis of informative missing-data patterns"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(MISSGRAPH_VERSION));

    AnalyzeFlags af;
    auto* analyze = app.add_subcommand("analyze", "Run the full missingness analysis on a CSV file");
    auto* o_input = analyze->add_option("--input,-i", af.input, "Input CSV file");
    auto* o_schema = analyze->add_option("--schema", af.schema, "JSON map of variable name to category");
    analyze->add_option("--config", af.config, "JSON config file; flags override its values");
    auto* o_alpha = analyze->add_option("--alpha", af.alpha, "Significance level (default 0.01)");
    auto* o_imp = analyze->add_option("--imputations", af.imputations, "Number of hot-deck imputations (default 25)");
    auto* o_seed = analyze->add_option("--seed", af.seed, "Master seed (default 0)");
    auto* o_method = analyze->add_option("--lambda-method", af.lambda_method, "ric or fixed (default ric)")
                         ->check(CLI::IsMember({"ric", "fixed"}));
    auto* o_lambda = analyze->add_option("--lambda", af.lambda, "Penalty for --lambda-method fixed");
    auto* o_rot = analyze->add_option("--rotations", af.rotations, "RIC permutation replicates (default 20)");
    auto* o_out = analyze->add_option("--out,-o", af.out, std::string("Output directory (default $") + kOutDirEnv + ")");
    auto* o_na = analyze->add_option("--na-token", af.na_tokens, "Missing-value token; repeatable, replaces defaults");
    auto* o_threads = analyze->add_option("--threads", af.threads, "Worker threads, 0 = all cores");
    auto* o_dump = analyze->add_flag("--dump-imputations", af.dump, "Also write each imputed dataset as CSV");

    std::string sim_spec, sim_out;
    auto* simulate = app.add_subcommand("simulate", "Generate a dataset with known missingness mechanisms");
    simulate->add_option("--spec", sim_spec, "Simulation spec (JSON)")->required();
    auto* o_sim_out = simulate->add_option("--out,-o", sim_out, "Output directory");

    std::string exp_report, exp_format = "dot", exp_out;
    auto* exporter = app.add_subcommand("export", "Export the arcs of a report as a graph or table");
    exporter->add_option("--report", exp_report, "report.json from analyze")->required();
    exporter->add_option("--format", exp_format, "dot, json or csv");
    exporter->add_option("--out,-o", exp_out, "Output file (default stdout)");

    std::string bench_spec, bench_out;
    std::size_t bench_reps = 0, bench_imp = mg::kDefaultImputations;
    double bench_alpha = mg::kDefaultAlpha;
    unsigned bench_threads = 0;
    auto* bench = app.add_subcommand("benchmark", "Score arc recovery over simulated replicates");
    bench->add_option("--spec", bench_spec, "Simulation spec (JSON)")->required();
    bench->add_option("--replicates", bench_reps, "Replicate count (overrides the spec's \"replicates\")");
    bench->add_option("--imputations", bench_imp, "Imputations per replicate");
    bench->add_option("--alpha", bench_alpha, "Significance level");
    bench->add_option("--threads", bench_threads, "Worker threads, 0 = all cores");
    bench->add_option("--out,-o", bench_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(static_cast<int>(mg::ErrorCode::Config), "usage", "cli", e.what());
    }

    try {
        if (*analyze) {
            mg::AnalysisConfig cfg;
            cfg.output_dir = default_out_dir();
            if (!af.config.empty()) cfg = mg::load_analysis_config(af.config, cfg);
            auto& s = cfg.options.settings;
            if (*o_input) cfg.input = af.input;
            if (*o_schema) cfg.schema = af.schema;
            if (*o_alpha) s.alpha = af.alpha;
            if (*o_imp) s.n_imputations = af.imputations;
            if (*o_seed) s.seed = af.seed;
            if (*o_method) s.lambda_method = *mg::parse_lambda_method(af.lambda_method);
            if (*o_lambda) {
                s.lambda_value = af.lambda;
                if (!*o_method) s.lambda_method = mg::LambdaMethod::Fixed;
            }
            if (*o_rot) s.n_rotations = af.rotations;
            if (*o_out) cfg.output_dir = af.out;
            if (*o_na) cfg.na_tokens = {af.na_tokens.begin(), af.na_tokens.end()};
            if (*o_threads) cfg.options.threads = af.threads;
            if (*o_dump) cfg.dump_imputations = af.dump;

            const mg::AnalysisReport rep = mg::analyze_command(cfg);
            for (const auto& w : rep.warnings) std::cerr << "missgraph: warning: " << w << '\n';
            std::cout << "variables: " << rep.variables().size() << ", arcs: " << rep.arcs.size()
                      << ", MNAR findings: " << rep.mnar_findings.size() << '\n'
                      << "wrote " << (cfg.output_dir / mg::kReportFile).string() << ", "
                      << (cfg.output_dir / mg::kArcsFile).string() << ", "
                      << (cfg.output_dir / mg::kGraphFile).string() << '\n';
        } else if (*simulate) {
            std::filesystem::path out = *o_sim_out ? std::filesystem::path(sim_out) : default_out_dir();
            if (out.empty()) throw mg::ConfigError(std::string("--out is required (or set ") + kOutDirEnv + ")");
            mg::simulate_command(sim_spec, out);
            std::cout << "wrote " << (out / "data.csv").string() << ", " << (out / "truth.json").string() << '\n';
        } else if (*exporter) {
            const auto format = mg::parse_graph_format(exp_format);
            const mg::AnalysisReport rep = mg::load_report(exp_report);
            if (exp_out.empty()) {
                mg::export_graph(rep, format, std::cout);
            } else {
                std::ostringstream ss;
                mg::export_graph(rep, format, ss);
                const std::filesystem::path p(exp_out);
                mg::write_outputs(p.has_parent_path() ? p.parent_path() : ".", {{p.filename().string(), ss.str()}});
            }
        } else if (*bench) {
            std::ifstream in(bench_spec, std::ios::binary);
            if (!in) throw mg::ConfigError("cannot open simulation spec '" + bench_spec + "'");
            nlohmann::json spec;
            try {
                spec = nlohmann::json::parse(in);
            } catch (const nlohmann::json::parse_error& e) {
                throw mg::ConfigError(std::string("simulation spec is not valid JSON: ") + e.what());
            }
            std::size_t reps = bench_reps;
            if (reps == 0 && spec.contains("replicates") && spec["replicates"].is_number_unsigned())
                reps = spec["replicates"].get<std::size_t>();
            if (reps == 0) throw mg::ConfigError("replicates must be at least 1");
            const mg::GroundTruth base = mg::ground_truth_from_json(spec);
            mg::AnalysisOptions opts;
            opts.settings.n_imputations = bench_imp;
            opts.settings.alpha = bench_alpha;
            opts.threads = bench_threads;
            const auto result = mg::run_benchmark(mg::make_replicates(base, reps), opts);
            const std::string text = mg::to_json(result).dump(2) + "\n";
            if (bench_out.empty()) {
                std::cout << text;
            } else {
                const std::filesystem::path p(bench_out);
                mg::write_outputs(p.has_parent_path() ? p.parent_path() : ".", {{p.filename().string(), text}});
            }
        }
    } catch (const mg::Error& e) {
        return report_error(static_cast<int>(e.code()), e.kind(), e.stage(), e.what());
    } catch (const std::exception& e) {
        return report_error(static_cast<int>(mg::ErrorCode::Numeric), "internal", "", e.what());
    }
    return 0;
}
