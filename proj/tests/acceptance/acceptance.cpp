// Acceptance suite. Run with criterion ids (c1 ... c9) or with no arguments
// for all of them; prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../support/oracles.hpp"
#include "missgraph/augmentation.hpp"
#include "missgraph/dataset.hpp"
#include "missgraph/ggm.hpp"
#include "missgraph/imputation.hpp"
#include "missgraph/nonparanormal.hpp"
#include "missgraph/pipeline.hpp"
#include "missgraph/pooling.hpp"
#include "missgraph/rng.hpp"
#include "missgraph/simulator.hpp"

using namespace missgraph;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    std::vector<std::string> info;
};

struct Criterion {
    std::string id;
    std::string name;
    double time_limit;  // seconds, 0 = none
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------- c1
Outcome glasso_correctness() {
    double worst_kkt = 0.0;
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Eigen::MatrixXd s = oracle::random_correlation(10, 1000 + seed);
        for (double lambda : {0.05, 0.1, 0.3}) {
            const Eigen::MatrixXd theta = glasso_fit(s, lambda);
            worst_kkt = std::max(worst_kkt, glasso_kkt_violation(s, theta, lambda));
            ++solved;
        }
    }
    Eigen::MatrixXd s2(2, 2);
    s2 << 1.0, 0.5, 0.5, 1.0;
    const double err2 = (glasso_fit(s2, 0.2) - Eigen::MatrixXd(oracle::glasso_2x2(0.5, 0.2))).cwiseAbs().maxCoeff();
    return {worst_kkt <= 1e-6 && err2 <= 1e-8,
            fmt("%d solves, max KKT violation %.2e (<= 1e-6); 2x2 closed-form error %.2e (<= 1e-8)", solved,
                worst_kkt, err2)};
}

// ---------------------------------------------------------------- c2
Outcome desparsified_calibration() {
    constexpr int kReplicates = 500;
    constexpr std::size_t n = 400;
    constexpr Eigen::Index p = 10;
    std::size_t rejections = 0, tests = 0;
    for (int r = 0; r < kReplicates; ++r) {
        const auto seed = rng::split_seed(0xC2, static_cast<std::uint64_t>(r));
        const Eigen::MatrixXd x = generate_gaussian(Eigen::MatrixXd::Identity(p, p), n, seed);
        FitOptions o;
        o.seed = seed ^ kRicSeedSalt;
        const PrecisionFit f = fit_precision(nonparanormal_transform(x), o);
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = i + 1; j < p; ++j) {
                ++tests;
                rejections += std::abs(f.z(i, j)) > 2.5758293035489;
            }
    }
    const double rate = static_cast<double>(rejections) / static_cast<double>(tests);
    return {rate >= 0.003 && rate <= 0.03,
            fmt("type-I rate %.4f (%zu/%zu) at alpha=0.01, required [0.003, 0.03]", rate, rejections, tests)};
}

// ---------------------------------------------------------------- c3
Outcome imputation_null() {
    constexpr int kReplicates = 100;
    constexpr std::size_t n = 2000;
    double sum = 0.0;
    for (int r = 0; r < kReplicates; ++r) {
        GroundTruth t;
        t.variables = {{"a"}};
        t.precision = Eigen::MatrixXd::Identity(1, 1);
        t.n = n;
        t.seed = rng::split_seed(0xC3, static_cast<std::uint64_t>(r));
        t.mechanisms = {{Mechanism::MNAR, "a", 0.3, {}, 1.5, rng::split_seed(t.seed, 1)}};
        const AugmentedDataset a = make_completeness_indicators(simulate(t).data);
        const Eigen::MatrixXd m = hot_deck_impute(a, rng::split_seed(t.seed, 2));
        sum += oracle::pearson(m.col(0), m.col(1));
    }
    const double mean = sum / kReplicates;
    const double bound = 4.0 / std::sqrt(static_cast<double>(n));
    return {std::abs(mean) <= bound, fmt("mean corr(a, c_a) = %+.5f, bound 4/sqrt(n) = %.5f", mean, bound)};
}

// ---------------------------------------------------------------- c4 / c5
GroundTruth two_variable_grid(Mechanism kind, double rho, std::uint64_t seed) {
    GroundTruth t;
    t.variables = {{"a"}, {"z"}};
    Eigen::MatrixXd c(2, 2);
    c << 1.0, rho, rho, 1.0;
    t.precision = c.inverse();
    t.n = 5000;
    t.seed = seed;
    MechanismSpec m{kind, "a", 0.3, std::nullopt, 1.5, 0};
    if (kind == Mechanism::MAR) m.driver = "z";
    t.mechanisms = {m};
    return t;
}

AnalysisOptions pipeline_options() {
    AnalysisOptions o;
    o.settings.n_imputations = 25;
    o.settings.alpha = 0.01;
    o.threads = 0;
    return o;
}

Outcome mnar_detection() {
    const auto truths = make_replicates(two_variable_grid(Mechanism::MNAR, 0.6, 0xC4), 50);
    const BenchmarkReport r = run_benchmark(truths, pipeline_options());
    const MechanismScore& s = r.by_mechanism.at(Mechanism::MNAR);
    const bool ok = r.failures.empty() && s.self_arc_rate() >= 0.8 && s.witness_rate() >= 0.95;
    return {ok, fmt("self-arc flagged %zu/%zu = %.2f (>= 0.80); witness in %zu/%zu = %.2f (>= 0.95); failures %zu",
                    s.self_arcs, s.targets, s.self_arc_rate(), s.self_with_witness, s.self_arcs, s.witness_rate(),
                    r.failures.size())};
}

Outcome mar_detection() {
    const auto truths = make_replicates(two_variable_grid(Mechanism::MAR, 0.6, 0xC5), 50);
    const BenchmarkReport r = run_benchmark(truths, pipeline_options());
    const MechanismScore& s = r.by_mechanism.at(Mechanism::MAR);
    Outcome out{r.failures.empty() && s.power() >= 0.9 && s.self_arc_rate() <= 0.05,
                fmt("driver arc (z, c_a) %zu/%zu = %.2f (>= 0.90); self-arc false rate %zu/%zu = %.2f (<= 0.05)",
                    s.expected_found, s.expected_arcs, s.power(), s.self_arcs, s.targets, s.self_arc_rate())};

    const auto indep = make_replicates(two_variable_grid(Mechanism::MAR, 0.0, 0xC50), 50);
    const BenchmarkReport ri = run_benchmark(indep, pipeline_options());
    const MechanismScore& si = ri.by_mechanism.at(Mechanism::MAR);
    out.info.push_back(fmt("uncorrelated driver (rho=0): driver arc %.2f, self-arc rate %.2f", si.power(),
                           si.self_arc_rate()));
    return out;
}

// ---------------------------------------------------------------- c6
Outcome mcar_null() {
    GroundTruth t;
    for (const char* v : {"a", "b", "x", "y", "w"}) t.variables.push_back({v});
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(5, 5, 0.3);
    c.diagonal().setOnes();
    t.precision = c.inverse();
    t.n = 2000;
    t.seed = 0xC6;
    t.mechanisms = {{Mechanism::MCAR, "a", 0.3, {}, 0.0, 0}, {Mechanism::MCAR, "b", 0.3, {}, 0.0, 0}};
    const BenchmarkReport r = run_benchmark(make_replicates(t, 100), pipeline_options());
    const MechanismScore& s = r.by_mechanism.at(Mechanism::MCAR);
    const double alpha = 0.01;
    const double se = std::sqrt(alpha * (1 - alpha) / static_cast<double>(s.other_pairs));
    const double rate = s.false_arc_rate();
    return {r.failures.empty() && std::abs(rate - alpha) <= 2 * se,
            fmt("false-arc rate %.4f (%zu/%zu), required alpha +- 2 SE = [%.4f, %.4f]", rate, s.other_flagged,
                s.other_pairs, alpha - 2 * se, alpha + 2 * se)};
}

// ---------------------------------------------------------------- c7
Outcome pooling_exactness() {
    std::mt19937_64 eng(0xC7);
    std::uniform_real_distribution<double> u(-0.9999, 0.9999);
    std::uniform_int_distribution<int> size(1, 50);
    double worst = 0.0;
    for (int k = 0; k < 10'000; ++k) {
        std::vector<double> r(static_cast<std::size_t>(size(eng)));
        for (double& v : r) v = u(eng);
        worst = std::max(worst, std::abs(fisher_pool(r) - oracle::fisher_pool(r)));
    }
    bool exact = true;
    for (int k = 0; k < 1000; ++k) {
        const double r = u(eng);
        const std::vector<double> same(static_cast<std::size_t>(size(eng)), r);
        const std::vector<double> opposite{r, -r};
        exact = exact && fisher_pool(same) == r && fisher_pool(opposite) == 0.0;
    }
    return {worst <= 1e-12 && exact,
            fmt("max |pooled - oracle| over 10^4 sets = %.2e (<= 1e-12); idempotence and odd symmetry %s", worst,
                exact ? "exact" : "NOT exact")};
}

// ---------------------------------------------------------------- c8
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / ("missgraph_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    AnalysisConfig cfg;
    cfg.input = fs::path(MISSGRAPH_FIXTURE_DIR) / "mnar_fixture.csv";
    cfg.options.settings.seed = 2024;
    cfg.output_dir = dir / "run1";
    cfg.options.threads = 1;
    analyze_command(cfg);
    cfg.output_dir = dir / "run2";
    cfg.options.threads = 4;
    analyze_command(cfg);

    auto without_timing = [](const std::string& text) {
        auto j = nlohmann::json::parse(text);
        j.erase("timing");
        return j.dump(2);
    };
    const std::string a = slurp(dir / "run1" / kReportFile), b = slurp(dir / "run2" / kReportFile);
    const bool same_report = !a.empty() && without_timing(a) == without_timing(b);
    const bool same_files = slurp(dir / "run1" / kArcsFile) == slurp(dir / "run2" / kArcsFile) &&
                            slurp(dir / "run1" / kGraphFile) == slurp(dir / "run2" / kGraphFile);
    fs::remove_all(dir);
    return {same_report && same_files,
            fmt("report.json identical excluding timing: %s; arcs.csv and graph.dot identical: %s",
                same_report ? "yes" : "no", same_files ? "yes" : "no")};
}

// ---------------------------------------------------------------- c9
Outcome report_fidelity() {
    struct Row {
        const char* name;
        Category category;
        double proportion;
    };
    using enum Category;
    const std::vector<Row> expected{
        {"HR", VitalPhysiology, 0.016},   {"SBP", VitalPhysiology, 0.024},      {"DBP", VitalPhysiology, 0.035},
        {"Temp", VitalPhysiology, 0.095}, {"RR", VitalPhysiology, 0.027},       {"FiO2", VitalPhysiology, 0.036},
        {"PF ratio", VitalPhysiology, 0.624}, {"uvol/1h", VitalPhysiology, 0.428}, {"SF ratio", VitalPhysiology, 0.057},
        {"AVPU", VitalPhysiology, 0.093}, {"pH", BloodTests, 0.59},             {"Sodium", BloodTests, 0.137},
        {"WCC", BloodTests, 0.149},       {"Urea", BloodTests, 0.159},          {"Creatinine", BloodTests, 0.137},
        {"Platelets", BloodTests, 0.154}, {"Bilirubin", BloodTests, 0.39},      {"Lactate", BloodTests, 0.727},
        {"Age", Demographics, 0.0},       {"Male", Demographics, 0.0},          {"Died (7 days)", Mortality, 0.0},
        {"Died (28 days)", Mortality, 0.0}, {"Died (90 days)", Mortality, 0.0},
    };
    CsvOptions opts;
    opts.schema = load_schema(fs::path(MISSGRAPH_FIXTURE_DIR) / "profile_schema.json");
    const auto profile = missing_profile(parse_csv(fs::path(MISSGRAPH_FIXTURE_DIR) / "profile_fixture.csv", opts));
    std::size_t matched = 0;
    std::string first_mismatch;
    for (std::size_t k = 0; k < expected.size() && k < profile.size(); ++k) {
        const auto& e = expected[k];
        const auto& p = profile[k];
        if (p.name == e.name && p.category == e.category && p.missing_proportion == e.proportion) ++matched;
        else if (first_mismatch.empty())
            first_mismatch = fmt("; first mismatch %s: %.17g", p.name.c_str(), p.missing_proportion);
    }
    const bool ok = matched == expected.size() && profile.size() == expected.size();
    return {ok, fmt("%zu/%zu rows reproduced exactly (Lactate 0.727, pH 0.59)%s", matched, expected.size(),
                    first_mismatch.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {"c1", "glasso correctness", 10.0, glasso_correctness},
        {"c2", "de-sparsified calibration", 120.0, desparsified_calibration},
        {"c3", "imputation self-correlation null", 30.0, imputation_null},
        {"c4", "MNAR detection", 900.0, mnar_detection},
        {"c5", "MAR detection", 0.0, mar_detection},
        {"c6", "MCAR null", 0.0, mcar_null},
        {"c7", "pooling exactness", 0.0, pooling_exactness},
        {"c8", "determinism", 0.0, determinism},
        {"c9", "report fidelity", 0.0, report_fidelity},
    };
    std::vector<std::string> wanted(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string timing = fmt("%.1f s", secs);
        if (c.time_limit > 0) {
            timing += fmt(" (< %.0f s)", c.time_limit);
            if (secs >= c.time_limit) {
                o.pass = false;
                timing += " TOO SLOW";
            }
        }
        std::printf("%s %s %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", c.id.c_str(), c.name.c_str(), o.detail.c_str(),
                    timing.c_str());
        for (const auto& line : o.info) std::printf("     %s info: %s\n", c.id.c_str(), line.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
