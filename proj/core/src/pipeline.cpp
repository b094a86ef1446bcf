#include "missgraph/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "missgraph/augmentation.hpp"
#include "missgraph/error.hpp"
#include "missgraph/nonparanormal.hpp"
#include "missgraph/rng.hpp"

namespace missgraph {

namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
public:
    explicit StageTimer(RunTiming& timing) : timing_(timing) {}

    template <typename F>
    auto run(const char* stage, F&& f) {
        const auto t0 = Clock::now();
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                record(stage, t0);
            } else {
                auto out = f();
                record(stage, t0);
                return out;
            }
        } catch (Error& e) {
            if (e.stage().empty()) e.set_stage(stage);
            throw;
        }
    }

private:
    void record(const char* stage, Clock::time_point t0) {
        timing_.stage_seconds[stage] += std::chrono::duration<double>(Clock::now() - t0).count();
    }
    RunTiming& timing_;
};

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::array<char, 32> buf{};
    std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf.data();
}

struct MemberOutput {
    PrecisionFit fit;
    std::vector<std::string> warnings;
    double transform_seconds = 0.0;
    double fit_seconds = 0.0;
};

MemberOutput fit_member(const Eigen::MatrixXd& member, std::span<const std::string> names, std::uint64_t seed,
                        const RunSettings& settings) {
    MemberOutput out;
    auto t0 = Clock::now();
    TransformedMatrix t;
    try {
        t = nonparanormal_transform(member, names);
    } catch (Error& e) {
        e.set_stage("transform");
        throw;
    }
    auto t1 = Clock::now();
    FitOptions fo;
    fo.lambda_method = settings.lambda_method;
    fo.lambda = settings.lambda_value;
    fo.n_rotations = settings.n_rotations;
    fo.seed = seed ^ kRicSeedSalt;
    try {
        out.fit = fit_precision(t, fo, &out.warnings);
    } catch (Error& e) {
        e.set_stage("fit");
        throw;
    }
    auto t2 = Clock::now();
    out.transform_seconds = std::chrono::duration<double>(t1 - t0).count();
    out.fit_seconds = std::chrono::duration<double>(t2 - t1).count();
    return out;
}

std::vector<MemberOutput> fit_members(const ImputationEnsemble& ens, std::span<const std::string> names,
                                      const RunSettings& settings, unsigned threads) {
    const std::size_t k = ens.size();
    std::vector<MemberOutput> outputs(k);
    std::vector<std::exception_ptr> errors(k);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t m = next++; m < k; m = next++) {
            try {
                outputs[m] = fit_member(ens.members[m], names, ens.seeds[m], settings);
            } catch (...) {
                errors[m] = std::current_exception();
            }
        }
    };
    unsigned n_threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, k));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    // Report the error of the lowest-index failing member.
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return outputs;
}

std::string member_csv(const Eigen::MatrixXd& m, const std::vector<VariableMeta>& vars) {
    std::ostringstream out;
    for (std::size_t j = 0; j < vars.size(); ++j) out << (j ? "," : "") << vars[j].name;
    out << '\n';
    std::array<char, 64> buf{};
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), m(i, j));
            out.write(buf.data(), ptr - buf.data());
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace

AnalysisResult run_analysis(const Dataset& data, const AnalysisOptions& options) {
    const auto start = Clock::now();
    const RunSettings& s = options.settings;
    AnalysisResult result;
    AnalysisReport& rep = result.report;
    rep.tool_version = MISSGRAPH_VERSION;
    rep.settings = s;
    rep.timing.started_at = utc_now();
    rep.n_rows = data.n_rows();
    StageTimer timer(rep.timing);

    if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (s.n_imputations < 1) throw ConfigError("n_imputations must be at least 1");

    rep.missing_profile = timer.run("profile", [&] { return missing_profile(data); });
    result.augmented = timer.run("augment", [&] { return make_completeness_indicators(data); });
    rep.excluded_constant = result.augmented.excluded_constant;
    if (result.augmented.indicators.empty()) rep.warnings.push_back("no completeness indicators generated");

    const std::vector<VariableMeta> vars = result.augmented.variables();
    std::vector<std::string> names;
    for (const auto& v : vars) names.push_back(v.name);

    ImputationEnsemble ens =
        timer.run("impute", [&] { return make_ensemble(result.augmented, s.n_imputations, s.seed); });

    const auto t_fit = Clock::now();
    std::vector<MemberOutput> outputs = fit_members(ens, names, s, options.threads);
    rep.timing.stage_seconds["fit_wall"] = std::chrono::duration<double>(Clock::now() - t_fit).count();

    std::vector<PrecisionFit> fits;
    fits.reserve(outputs.size());
    for (std::size_t m = 0; m < outputs.size(); ++m) {
        auto& o = outputs[m];
        rep.timing.stage_seconds["transform"] += o.transform_seconds;
        rep.timing.stage_seconds["fit"] += o.fit_seconds;
        for (auto& w : o.warnings) rep.warnings.push_back("member " + std::to_string(m) + ": " + w);
        MemberSummary ms;
        ms.seed = ens.seeds[m];
        ms.lambda = o.fit.lambda;
        ms.sweeps = o.fit.sweeps;
        ms.duality_gap = o.fit.duality_gap;
        for (Eigen::Index j = 0; j < o.fit.p(); ++j)
            for (Eigen::Index i = j + 1; i < o.fit.p(); ++i) ms.support_edges += o.fit.in_support(i, j) ? 1 : 0;
        rep.members.push_back(ms);
        fits.push_back(std::move(o.fit));
    }
    if (options.keep_members) result.ensemble = std::move(ens);

    rep.edges = timer.run("pool", [&] { return pool_partial_correlations(fits, vars); });
    timer.run("p_values", [&] { edge_p_values(rep.edges, data.n_rows(), vars.size()); });
    rep.arcs = timer.run("arcs", [&] { return extract_missingness_arcs(rep.edges, s.alpha); });
    rep.mnar_findings = timer.run("mnar", [&] { return detect_mnar(rep.arcs, rep.edges, s.alpha); });

    rep.timing.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
}

void AnalysisConfig::validate() const {
    std::vector<std::string> bad;
    const RunSettings& s = options.settings;
    if (input.empty()) bad.emplace_back("input (required)");
    if (output_dir.empty()) bad.emplace_back("output_dir (required)");
    if (!(s.alpha > 0.0 && s.alpha < 1.0)) bad.emplace_back("alpha (must lie in (0, 1))");
    if (s.n_imputations < 1) bad.emplace_back("n_imputations (must be >= 1)");
    if (s.n_rotations < 1) bad.emplace_back("n_rotations (must be >= 1)");
    if (s.lambda_method == LambdaMethod::Fixed && !(s.lambda_value >= 0.0 && std::isfinite(s.lambda_value)))
        bad.emplace_back("lambda_value (must be finite and >= 0)");
    if (bad.empty()) return;
    std::string msg = "invalid configuration:";
    for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? ", " : " ") + bad[i];
    throw ConfigError(msg);
}

AnalysisConfig load_analysis_config(const std::filesystem::path& path, AnalysisConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const auto dir = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : dir / fp;
    };
    std::vector<std::string> bad;
    RunSettings& s = base.options.settings;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "input") base.input = resolve(value.get<std::string>());
            else if (key == "schema") base.schema = resolve(value.get<std::string>());
            else if (key == "output_dir") base.output_dir = resolve(value.get<std::string>());
            else if (key == "alpha") s.alpha = value.get<double>();
            else if (key == "n_imputations") s.n_imputations = value.get<std::size_t>();
            else if (key == "seed") s.seed = value.get<std::uint64_t>();
            else if (key == "lambda_method") {
                const auto m = parse_lambda_method(value.get<std::string>());
                if (!m) bad.push_back(key);
                else s.lambda_method = *m;
            } else if (key == "lambda_value") s.lambda_value = value.get<double>();
            else if (key == "n_rotations") s.n_rotations = value.get<int>();
            else if (key == "threads") base.options.threads = value.get<unsigned>();
            else if (key == "dump_imputations") base.dump_imputations = value.get<bool>();
            else if (key == "na_tokens") {
                base.na_tokens.clear();
                for (const auto& t : value) base.na_tokens.insert(t.get<std::string>());
            } else bad.push_back(key + " (unknown key)");
        } catch (const nlohmann::json::exception&) {
            bad.push_back(key + " (wrong type)");
        }
    }
    if (!bad.empty()) {
        std::string msg = "invalid config '" + path.string() + "':";
        for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? ", " : " ") + bad[i];
        throw ConfigError(msg);
    }
    return base;
}

void write_outputs(const std::filesystem::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
    std::vector<std::filesystem::path> written;
    try {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
        for (const auto& [name, contents] : files) {
            const auto path = dir / name;
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out) throw ConfigError("cannot write '" + path.string() + "'");
            written.push_back(path);
            out << contents;
            out.close();
            if (!out) throw ConfigError("failed writing '" + path.string() + "'");
        }
    } catch (Error& e) {
        for (const auto& p : written) {
            std::error_code ignore;
            std::filesystem::remove(p, ignore);
        }
        if (e.stage().empty()) e.set_stage("write");
        throw;
    }
}

AnalysisReport analyze_command(const AnalysisConfig& config) {
    config.validate();
    Dataset data;
    try {
        CsvOptions csv;
        csv.na_tokens = config.na_tokens;
        if (config.schema) csv.schema = load_schema(*config.schema);
        data = parse_csv(config.input, csv);
    } catch (Error& e) {
        e.set_stage("parse");
        throw;
    }

    AnalysisOptions opts = config.options;
    opts.keep_members = opts.keep_members || config.dump_imputations;
    AnalysisResult result = run_analysis(data, opts);

    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back(kReportFile, dump_report(result.report));
    std::ostringstream arcs;
    export_graph(result.report, GraphFormat::Csv, arcs);
    files.emplace_back(kArcsFile, arcs.str());
    std::ostringstream dot;
    export_graph(result.report, GraphFormat::Dot, dot);
    files.emplace_back(kGraphFile, dot.str());
    if (config.dump_imputations) {
        const auto vars = result.augmented.variables();
        for (std::size_t k = 0; k < result.ensemble.size(); ++k)
            files.emplace_back("imputation_" + std::to_string(k) + ".csv", member_csv(result.ensemble.members[k], vars));
    }
    write_outputs(config.output_dir, files);
    return result.report;
}

}  // namespace missgraph
