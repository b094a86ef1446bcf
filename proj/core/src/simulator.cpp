#include "missgraph/simulator.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Cholesky>

#include "missgraph/augmentation.hpp"
#include "missgraph/error.hpp"
#include "missgraph/rng.hpp"

namespace missgraph {

using nlohmann::json;

namespace {

// Stream index used to derive a replicate's analysis seed from its truth seed.
constexpr std::uint64_t kPipelineStream = 1ULL << 32;

std::size_t column_of(const std::vector<VariableMeta>& vars, std::string_view name) {
    for (std::size_t j = 0; j < vars.size(); ++j)
        if (vars[j].name == name) return j;
    throw ContractError("unknown variable '" + std::string(name) + "'");
}

void validate_mechanism(const MechanismSpec& m, const std::vector<VariableMeta>& vars) {
    if (!(m.rate > 0.0 && m.rate < 1.0)) throw ContractError("mechanism rate must lie in (0, 1)");
    if (!std::isfinite(m.slope)) throw ContractError("mechanism slope must be finite");
    (void)column_of(vars, m.target);
    if (m.kind == Mechanism::MAR) {
        if (!m.driver) throw ContractError("MAR mechanism needs a driver");
        if (*m.driver == m.target) throw ContractError("MAR driver must differ from the target");
        (void)column_of(vars, *m.driver);
    }
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(num) / static_cast<double>(den);
}

json nullable(double v) {
    return std::isnan(v) ? json(nullptr) : json(v);
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::optional<Eigen::MatrixXd> matrix_from_json(const json& j, std::size_t p) {
    if (!j.is_array() || j.size() != p) return std::nullopt;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) {
        if (!j[i].is_array() || j[i].size() != p) return std::nullopt;
        for (std::size_t k = 0; k < p; ++k) {
            if (!j[i][k].is_number()) return std::nullopt;
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
        }
    }
    return m;
}

json mechanism_json(const MechanismSpec& m) {
    json j{{"kind", to_string(m.kind)}, {"target", m.target}, {"rate", m.rate}, {"slope", m.slope}, {"seed", m.seed}};
    if (m.driver) j["driver"] = *m.driver;
    return j;
}

}  // namespace

std::string_view to_string(Mechanism m) {
    switch (m) {
        case Mechanism::MCAR: return "MCAR";
        case Mechanism::MAR: return "MAR";
        case Mechanism::MNAR: return "MNAR";
    }
    return "MCAR";
}

std::optional<Mechanism> parse_mechanism(std::string_view text) {
    if (text == "MCAR" || text == "mcar") return Mechanism::MCAR;
    if (text == "MAR" || text == "mar") return Mechanism::MAR;
    if (text == "MNAR" || text == "mnar") return Mechanism::MNAR;
    return std::nullopt;
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double missing_probability(const MechanismSpec& spec, double value) {
    if (spec.kind == Mechanism::MCAR) return spec.rate;
    return logistic(logit(spec.rate) + spec.slope * value);
}

const MechanismSpec* GroundTruth::mechanism_for(std::string_view target) const {
    for (const auto& m : mechanisms)
        if (m.target == target) return &m;
    return nullptr;
}

Eigen::MatrixXd generate_gaussian(const Eigen::MatrixXd& precision, std::size_t n, std::uint64_t seed) {
    const Eigen::Index p = precision.rows();
    if (p == 0 || precision.cols() != p || !precision.allFinite())
        throw ContractError("precision must be a non-empty finite square matrix");
    if ((precision - precision.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, precision.cwiseAbs().maxCoeff()))
        throw ContractError("precision is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw ContractError("precision is not positive definite");

    rng::Engine eng(seed);
    Eigen::MatrixXd u(p, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < u.cols(); ++i)
        for (Eigen::Index j = 0; j < p; ++j) u(j, i) = rng::standard_normal(eng);
    // x = L^{-T} u has covariance (L L^T)^{-1}
    const Eigen::MatrixXd x = llt.matrixU().solve(u);
    return x.transpose();
}

Dataset apply_mechanism(const Eigen::MatrixXd& latent, const std::vector<VariableMeta>& variables,
                        const MechanismSpec& spec, const Dataset* base, std::vector<double>* probabilities) {
    if (static_cast<std::size_t>(latent.cols()) != variables.size())
        throw ContractError("latent matrix width does not match the variable list");
    validate_mechanism(spec, variables);
    const std::size_t n = static_cast<std::size_t>(latent.rows());
    const std::size_t target = column_of(variables, spec.target);
    const std::size_t source = spec.kind == Mechanism::MAR ? column_of(variables, *spec.driver) : target;

    std::vector<Column> cols;
    if (base) {
        if (base->n_rows() != n || base->n_columns() != variables.size())
            throw ContractError("base dataset does not match the latent matrix");
        cols = base->columns();
    } else {
        cols.resize(variables.size());
        for (std::size_t j = 0; j < variables.size(); ++j) {
            cols[j].meta = variables[j];
            cols[j].values.resize(n);
            cols[j].observed.assign(n, true);
            for (std::size_t i = 0; i < n; ++i)
                cols[j].values[i] = latent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }

    rng::Engine eng(spec.seed);
    if (probabilities) probabilities->assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double pm =
            missing_probability(spec, latent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(source)));
        if (probabilities) (*probabilities)[i] = pm;
        if (rng::uniform01(eng) < pm) cols[target].observed[i] = false;
    }
    return Dataset(std::move(cols));
}

SimulatedData simulate(GroundTruth truth) {
    SimulatedData out;
    if (truth.n < 1) throw ContractError("simulation needs n >= 1");
    if (static_cast<std::size_t>(truth.precision.rows()) != truth.variables.size())
        throw ContractError("precision size does not match the variable list");
    std::set<std::string> targets;
    for (const auto& m : truth.mechanisms)
        if (!targets.insert(m.target).second) throw ContractError("variable '" + m.target + "' has two mechanisms");

    out.latent = generate_gaussian(truth.precision, truth.n, rng::split_seed(truth.seed, 0));
    std::optional<Dataset> current;
    truth.missing_probabilities.clear();
    for (const auto& m : truth.mechanisms) {
        std::vector<double> probs;
        current = apply_mechanism(out.latent, truth.variables, m, current ? &*current : nullptr, &probs);
        truth.missing_probabilities[m.target] = std::move(probs);
    }
    if (!current) {
        std::vector<Column> cols(truth.variables.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            cols[j].meta = truth.variables[j];
            const auto col = out.latent.col(static_cast<Eigen::Index>(j));
            cols[j].values.assign(col.data(), col.data() + col.size());
            cols[j].observed.assign(truth.n, true);
        }
        current = Dataset(std::move(cols));
    }
    out.data = std::move(*current);
    out.truth = std::move(truth);
    return out;
}

GroundTruth ground_truth_from_json(const json& spec) {
    std::vector<std::string> bad;
    GroundTruth t;
    if (!spec.is_object()) throw ConfigError("simulation spec must be a JSON object");

    static const std::set<std::string> known{"n", "seed", "variables", "correlation", "precision", "mechanisms",
                                             "replicates"};
    for (const auto& [key, _] : spec.items())
        if (!known.contains(key)) bad.push_back(key + " (unknown key)");

    if (!spec.contains("n") || !spec["n"].is_number_unsigned() || spec["n"].get<std::size_t>() < 1)
        bad.emplace_back("n (positive integer required)");
    else
        t.n = spec["n"].get<std::size_t>();
    if (spec.contains("seed")) {
        if (spec["seed"].is_number_unsigned()) t.seed = spec["seed"].get<std::uint64_t>();
        else bad.emplace_back("seed (non-negative integer required)");
    }

    if (!spec.contains("variables") || !spec["variables"].is_array() || spec["variables"].empty()) {
        bad.emplace_back("variables (non-empty array required)");
    } else {
        std::set<std::string> names;
        for (const auto& v : spec["variables"]) {
            VariableMeta meta;
            if (v.is_string()) {
                meta.name = v.get<std::string>();
            } else if (v.is_object() && v.contains("name") && v["name"].is_string()) {
                meta.name = v["name"].get<std::string>();
                if (v.contains("category")) {
                    const auto cat = v["category"].is_string() ? parse_category(v["category"].get<std::string>())
                                                               : std::nullopt;
                    if (!cat) bad.push_back("variables." + meta.name + ".category");
                    else meta.category = *cat;
                }
            } else {
                bad.emplace_back("variables (entries must be names or {name, category})");
                continue;
            }
            if (!names.insert(meta.name).second) bad.push_back("variables (duplicate '" + meta.name + "')");
            t.variables.push_back(std::move(meta));
        }
    }

    const std::size_t p = t.variables.size();
    const bool has_corr = spec.contains("correlation");
    const bool has_prec = spec.contains("precision");
    if (has_corr == has_prec) {
        bad.emplace_back("correlation|precision (exactly one required)");
    } else if (p > 0) {
        const auto m = matrix_from_json(has_corr ? spec["correlation"] : spec["precision"], p);
        if (!m) {
            bad.push_back(std::string(has_corr ? "correlation" : "precision") + " (p x p numeric matrix required)");
        } else {
            Eigen::LLT<Eigen::MatrixXd> llt(*m);
            const bool symmetric = (*m - m->transpose()).cwiseAbs().maxCoeff() <= 1e-12;
            if (!symmetric || llt.info() != Eigen::Success) {
                bad.push_back(std::string(has_corr ? "correlation" : "precision") +
                              " (must be symmetric positive definite)");
            } else if (has_corr) {
                t.precision = llt.solve(Eigen::MatrixXd::Identity(m->rows(), m->cols()));
                t.precision = 0.5 * (t.precision + t.precision.transpose()).eval();
            } else {
                t.precision = *m;
            }
        }
    }

    if (spec.contains("mechanisms")) {
        if (!spec["mechanisms"].is_array()) {
            bad.emplace_back("mechanisms (array required)");
        } else {
            std::size_t idx = 0;
            for (const auto& mj : spec["mechanisms"]) {
                const std::string where = "mechanisms[" + std::to_string(idx) + "]";
                MechanismSpec m;
                m.seed = rng::split_seed(t.seed, idx + 1);
                ++idx;
                if (!mj.is_object()) {
                    bad.push_back(where + " (object required)");
                    continue;
                }
                const auto kind = mj.contains("kind") && mj["kind"].is_string()
                                      ? parse_mechanism(mj["kind"].get<std::string>())
                                      : std::nullopt;
                if (!kind) bad.push_back(where + ".kind (MCAR, MAR or MNAR)");
                else m.kind = *kind;
                if (!mj.contains("target") || !mj["target"].is_string()) {
                    bad.push_back(where + ".target");
                } else {
                    m.target = mj["target"].get<std::string>();
                    bool found = false;
                    for (const auto& v : t.variables) found = found || v.name == m.target;
                    if (!found) bad.push_back(where + ".target (unknown variable '" + m.target + "')");
                }
                if (!mj.contains("rate") || !mj["rate"].is_number() || !(mj["rate"].get<double>() > 0.0) ||
                    !(mj["rate"].get<double>() < 1.0))
                    bad.push_back(where + ".rate (number in (0, 1) required)");
                else
                    m.rate = mj["rate"].get<double>();
                if (mj.contains("slope")) {
                    if (mj["slope"].is_number()) m.slope = mj["slope"].get<double>();
                    else bad.push_back(where + ".slope");
                }
                if (mj.contains("seed")) {
                    if (mj["seed"].is_number_unsigned()) m.seed = mj["seed"].get<std::uint64_t>();
                    else bad.push_back(where + ".seed");
                }
                if (mj.contains("driver")) {
                    if (mj["driver"].is_string()) m.driver = mj["driver"].get<std::string>();
                    else bad.push_back(where + ".driver");
                }
                if (m.kind == Mechanism::MAR) {
                    if (!m.driver) bad.push_back(where + ".driver (required for MAR)");
                    else if (*m.driver == m.target) bad.push_back(where + ".driver (must differ from target)");
                    else {
                        bool found = false;
                        for (const auto& v : t.variables) found = found || v.name == *m.driver;
                        if (!found) bad.push_back(where + ".driver (unknown variable '" + *m.driver + "')");
                    }
                }
                for (const auto& other : t.mechanisms)
                    if (other.target == m.target) bad.push_back(where + ".target (variable already has a mechanism)");
                t.mechanisms.push_back(std::move(m));
            }
        }
    }

    if (!bad.empty()) {
        std::string msg = "invalid simulation spec:";
        for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? ", " : " ") + bad[i];
        throw ConfigError(msg);
    }
    return t;
}

GroundTruth load_simulation_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open simulation spec '" + path.string() + "'");
    try {
        return ground_truth_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("simulation spec is not valid JSON: ") + e.what());
    }
}

json truth_to_json(const GroundTruth& t) {
    json vars = json::array();
    for (const auto& v : t.variables) {
        const MechanismSpec* m = t.mechanism_for(v.name);
        vars.push_back({{"name", v.name},
                        {"category", to_string(v.category)},
                        {"mechanism", m ? json(to_string(m->kind)) : json("none")}});
    }
    json mechs = json::array();
    for (const auto& m : t.mechanisms) mechs.push_back(mechanism_json(m));
    return json{{"n", t.n},
                {"seed", t.seed},
                {"variables", std::move(vars)},
                {"precision", matrix_json(t.precision)},
                {"mechanisms", std::move(mechs)},
                {"missing_probabilities", t.missing_probabilities}};
}

GroundTruth truth_from_json(const json& j) {
    try {
        GroundTruth t;
        t.n = j.at("n").get<std::size_t>();
        t.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& v : j.at("variables")) {
            VariableMeta meta;
            meta.name = v.at("name").get<std::string>();
            const auto cat = parse_category(v.at("category").get<std::string>());
            if (!cat) throw ParseError("unknown category in truth file");
            meta.category = *cat;
            t.variables.push_back(std::move(meta));
        }
        const auto prec = matrix_from_json(j.at("precision"), t.variables.size());
        if (!prec) throw ParseError("truth precision has the wrong shape");
        t.precision = *prec;
        for (const auto& mj : j.at("mechanisms")) {
            MechanismSpec m;
            const auto kind = parse_mechanism(mj.at("kind").get<std::string>());
            if (!kind) throw ParseError("unknown mechanism kind in truth file");
            m.kind = *kind;
            m.target = mj.at("target").get<std::string>();
            m.rate = mj.at("rate").get<double>();
            m.slope = mj.at("slope").get<double>();
            m.seed = mj.at("seed").get<std::uint64_t>();
            if (mj.contains("driver")) m.driver = mj.at("driver").get<std::string>();
            t.mechanisms.push_back(std::move(m));
        }
        t.missing_probabilities = j.at("missing_probabilities").get<std::map<std::string, std::vector<double>>>();
        return t;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed truth file: ") + e.what());
    }
}

void simulate_command(const std::filesystem::path& spec, const std::filesystem::path& dir) {
    GroundTruth truth = load_simulation_spec(spec);
    SimulatedData sim;
    try {
        sim = simulate(std::move(truth));
    } catch (Error& e) {
        e.set_stage("simulate");
        throw;
    }
    std::ostringstream csv;
    write_csv(csv, sim.data);
    write_outputs(dir, {{"data.csv", csv.str()}, {"truth.json", truth_to_json(sim.truth).dump(2) + "\n"}});
}

std::vector<GroundTruth> make_replicates(const GroundTruth& base, std::size_t count) {
    std::vector<GroundTruth> out;
    out.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        GroundTruth t = base;
        t.seed = rng::split_seed(base.seed, r);
        t.missing_probabilities.clear();
        for (std::size_t m = 0; m < t.mechanisms.size(); ++m) t.mechanisms[m].seed = rng::split_seed(t.seed, m + 1);
        out.push_back(std::move(t));
    }
    return out;
}

double MechanismScore::power() const { return ratio(expected_found, expected_arcs); }
double MechanismScore::self_arc_rate() const { return ratio(self_arcs, targets); }
double MechanismScore::witness_rate() const { return ratio(self_with_witness, self_arcs); }
double MechanismScore::false_arc_rate() const { return ratio(other_flagged, other_pairs); }

BenchmarkReport run_benchmark(const std::vector<GroundTruth>& truths, const AnalysisOptions& options) {
    if (truths.empty()) throw ContractError("benchmark needs at least one replicate");
    BenchmarkReport report;
    report.replicates = truths.size();
    report.alpha = options.settings.alpha;

    for (std::size_t r = 0; r < truths.size(); ++r) {
        const GroundTruth& truth = truths[r];
        AnalysisReport rep;
        try {
            SimulatedData sim = simulate(truth);
            AnalysisOptions opts = options;
            opts.keep_members = false;
            opts.settings.seed = rng::split_seed(truth.seed, kPipelineStream);
            rep = run_analysis(sim.data, opts).report;
        } catch (const Error& e) {
            report.failures.push_back({r, e.stage(), e.what()});
            continue;
        } catch (const std::exception& e) {
            report.failures.push_back({r, "", e.what()});
            continue;
        }

        auto flagged = [&](std::string_view obs, std::string_view comp) {
            for (const auto& a : rep.arcs)
                if (a.observation_var == obs && a.completeness_var == comp) return true;
            return false;
        };
        for (const auto& m : truth.mechanisms) {
            MechanismScore& score = report.by_mechanism[m.kind];
            ++score.targets;
            const std::string comp = completeness_name(m.target);
            const bool has_indicator = rep.edges.find(comp).has_value();
            std::optional<std::string> expected;
            if (m.kind == Mechanism::MNAR) expected = m.target;
            if (m.kind == Mechanism::MAR) expected = m.driver;
            if (expected) {
                ++score.expected_arcs;
                if (has_indicator && flagged(*expected, comp)) ++score.expected_found;
            }
            if (!has_indicator) continue;
            if (flagged(m.target, comp)) {
                ++score.self_arcs;
                for (const auto& f : rep.mnar_findings)
                    if (f.variable == m.target && !f.witnesses.empty()) ++score.self_with_witness;
            }
            for (const auto& v : rep.variables()) {
                if (v.kind != VariableKind::Observation || (expected && v.name == *expected)) continue;
                ++score.other_pairs;
                if (flagged(v.name, comp)) ++score.other_flagged;
            }
        }
    }
    return report;
}

json to_json(const BenchmarkReport& r) {
    json mechs = json::object();
    for (const auto& [kind, s] : r.by_mechanism)
        mechs[std::string(to_string(kind))] = {{"targets", s.targets},
                                               {"expected_arcs", s.expected_arcs},
                                               {"expected_found", s.expected_found},
                                               {"power", nullable(s.power())},
                                               {"self_arcs", s.self_arcs},
                                               {"self_arc_rate", nullable(s.self_arc_rate())},
                                               {"self_with_witness", s.self_with_witness},
                                               {"witness_rate", nullable(s.witness_rate())},
                                               {"other_pairs", s.other_pairs},
                                               {"other_flagged", s.other_flagged},
                                               {"false_arc_rate", nullable(s.false_arc_rate())}};
    json failures = json::array();
    for (const auto& f : r.failures)
        failures.push_back({{"replicate", f.replicate}, {"stage", f.stage}, {"message", f.message}});
    return json{{"replicates", r.replicates}, {"alpha", r.alpha}, {"mechanisms", mechs}, {"failures", failures}};
}

}  // namespace missgraph
