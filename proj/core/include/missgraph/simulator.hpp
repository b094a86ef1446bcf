#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "missgraph/dataset.hpp"
#include "missgraph/pipeline.hpp"

namespace missgraph {

enum class Mechanism { MCAR, MAR, MNAR };
std::string_view to_string(Mechanism m);
std::optional<Mechanism> parse_mechanism(std::string_view text);

struct MechanismSpec {
    Mechanism kind = Mechanism::MCAR;
    std::string target;
    double rate = 0.1;                  // base missingness probability, in (0, 1)
    std::optional<std::string> driver;  // MAR only
    double slope = 0.0;                 // logistic coefficient (MAR, MNAR)
    std::uint64_t seed = 0;

    bool operator==(const MechanismSpec&) const = default;
};

double logit(double p);
double logistic(double x);

// Missingness probability of one row given the latent value of the driver
// (MAR) or of the target itself (MNAR); MCAR ignores `value`.
double missing_probability(const MechanismSpec& spec, double value);

// Everything needed to regenerate one simulated dataset, plus the per-cell
// missingness probabilities once it has been generated.
struct GroundTruth {
    std::vector<VariableMeta> variables;
    Eigen::MatrixXd precision;
    std::vector<MechanismSpec> mechanisms;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::map<std::string, std::vector<double>> missing_probabilities;

    const MechanismSpec* mechanism_for(std::string_view target) const;
};

// n i.i.d. rows from N(0, precision^{-1}). Throws ContractError unless
// precision is symmetric positive definite.
Eigen::MatrixXd generate_gaussian(const Eigen::MatrixXd& precision, std::size_t n, std::uint64_t seed);

// Masks spec.target in `latent` (columns named by `names`). Each row is
// missing independently with missing_probability(); the uniform draws come
// from an engine seeded with spec.seed. Columns already masked in `base`
// stay masked. The per-row probabilities are written to `probabilities`.
Dataset apply_mechanism(const Eigen::MatrixXd& latent, const std::vector<VariableMeta>& variables,
                        const MechanismSpec& spec, const Dataset* base = nullptr,
                        std::vector<double>* probabilities = nullptr);

struct SimulatedData {
    Dataset data;
    Eigen::MatrixXd latent;
    GroundTruth truth;
};

// Generates latent data from truth.precision and applies every mechanism in
// order. Fills truth.missing_probabilities. Latent data use
// split_seed(truth.seed, 0).
SimulatedData simulate(GroundTruth truth);

// Simulation spec file:
// {
//   "n": 5000, "seed": 1,
//   "variables": ["a", {"name": "z", "category": "Vital Physiology"}],
//   "correlation": [[1, 0.6], [0.6, 1]]      (or "precision": [[...]])
//   "mechanisms": [{"kind": "MNAR", "target": "a", "rate": 0.3, "slope": 1.5}],
//   "replicates": 50                          (benchmark only)
// }
// Mechanism seeds default to split_seed(seed, m + 1).
// Throws ConfigError listing every offending field.
GroundTruth ground_truth_from_json(const nlohmann::json& spec);
GroundTruth load_simulation_spec(const std::filesystem::path& path);

nlohmann::json truth_to_json(const GroundTruth& t);
GroundTruth truth_from_json(const nlohmann::json& j);

// Writes data.csv and truth.json into `dir`.
void simulate_command(const std::filesystem::path& spec, const std::filesystem::path& dir);

// `count` copies of `base` with seeds split_seed(base.seed, r) and mechanism
// seeds re-derived from each replicate seed.
std::vector<GroundTruth> make_replicates(const GroundTruth& base, std::size_t count);

struct MechanismScore {
    std::size_t targets = 0;           // (replicate, target) pairs evaluated
    std::size_t expected_arcs = 0;     // MNAR: self arc; MAR: driver arc
    std::size_t expected_found = 0;
    std::size_t self_arcs = 0;         // (target, c_target) flagged
    std::size_t self_with_witness = 0; // ... with an MNAR finding that has a witness
    std::size_t other_pairs = 0;       // observation-indicator pairs not expected by the mechanism
    std::size_t other_flagged = 0;

    double power() const;
    double self_arc_rate() const;
    double witness_rate() const;
    double false_arc_rate() const;
};

struct ReplicateFailure {
    std::size_t replicate = 0;
    std::string stage;
    std::string message;
};

struct BenchmarkReport {
    std::size_t replicates = 0;
    double alpha = kDefaultAlpha;
    std::map<Mechanism, MechanismScore> by_mechanism;
    std::vector<ReplicateFailure> failures;
};

// Runs the full analysis on each replicate and scores the recovered arcs.
// A replicate whose pipeline throws is recorded in `failures` and skipped.
// Throws ContractError for an empty batch.
BenchmarkReport run_benchmark(const std::vector<GroundTruth>& truths, const AnalysisOptions& options);

nlohmann::json to_json(const BenchmarkReport& r);

}  // namespace missgraph
