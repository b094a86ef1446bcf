#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "missgraph/dataset.hpp"
#include "missgraph/imputation.hpp"
#include "missgraph/report.hpp"

namespace missgraph {

// Salt XORed into a member's imputation seed to obtain its RIC permutation seed.
inline constexpr std::uint64_t kRicSeedSalt = 0xD1B54A32D192ED03ULL;

struct AnalysisOptions {
    RunSettings settings;
    // Worker threads for ensemble fitting; 0 = hardware concurrency. Results
    // do not depend on this value.
    unsigned threads = 0;
    // Keep the imputed members in the result.
    bool keep_members = false;
};

struct AnalysisResult {
    AnalysisReport report;
    AugmentedDataset augmented;
    ImputationEnsemble ensemble;  // empty unless keep_members
};

// parse-free part of the pipeline: augment -> impute -> transform -> fit ->
// de-sparsify -> partial correlations -> pool -> p-values -> arcs -> MNAR.
// Library errors are rethrown with Error::stage() set.
AnalysisResult run_analysis(const Dataset& data, const AnalysisOptions& options);

struct AnalysisConfig {
    std::filesystem::path input;
    std::optional<std::filesystem::path> schema;
    std::filesystem::path output_dir;
    std::set<std::string, std::less<>> na_tokens = default_na_tokens();
    AnalysisOptions options;
    bool dump_imputations = false;

    // Throws ConfigError naming every offending field.
    void validate() const;
};

// Reads a JSON config file; unknown keys are rejected.
AnalysisConfig load_analysis_config(const std::filesystem::path& path, AnalysisConfig base = {});

// Files written by analyze_command, relative to the output directory.
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kArcsFile = "arcs.csv";
inline constexpr const char* kGraphFile = "graph.dot";

// Runs the pipeline on config.input and writes report.json, arcs.csv and
// graph.dot (plus imputation_<k>.csv when dump_imputations). Nothing is left
// behind in the output directory if any stage fails.
AnalysisReport analyze_command(const AnalysisConfig& config);

// Writes `files` (name -> contents) into `dir` as a unit: on any failure the
// files already written are removed before the error propagates.
void write_outputs(const std::filesystem::path& dir, const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace missgraph
