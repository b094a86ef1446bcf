#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace missgraph {

// Variable taxonomy used for report grouping.
enum class Category {
    VitalPhysiology,
    BloodTests,
    Demographics,
    Mortality,
    IcuManagement,
    Other,
};

enum class VariableKind {
    Observation,
    Completeness,
};

std::string_view to_string(Category c);
std::string_view to_string(VariableKind k);
// Accepts both the identifier form ("BloodTests") and the display form
// ("Blood Tests"), case-insensitively.
std::optional<Category> parse_category(std::string_view text);
std::optional<VariableKind> parse_kind(std::string_view text);

struct VariableMeta {
    std::string name;
    Category category = Category::Other;
    VariableKind kind = VariableKind::Observation;
    // Name of the observation variable a completeness indicator belongs to;
    // empty for observation variables.
    std::string parent;

    bool operator==(const VariableMeta&) const = default;
};

struct Column {
    VariableMeta meta;
    // Missing cells hold quiet NaN.
    std::vector<double> values;
    // true = observed.
    std::vector<bool> observed;

    std::size_t missing_count() const;
};

// Column-oriented numeric table with a per-cell observation mask.
class Dataset {
public:
    Dataset() = default;
    // Validates equal lengths, unique names, n_rows >= 1 and sentinel
    // placement; throws ContractError otherwise.
    explicit Dataset(std::vector<Column> columns);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_columns() const { return columns_.size(); }
    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(std::size_t j) const { return columns_.at(j); }
    // Index of the named column, or nullopt.
    std::optional<std::size_t> find(std::string_view name) const;

    bool is_observed(std::size_t row, std::size_t col) const { return columns_[col].observed[row]; }
    double value(std::size_t row, std::size_t col) const { return columns_[col].values[row]; }

    std::size_t observed_count() const;
    std::size_t missing_count() const;

private:
    std::size_t n_rows_ = 0;
    std::vector<Column> columns_;
};

using CategoryMap = std::map<std::string, Category, std::less<>>;

const std::set<std::string, std::less<>>& default_na_tokens();

struct CsvOptions {
    std::set<std::string, std::less<>> na_tokens = default_na_tokens();
    std::optional<CategoryMap> schema;
};

// RFC-4180 style CSV with a mandatory header row. Cells whose trimmed text is
// empty or in na_tokens are missing; everything else must parse as a finite
// number.
Dataset parse_csv(std::istream& in, const CsvOptions& options = {});
Dataset parse_csv(const std::filesystem::path& path, const CsvOptions& options = {});

// Missing cells are written as `na_token`; observed values use the shortest
// representation that round-trips exactly.
void write_csv(std::ostream& out, const Dataset& d, std::string_view na_token = "NA");
void write_csv(const std::filesystem::path& path, const Dataset& d, std::string_view na_token = "NA");

// JSON object mapping variable name to category name.
CategoryMap load_schema(const std::filesystem::path& path);
CategoryMap parse_schema(std::string_view json_text);

struct MissingProfileRow {
    std::string name;
    Category category = Category::Other;
    double missing_proportion = 0.0;

    bool operator==(const MissingProfileRow&) const = default;
};

std::vector<MissingProfileRow> missing_profile(const Dataset& d);

}  // namespace missgraph
