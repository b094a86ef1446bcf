#include "missgraph/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "missgraph/error.hpp"

namespace missgraph {

namespace {

struct CategoryName {
    Category category;
    std::string_view id;
    std::string_view display;
};

constexpr std::array<CategoryName, 6> kCategoryNames{{
    {Category::VitalPhysiology, "VitalPhysiology", "Vital Physiology"},
    {Category::BloodTests, "BloodTests", "Blood Tests"},
    {Category::Demographics, "Demographics", "Demographics"},
    {Category::Mortality, "Mortality", "Mortality"},
    {Category::IcuManagement, "IcuManagement", "ICU Management"},
    {Category::Other, "Other", "Other"},
}};

std::string fold(std::string_view s) {
    std::string out;
    for (char ch : s) {
        if (ch == ' ' || ch == '_' || ch == '-') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

// Reads one RFC-4180 record. Returns false at end of input.
bool read_record(std::istream& in, Record& rec, std::size_t& line) {
    rec.fields.clear();
    rec.line = line + 1;
    int c = in.get();
    if (c == std::char_traits<char>::eof()) return false;

    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    for (;; c = in.get()) {
        if (c == std::char_traits<char>::eof()) {
            if (quoted) throw ParseError("unterminated quoted field starting on line " + std::to_string(rec.line));
            rec.fields.push_back(std::move(field));
            ++line;
            return true;
        }
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && !field_was_quoted && trim(field).empty()) {
            quoted = true;
            field_was_quoted = true;
            field.clear();
        } else if (ch == ',') {
            rec.fields.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
        } else if (ch == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            rec.fields.push_back(std::move(field));
            ++line;
            return true;
        } else {
            field.push_back(ch);
        }
    }
}

std::optional<double> parse_number(std::string_view text) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

bool needs_quoting(std::string_view s) {
    return s.find_first_of(",\"\r\n") != std::string_view::npos || trim(s).size() != s.size();
}

void write_field(std::ostream& out, std::string_view s) {
    if (!needs_quoting(s)) {
        out << s;
        return;
    }
    out << '"';
    for (char ch : s) {
        if (ch == '"') out << '"';
        out << ch;
    }
    out << '"';
}

}  // namespace

std::string_view to_string(Category c) {
    for (const auto& n : kCategoryNames)
        if (n.category == c) return n.display;
    return "Other";
}

std::string_view to_string(VariableKind k) {
    return k == VariableKind::Observation ? "observation" : "completeness";
}

std::optional<Category> parse_category(std::string_view text) {
    const std::string key = fold(text);
    for (const auto& n : kCategoryNames)
        if (fold(n.id) == key || fold(n.display) == key) return n.category;
    return std::nullopt;
}

std::optional<VariableKind> parse_kind(std::string_view text) {
    const std::string key = fold(text);
    if (key == "observation") return VariableKind::Observation;
    if (key == "completeness") return VariableKind::Completeness;
    return std::nullopt;
}

std::size_t Column::missing_count() const {
    return static_cast<std::size_t>(std::count(observed.begin(), observed.end(), false));
}

Dataset::Dataset(std::vector<Column> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) throw ContractError("dataset has no columns");
    n_rows_ = columns_.front().values.size();
    if (n_rows_ == 0) throw ContractError("dataset has no rows");
    std::set<std::string_view> names;
    for (auto& col : columns_) {
        if (col.values.size() != n_rows_ || col.observed.size() != n_rows_)
            throw ContractError("column '" + col.meta.name + "' has length " + std::to_string(col.values.size()) +
                                ", expected " + std::to_string(n_rows_));
        if (!names.insert(col.meta.name).second)
            throw SchemaError("duplicate variable name '" + col.meta.name + "'");
        for (std::size_t i = 0; i < n_rows_; ++i) {
            if (!col.observed[i]) {
                col.values[i] = std::numeric_limits<double>::quiet_NaN();
            } else if (!std::isfinite(col.values[i])) {
                throw ContractError("column '" + col.meta.name + "' holds a non-finite observed value at row " +
                                    std::to_string(i));
            }
        }
    }
}

std::optional<std::size_t> Dataset::find(std::string_view name) const {
    for (std::size_t j = 0; j < columns_.size(); ++j)
        if (columns_[j].meta.name == name) return j;
    return std::nullopt;
}

std::size_t Dataset::missing_count() const {
    std::size_t total = 0;
    for (const auto& c : columns_) total += c.missing_count();
    return total;
}

std::size_t Dataset::observed_count() const {
    return n_rows_ * columns_.size() - missing_count();
}

const std::set<std::string, std::less<>>& default_na_tokens() {
    static const std::set<std::string, std::less<>> tokens{"", "NA", "NaN", "null"};
    return tokens;
}

Dataset parse_csv(std::istream& in, const CsvOptions& options) {
    if (in.peek() == 0xEF) {
        char bom[3];
        in.read(bom, 3);
        if (!(static_cast<unsigned char>(bom[1]) == 0xBB && static_cast<unsigned char>(bom[2]) == 0xBF))
            throw ParseError("invalid byte sequence at start of input");
    }

    std::size_t line = 0;
    Record rec;
    if (!read_record(in, rec, line)) throw ParseError("input is empty; a header row is required");

    std::vector<Column> columns(rec.fields.size());
    std::set<std::string, std::less<>> seen;
    for (std::size_t j = 0; j < rec.fields.size(); ++j) {
        std::string name(trim(rec.fields[j]));
        if (name.empty()) throw SchemaError("header column " + std::to_string(j + 1) + " has an empty name");
        if (!seen.insert(name).second) throw SchemaError("duplicate header '" + name + "'");
        columns[j].meta.name = name;
        if (options.schema) {
            if (auto it = options.schema->find(name); it != options.schema->end()) columns[j].meta.category = it->second;
        }
    }

    std::size_t row = 0;
    while (read_record(in, rec, line)) {
        // A trailing blank line is the terminator of the final record, not data.
        if (rec.fields.size() == 1 && rec.fields[0].empty() && in.peek() == std::char_traits<char>::eof() &&
            columns.size() > 1)
            break;
        ++row;
        if (rec.fields.size() != columns.size())
            throw ParseError("row " + std::to_string(row) + " (line " + std::to_string(rec.line) + ") has " +
                             std::to_string(rec.fields.size()) + " fields, expected " +
                             std::to_string(columns.size()));
        for (std::size_t j = 0; j < columns.size(); ++j) {
            const std::string_view cell = trim(rec.fields[j]);
            if (cell.empty() || options.na_tokens.contains(cell)) {
                columns[j].values.push_back(std::numeric_limits<double>::quiet_NaN());
                columns[j].observed.push_back(false);
                continue;
            }
            const auto v = parse_number(cell);
            if (!v)
                throw ParseError("non-numeric cell '" + std::string(cell) + "' at row " + std::to_string(row) +
                                 ", column '" + columns[j].meta.name + "'");
            columns[j].values.push_back(*v);
            columns[j].observed.push_back(true);
        }
    }
    if (row == 0) throw ParseError("input has a header but no data rows");
    return Dataset(std::move(columns));
}

Dataset parse_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    return parse_csv(in, options);
}

void write_csv(std::ostream& out, const Dataset& d, std::string_view na_token) {
    for (std::size_t j = 0; j < d.n_columns(); ++j) {
        if (j) out << ',';
        write_field(out, d.column(j).meta.name);
    }
    out << '\n';
    std::array<char, 64> buf{};
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        for (std::size_t j = 0; j < d.n_columns(); ++j) {
            if (j) out << ',';
            if (!d.is_observed(i, j)) {
                write_field(out, na_token);
                continue;
            }
            const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d.value(i, j));
            out.write(buf.data(), ptr - buf.data());
        }
        out << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const Dataset& d, std::string_view na_token) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    write_csv(out, d, na_token);
}

CategoryMap parse_schema(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("schema is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("schema must be a JSON object mapping variable name to category");
    CategoryMap out;
    for (const auto& [name, value] : j.items()) {
        if (!value.is_string()) throw SchemaError("schema entry '" + name + "' is not a string");
        const auto cat = parse_category(value.get<std::string>());
        if (!cat) throw SchemaError("schema entry '" + name + "' has unknown category '" + value.get<std::string>() + "'");
        out.emplace(name, *cat);
    }
    return out;
}

CategoryMap load_schema(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open schema '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_schema(ss.str());
}

std::vector<MissingProfileRow> missing_profile(const Dataset& d) {
    std::vector<MissingProfileRow> rows;
    rows.reserve(d.n_columns());
    for (const auto& col : d.columns())
        rows.push_back({col.meta.name, col.meta.category,
                        static_cast<double>(col.missing_count()) / static_cast<double>(d.n_rows())});
    return rows;
}

}  // namespace missgraph
