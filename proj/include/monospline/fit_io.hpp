#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "monospline/estimators.hpp"

namespace monospline {

// Malformed input, with a 1-based location (0 when not applicable).
class CsvError : public std::runtime_error {
public:
    CsvError(const std::string& what, std::size_t line, std::size_t column);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

struct Table {
    std::vector<std::string> names;
    Matrix values;
};

// Header row required; '.' decimal separator regardless of locale.
Table read_csv(std::istream& in);
Table read_csv_file(const std::string& path);

struct Dataset {
    std::vector<std::string> covariates;
    std::string response;
    Matrix X;
    Vector y;
};

// Splits off the response column: the named one, or the last column.
Dataset split_response(const Table& table, const std::optional<std::string>& response = std::nullopt);

// Selects the named covariates from a table (in order). Falls back to
// positional use when the table has exactly that many columns and the names
// differ. Throws CsvError on mismatch.
Matrix select_covariates(const Table& table, const std::vector<std::string>& covariates);

nlohmann::json fit_to_json(const FitResult& fit, const std::vector<std::string>& covariates,
                           const std::string& response);

struct LoadedFit {
    FitResult fit;
    std::vector<std::string> covariates;
    std::string response;
};

LoadedFit fit_from_json(const nlohmann::json& j);

// Intercept record followed by `points` equispaced values per selected
// covariate. Columns: component, x (unit scale), x_raw, value.
void write_curves(std::ostream& out, const FitResult& fit, const std::vector<std::string>& covariates,
                  int points = 201);

}  // namespace monospline
