#include "monospline/fit_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace monospline {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    std::string out = s.substr(b, e - b + 1);
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string where(std::size_t line, std::size_t column) {
    return "line " + std::to_string(line) + (column ? ", column " + std::to_string(column) : "") + ": ";
}

double to_double(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

CsvError::CsvError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(line ? where(line, column) + what : what), line_(line), column_(column) {}

Table read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    Table t;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (line_no == 0 || trim(line).empty()) throw CsvError("empty input, expected a header row", 0, 0);
    t.names = split(line);
    for (std::size_t c = 0; c < t.names.size(); ++c) {
        if (t.names[c].empty()) throw CsvError("empty column name", line_no, c + 1);
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.names.size()) {
            throw CsvError("expected " + std::to_string(t.names.size()) + " fields, found " +
                               std::to_string(cells.size()),
                           line_no, 0);
        }
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string& s = cells[c];
            const char* first = s.data();
            const char* last = s.data() + s.size();
            if (!s.empty() && *first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, row[c]);
            if (s.empty() || ec != std::errc() || ptr != last) {
                throw CsvError("non-numeric value '" + s + "'", line_no, c + 1);
            }
            if (!std::isfinite(row[c])) throw CsvError("non-finite value '" + s + "'", line_no, c + 1);
        }
        rows.push_back(std::move(row));
    }
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
        }
    }
    return t;
}

Table read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path + "'", 0, 0);
    return read_csv(in);
}

Dataset split_response(const Table& table, const std::optional<std::string>& response) {
    const auto cols = static_cast<Eigen::Index>(table.names.size());
    if (cols < 2) throw CsvError("need at least one covariate and a response column", 0, 0);
    Eigen::Index r = cols - 1;
    if (response) {
        const auto it = std::find(table.names.begin(), table.names.end(), *response);
        if (it == table.names.end()) throw CsvError("no column named '" + *response + "'", 1, 0);
        r = it - table.names.begin();
    }
    Dataset d;
    d.response = table.names[r];
    d.y = table.values.col(r);
    d.X.resize(table.values.rows(), cols - 1);
    for (Eigen::Index c = 0, out = 0; c < cols; ++c) {
        if (c == r) continue;
        d.covariates.push_back(table.names[c]);
        d.X.col(out++) = table.values.col(c);
    }
    return d;
}

Matrix select_covariates(const Table& table, const std::vector<std::string>& covariates) {
    Matrix X(table.values.rows(), static_cast<Eigen::Index>(covariates.size()));
    bool by_name = true;
    std::vector<Eigen::Index> idx;
    for (const auto& name : covariates) {
        const auto it = std::find(table.names.begin(), table.names.end(), name);
        if (it == table.names.end()) {
            by_name = false;
            break;
        }
        idx.push_back(it - table.names.begin());
    }
    if (by_name) {
        for (std::size_t c = 0; c < idx.size(); ++c) X.col(static_cast<Eigen::Index>(c)) = table.values.col(idx[c]);
        return X;
    }
    if (table.names.size() != covariates.size()) {
        throw CsvError("input has " + std::to_string(table.names.size()) + " columns but the fit expects " +
                           std::to_string(covariates.size()) + " covariates",
                       1, 0);
    }
    return table.values;
}

nlohmann::json fit_to_json(const FitResult& fit, const std::vector<std::string>& covariates,
                           const std::string& response) {
    const GroupLayout layout = fit.layout();
    nlohmann::json basis = {{"kind", to_string(fit.transform.basis.kind)}};
    if (fit.transform.basis.knots) {
        const auto& kv = *fit.transform.basis.knots;
        basis["order"] = kv.order();
        basis["interior_knots"] = kv.interior_count();
        basis["knots"] = std::vector<double>(kv.knots().begin(), kv.knots().end());
    }

    nlohmann::json groups = nlohmann::json::array();
    std::vector<std::string> support, incoherent;
    for (Eigen::Index j = 0; j < layout.count; ++j) {
        const Eigen::Index off = layout.begin(j);
        const bool selected = std::find(fit.support.begin(), fit.support.end(), j) != fit.support.end();
        const bool coherent = fit.sign_coherent.empty() || fit.sign_coherent[j];
        if (selected) support.push_back(covariates[j]);
        if (selected && !coherent) incoherent.push_back(covariates[j]);
        const Vector b = fit.beta.segment(off, layout.size);
        const Vector mu = fit.transform.column_means.segment(off, layout.size);
        const double w = fit.weights[j];
        groups.push_back({{"covariate", j + 1},
                          {"name", covariates[j]},
                          {"weight", std::isfinite(w) ? nlohmann::json(w) : nlohmann::json(nullptr)},
                          {"rescale", {{"min", fit.transform.rescale[j].min}, {"max", fit.transform.rescale[j].max}}},
                          {"column_means", std::vector<double>(mu.data(), mu.data() + mu.size())},
                          {"coefficients", std::vector<double>(b.data(), b.data() + b.size())},
                          {"selected", selected},
                          {"sign_coherent", coherent}});
    }

    nlohmann::json diag = {{"kkt_residual", fit.kkt_residual},
                           {"iterations", fit.iterations},
                           {"converged", fit.converged},
                           {"support", support},
                           {"incoherent", incoherent},
                           {"warnings", fit.warnings}};
    auto cv_json = [](const CVResult& c) {
        return nlohmann::json{{"folds", c.folds}, {"seed", c.seed}, {"lambda", c.lambda},
                              {"lambdas", c.lambdas}, {"cv", c.cv}};
    };
    if (fit.cv) diag["cv"] = cv_json(*fit.cv);
    if (fit.initial_cv) diag["initial_cv"] = cv_json(*fit.initial_cv);

    nlohmann::json j = {{"format", "monospline-fit"},
                        {"version", 1},
                        {"method", to_string(fit.method)},
                        {"penalty", to_string(fit.penalty)},
                        {"lambda", fit.lambda},
                        {"intercept", fit.intercept},
                        {"response", response},
                        {"basis", basis},
                        {"groups", groups},
                        {"diagnostics", diag}};
    j["initial_lambda"] = fit.initial_lambda ? nlohmann::json(*fit.initial_lambda) : nlohmann::json(nullptr);
    return j;
}

LoadedFit fit_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string()) != "monospline-fit") {
        throw std::invalid_argument("not a monospline fit file");
    }
    LoadedFit out;
    FitResult& f = out.fit;
    f.method = method_from_string(j.at("method").get<std::string>());
    f.penalty = penalty_kind_from_string(j.at("penalty").get<std::string>());
    f.lambda = j.at("lambda").get<double>();
    if (!j.at("initial_lambda").is_null()) f.initial_lambda = j.at("initial_lambda").get<double>();
    f.intercept = j.at("intercept").get<double>();
    out.response = j.value("response", std::string("y"));

    const auto& basis = j.at("basis");
    f.transform.basis.kind = basis_kind_from_string(basis.at("kind").get<std::string>());
    if (f.transform.basis.kind != BasisKind::identity) {
        f.transform.basis.knots = KnotVector(basis.at("order").get<int>(), basis.at("interior_knots").get<int>(),
                                             basis.at("knots").get<std::vector<double>>());
    }
    const int m = f.transform.basis.size();
    const auto& groups = j.at("groups");
    const auto P = static_cast<Eigen::Index>(groups.size());
    f.beta.resize(P * m);
    f.transform.column_means.resize(P * m);
    for (Eigen::Index g = 0; g < P; ++g) {
        const auto& gj = groups[static_cast<std::size_t>(g)];
        out.covariates.push_back(gj.at("name").get<std::string>());
        f.transform.rescale.push_back({gj.at("rescale").at("min").get<double>(), gj.at("rescale").at("max").get<double>()});
        f.weights.push_back(to_double(gj.at("weight")));
        const auto b = gj.at("coefficients").get<std::vector<double>>();
        const auto mu = gj.at("column_means").get<std::vector<double>>();
        if (static_cast<int>(b.size()) != m || static_cast<int>(mu.size()) != m) {
            throw std::invalid_argument("group " + std::to_string(g + 1) + " has the wrong number of coefficients");
        }
        for (int k = 0; k < m; ++k) {
            f.beta[g * m + k] = b[k];
            f.transform.column_means[g * m + k] = mu[k];
        }
    }
    f.support = support_of(f.beta, f.layout());
    f.sign_coherent = sign_coherence_check(f.beta, f.layout());
    const auto& diag = j.at("diagnostics");
    f.kkt_residual = diag.value("kkt_residual", 0.0);
    f.iterations = diag.value("iterations", 0);
    f.converged = diag.value("converged", true);
    f.warnings = diag.value("warnings", std::vector<std::string>{});
    return out;
}

void write_curves(std::ostream& out, const FitResult& fit, const std::vector<std::string>& covariates,
                  int points) {
    out << "component\tx\tx_raw\tvalue\n";
    out << "intercept\tNA\tNA\t" << fmt_g(fit.intercept) << "\n";
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) grid[i] = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
    for (Eigen::Index j : fit.support) {
        const Vector curve = component_curve(fit, j, grid);
        const RescaleParams& rp = fit.transform.rescale[j];
        for (int i = 0; i < points; ++i) {
            out << covariates[j] << '\t' << fmt_g(grid[i]) << '\t' << fmt_g(rp.min + grid[i] * (rp.max - rp.min))
                << '\t' << fmt_g(curve[i]) << '\n';
        }
    }
}

}  // namespace monospline
