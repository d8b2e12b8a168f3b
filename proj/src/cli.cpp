#include "monospline/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "monospline/fit_io.hpp"
#include "monospline/simulation.hpp"

namespace monospline {

namespace {

struct Args {
    std::string input;
    std::optional<std::string> response;
    std::string method = "ms";
    int knots = 6;
    int order = 2;
    int bspline_order = 3;
    int folds = 10;
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda;
    std::optional<double> initial_lambda;
    int grid_size = 100;
    double grid_ratio = 1e-3;
    int jobs = 1;
    std::string output;
    std::string curves;
    std::string fit_file;
    std::string config;
    std::string table;
    std::string kind = "ispline";
    std::optional<int> replications;
    bool lambda_max_only = false;
    bool centered = false;
    bool quiet = false;
};

std::uint64_t resolve_seed(const Args& a) {
    if (a.seed) return *a.seed;
    if (const char* env = std::getenv("MONOSPLINE_SEED")) {
        try {
            std::size_t pos = 0;
            const unsigned long long v = std::stoull(env, &pos);
            if (pos == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw std::invalid_argument(std::string("MONOSPLINE_SEED is not an unsigned integer: '") + env + "'");
    }
    return 1;
}

FitOptions fit_options(const Args& a) {
    FitOptions o;
    o.knots = a.knots;
    o.ispline_order = a.order;
    o.bspline_order = a.bspline_order;
    o.lambda = a.lambda;
    o.initial_lambda = a.initial_lambda;
    o.cv.folds = a.folds;
    o.cv.grid_size = a.grid_size;
    o.cv.grid_ratio = a.grid_ratio;
    o.cv.seed = resolve_seed(a);
    return o;
}

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f.precision(17);
    return f;
}

std::string default_curves_path(const std::string& fit_path) {
    const auto dot = fit_path.rfind('.');
    const auto slash = fit_path.rfind('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return (has_ext ? fit_path.substr(0, dot) : fit_path) + ".curves.tsv";
}

void report_fit(std::ostream& out, const FitResult& f, const std::vector<std::string>& names) {
    out << "method: " << display_name(f.method) << "\n";
    if (f.initial_lambda) out << "initial lambda: " << fmt_g(*f.initial_lambda) << "\n";
    out << "lambda: " << fmt_g(f.lambda) << "\n";
    out << "selected (" << f.support.size() << "):";
    for (Eigen::Index j : f.support) out << ' ' << names[j];
    out << "\n";
    for (Eigen::Index j : f.support) {
        if (is_monotone(f.method) && !f.sign_coherent[j]) out << "sign-incoherent: " << names[j] << "\n";
    }
    out << "kkt residual: " << fmt_g(f.kkt_residual) << "\n";
}

int cmd_fit(const Args& a, std::ostream& out, std::ostream& err) {
    const Dataset d = split_response(read_csv_file(a.input), a.response);
    const Method method = method_from_string(a.method);
    const FitOptions opts = fit_options(a);

    if (a.lambda_max_only) {
        const DesignMatrix design = build_design(d.X, basis_for(method, opts));
        const CenteredResponse yc = center_response(d.y);
        const PenaltyKind kind = method == Method::bs ? PenaltyKind::group
                                 : (method == Method::lasso || method == Method::alasso) ? PenaltyKind::l1
                                                                                          : PenaltyKind::coop;
        out << fmt_g(lambda_max(design.Z, yc.y, design.layout(), kind, unit_weights(d.X.cols()))) << "\n";
        return exit_ok;
    }

    const FitResult f = fit(method, d.X, d.y, opts);
    const std::string fit_path = a.output.empty() ? "fit.json" : a.output;
    open_out(fit_path) << fit_to_json(f, d.covariates, d.response).dump(2) << "\n";
    const std::string curves_path = a.curves.empty() ? default_curves_path(fit_path) : a.curves;
    {
        std::ofstream c = open_out(curves_path);
        write_curves(c, f, d.covariates);
    }
    if (!a.quiet) report_fit(out, f, d.covariates);
    for (const auto& w : f.warnings) err << "warning: " << w << "\n";
    return f.converged ? exit_ok : exit_not_converged;
}

int cmd_predict(const Args& a, std::ostream& out) {
    std::ifstream in(a.fit_file);
    if (!in) throw std::runtime_error("cannot open '" + a.fit_file + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("'" + a.fit_file + "' is not valid JSON: " + e.what());
    }
    const LoadedFit lf = fit_from_json(j);
    Table t = read_csv_file(a.input);
    // A response column with the stored name is ignored.
    std::vector<std::string> names = lf.covariates;
    const Matrix X = select_covariates(t, names);
    const Vector yhat = predict(lf.fit, X);

    auto write = [&](std::ostream& os) {
        os << lf.response << "_hat\n";
        for (Eigen::Index i = 0; i < yhat.size(); ++i) os << fmt_g(yhat[i]) << "\n";
    };
    if (a.output.empty()) {
        write(out);
    } else {
        std::ofstream f = open_out(a.output);
        write(f);
    }
    return exit_ok;
}

int cmd_cv(const Args& a, std::ostream& out) {
    const Dataset d = split_response(read_csv_file(a.input), a.response);
    const Method method = method_from_string(a.method);
    FitOptions opts = fit_options(a);
    opts.lambda.reset();
    const FitResult f = fit(method, d.X, d.y, opts);

    auto write = [&](std::ostream& os) {
        os << "stage\tlambda\tcv\n";
        auto rows = [&](const char* stage, const CVResult& c) {
            for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
                os << stage << '\t' << fmt_g(c.lambdas[i]) << '\t' << fmt_g(c.cv[i]) << '\n';
            }
        };
        if (f.initial_cv) rows("initial", *f.initial_cv);
        if (f.cv) rows("final", *f.cv);
    };
    if (a.output.empty()) {
        write(out);
    } else {
        std::ofstream o = open_out(a.output);
        write(o);
    }
    if (f.initial_cv) out << "initial lambda: " << fmt_g(f.initial_cv->lambda) << "\n";
    out << "lambda: " << fmt_g(f.lambda) << "\n";
    const bool converged = f.converged && (!f.cv || f.cv->converged) && (!f.initial_cv || f.initial_cv->converged);
    return converged ? exit_ok : exit_not_converged;
}

int cmd_simulate(const Args& a, std::ostream& out, const CLI::App& sub) {
    SimConfig cfg;
    if (!a.config.empty()) {
        std::ifstream in(a.config);
        if (!in) throw std::runtime_error("cannot open '" + a.config + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("'" + a.config + "' is not valid JSON: " + e.what());
        }
        cfg = sim_config_from_json(j);
    }
    if (a.seed || std::getenv("MONOSPLINE_SEED")) {
        if (a.config.empty() || a.seed) cfg.seed = resolve_seed(a);
    }
    if (a.replications) cfg.replications = *a.replications;
    if (sub.count("--method")) cfg.methods = {method_from_string(a.method)};
    cfg.validate();

    const SimReport report = run_experiment(cfg, a.jobs);
    const std::string text = format_table(report);
    if (!a.output.empty()) open_out(a.output) << to_json(report).dump(2) << "\n";
    if (!a.table.empty()) open_out(a.table) << text;
    if (!a.quiet) out << text;

    bool converged = true;
    for (const auto& r : report.records) converged = converged && r.ok && r.converged;
    return converged ? exit_ok : exit_not_converged;
}

int cmd_basis(const Args& a, std::ostream& out) {
    const Table t = read_csv_file(a.input);
    const BasisKind kind = basis_kind_from_string(a.kind);
    const BasisSpec spec = kind == BasisKind::ispline   ? BasisSpec::ispline(a.knots, a.order)
                           : kind == BasisKind::bspline ? BasisSpec::bspline(a.knots, a.order)
                                                        : BasisSpec::identity();
    const DesignMatrix d = build_design(t.values, spec);
    const GroupLayout layout = d.layout();
    Matrix Z = d.Z;
    if (!a.centered) {
        for (Eigen::Index c = 0; c < Z.cols(); ++c) Z.col(c).array() += d.transform.column_means[c];
    }

    auto write = [&](std::ostream& os) {
        for (Eigen::Index j = 0; j < layout.count; ++j) {
            for (Eigen::Index k = 0; k < layout.size; ++k) {
                os << (j || k ? "\t" : "") << t.names[j] << '_' << (k + 1);
            }
        }
        os << '\n';
        for (Eigen::Index i = 0; i < Z.rows(); ++i) {
            for (Eigen::Index c = 0; c < Z.cols(); ++c) os << (c ? "\t" : "") << fmt_g(Z(i, c));
            os << '\n';
        }
    };
    if (a.output.empty()) {
        write(out);
    } else {
        std::ofstream o = open_out(a.output);
        write(o);
    }
    return exit_ok;
}

void add_data_flags(CLI::App* s, Args& a) {
    s->add_option("--input", a.input, "CSV with a header row")->required();
    s->add_option("--response", a.response, "response column (default: last)");
}

void add_model_flags(CLI::App* s, Args& a) {
    s->add_option("--method", a.method, "ms|ams|lasso|alasso|bs")->capture_default_str();
    s->add_option("--knots", a.knots, "interior knots")->capture_default_str();
    s->add_option("--order", a.order, "I-spline order")->capture_default_str();
    s->add_option("--bspline-order", a.bspline_order, "B-spline order for bs")->capture_default_str();
    s->add_option("--folds", a.folds, "CV folds")->capture_default_str();
    s->add_option("--seed", a.seed, "fold seed (fallback: MONOSPLINE_SEED, then 1)");
    s->add_option("--grid-size", a.grid_size, "lambda grid size")->capture_default_str();
    s->add_option("--grid-ratio", a.grid_ratio, "smallest / largest lambda")->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Args a;
    CLI::App app{"Sparse monotone additive regression"};
    app.name("monospline");
    app.require_subcommand(1);

    auto* fit_cmd = app.add_subcommand("fit", "fit a model and write a fit file plus component curves");
    add_data_flags(fit_cmd, a);
    add_model_flags(fit_cmd, a);
    fit_cmd->add_option("--lambda", a.lambda, "final-stage lambda (skips CV)");
    fit_cmd->add_option("--initial-lambda", a.initial_lambda, "first-stage lambda of adaptive methods");
    fit_cmd->add_option("--output", a.output, "fit file (default fit.json)");
    fit_cmd->add_option("--curves", a.curves, "curve TSV (default <output>.curves.tsv)");
    fit_cmd->add_flag("--lambda-max-only", a.lambda_max_only, "print the smallest lambda giving the null fit");
    fit_cmd->add_flag("--quiet", a.quiet);

    auto* predict_cmd = app.add_subcommand("predict", "predict from a fit file");
    predict_cmd->add_option("--fit", a.fit_file, "fit file")->required();
    predict_cmd->add_option("--input", a.input, "CSV with the fitted covariates")->required();
    predict_cmd->add_option("--output", a.output, "prediction CSV (default stdout)");

    auto* cv_cmd = app.add_subcommand("cv", "cross-validation curve");
    add_data_flags(cv_cmd, a);
    add_model_flags(cv_cmd, a);
    cv_cmd->add_option("--initial-lambda", a.initial_lambda, "first-stage lambda of adaptive methods");
    cv_cmd->add_option("--output", a.output, "curve TSV (default stdout)");

    auto* sim_cmd = app.add_subcommand("simulate", "run a simulation experiment");
    sim_cmd->add_option("--config", a.config, "JSON experiment config");
    sim_cmd->add_option("--jobs", a.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", a.seed, "root seed");
    sim_cmd->add_option("--replications", a.replications, "override the replication count");
    sim_cmd->add_option("--method", a.method, "run a single method");
    sim_cmd->add_option("--output", a.output, "report JSON");
    sim_cmd->add_option("--table", a.table, "table text file");
    sim_cmd->add_flag("--quiet", a.quiet);

    auto* basis_cmd = app.add_subcommand("basis", "dump a basis matrix as TSV");
    basis_cmd->add_option("--input", a.input, "CSV of covariates")->required();
    basis_cmd->add_option("--kind", a.kind, "ispline|bspline|identity")->capture_default_str();
    basis_cmd->add_option("--knots", a.knots, "interior knots")->capture_default_str();
    basis_cmd->add_option("--order", a.order, "spline order")->capture_default_str();
    basis_cmd->add_flag("--centered", a.centered, "subtract column means");
    basis_cmd->add_option("--output", a.output, "TSV (default stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_input_error;
    }

    try {
        if (*fit_cmd) return cmd_fit(a, out, err);
        if (*predict_cmd) return cmd_predict(a, out);
        if (*cv_cmd) return cmd_cv(a, out);
        if (*sim_cmd) return cmd_simulate(a, out, *sim_cmd);
        if (*basis_cmd) return cmd_basis(a, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_input_error;
    }
    return exit_input_error;
}

}  // namespace monospline
