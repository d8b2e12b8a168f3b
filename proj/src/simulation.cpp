#include "monospline/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace monospline {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kDataStream = 0;
constexpr std::uint64_t kFoldStream = 1;
constexpr std::uint64_t kCalibrationStream = 2;
constexpr std::uint64_t kCalibrationIndex = std::numeric_limits<std::uint64_t>::max();

constexpr double kLinearCoefficients[4] = {-2.0, -2.0, 2.0, 2.0};

const char* component_label(ModelId model, int k) {
    static const char* a[] = {"g1", "g2", "g3", "g4a"};
    static const char* b[] = {"g1", "g2", "g3", "g4b"};
    static const char* lin[] = {"g1", "g2", "g3", "g4"};
    switch (model) {
        case ModelId::A: return a[k];
        case ModelId::B: return b[k];
        case ModelId::linear: return lin[k];
    }
    return "?";
}

std::string fmt(const char* f, double a, double b) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

}  // namespace

const char* to_string(ModelId model) {
    switch (model) {
        case ModelId::A: return "A";
        case ModelId::B: return "B";
        case ModelId::linear: return "linear";
    }
    return "?";
}

ModelId model_from_string(const std::string& name) {
    if (name == "A" || name == "a") return ModelId::A;
    if (name == "B" || name == "b") return ModelId::B;
    if (name == "linear") return ModelId::linear;
    throw std::invalid_argument("unknown model '" + name + "' (expected A|B|linear)");
}

double true_component(Component id, double x) {
    switch (id) {
        case Component::g1: return -std::exp(x * x);
        case Component::g2: return -std::log(x + 0.1);
        case Component::g3: return 2.0 * std::tanh(20.0 * x * x) + 0.5 * std::exp(x * x * x);
        case Component::g4a: {
            const double e = std::exp(10.0 * x - 5.0);
            return 2.0 * e / (1.0 + e);
        }
        case Component::g4b: return 2.0 * x;
    }
    return 0.0;
}

void SimConfig::validate() const {
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    if (active.size() != 4) throw std::invalid_argument("the simulation models have four active components");
    if (P < static_cast<int>(active.size())) throw std::invalid_argument("P must be >= |A|");
    std::set<int> seen(active.begin(), active.end());
    if (seen.size() != active.size()) throw std::invalid_argument("active covariates must be distinct");
    for (int a : active) {
        if (a < 0 || a >= P) throw std::invalid_argument("active covariate outside [1, P]");
    }
    if (!(t_dep >= 0.0)) throw std::invalid_argument("t must be >= 0");
    if (!(snr > 0.0)) throw std::invalid_argument("SNR must be > 0");
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
    if (methods.empty()) throw std::invalid_argument("no methods configured");
    if (folds < 2 || folds > n) throw std::invalid_argument("folds must be in [2, n]");
    if (calibration_draws < 2) throw std::invalid_argument("calibration_draws must be >= 2");
}

FitOptions SimConfig::fit_options(std::uint64_t cv_seed) const {
    FitOptions o;
    o.knots = knots;
    o.ispline_order = ispline_order;
    o.bspline_order = bspline_order;
    o.cv.folds = folds;
    o.cv.grid_size = grid_size;
    o.cv.grid_ratio = grid_ratio;
    o.cv.seed = cv_seed;
    return o;
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
    SimConfig c;
    c.n = j.value("n", c.n);
    c.P = j.value("P", c.P);
    c.t_dep = j.value("t", c.t_dep);
    c.snr = j.value("snr", c.snr);
    if (j.contains("model")) c.model = model_from_string(j.at("model").get<std::string>());
    if (j.contains("active")) {
        c.active.clear();
        for (int a : j.at("active").get<std::vector<int>>()) c.active.push_back(a - 1);
    }
    c.replications = j.value("replications", c.replications);
    c.seed = j.value("seed", c.seed);
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods").get<std::vector<std::string>>()) c.methods.push_back(method_from_string(m));
    }
    c.knots = j.value("knots", c.knots);
    c.ispline_order = j.value("order", c.ispline_order);
    c.bspline_order = j.value("bspline_order", c.bspline_order);
    c.folds = j.value("folds", c.folds);
    c.grid_size = j.value("grid_size", c.grid_size);
    c.grid_ratio = j.value("grid_ratio", c.grid_ratio);
    c.calibration_draws = j.value("calibration_draws", c.calibration_draws);
    c.validate();
    return c;
}

nlohmann::json to_json(const SimConfig& c) {
    std::vector<int> active;
    for (int a : c.active) active.push_back(a + 1);
    std::vector<std::string> methods;
    for (Method m : c.methods) methods.emplace_back(to_string(m));
    return {{"n", c.n},
            {"P", c.P},
            {"t", c.t_dep},
            {"snr", c.snr},
            {"model", to_string(c.model)},
            {"active", active},
            {"replications", c.replications},
            {"seed", c.seed},
            {"methods", methods},
            {"knots", c.knots},
            {"order", c.ispline_order},
            {"bspline_order", c.bspline_order},
            {"folds", c.folds},
            {"grid_size", c.grid_size},
            {"grid_ratio", c.grid_ratio},
            {"calibration_draws", c.calibration_draws}};
}

double sample_truncnorm01(Rng& rng) {
    static const double lo = normal_cdf(0.0);
    static const double hi = normal_cdf(1.0);
    const double u = lo + (hi - lo) * rng.uniform_open();
    return std::clamp(normal_quantile(u), 0.0, 1.0);
}

std::vector<double> sample_truncnorm01(std::size_t count, Rng& rng) {
    std::vector<double> out(count);
    for (double& v : out) v = sample_truncnorm01(rng);
    return out;
}

Matrix gen_covariates(const SimConfig& cfg, Rng& rng) {
    Matrix X(cfg.n, cfg.P);
    for (int i = 0; i < cfg.n; ++i) {
        for (int j = 0; j < cfg.P; ++j) X(i, j) = sample_truncnorm01(rng);
    }
    if (cfg.t_dep == 0.0) return X;

    std::vector<char> is_active(static_cast<std::size_t>(cfg.P), 0);
    for (int a : cfg.active) is_active[a] = 1;
    const double t = cfg.t_dep;
    for (int i = 0; i < cfg.n; ++i) {
        const double u = sample_truncnorm01(rng);
        const double v = sample_truncnorm01(rng);
        for (int j = 0; j < cfg.P; ++j) X(i, j) = (X(i, j) + t * (is_active[j] ? u : v)) / (1.0 + t);
    }
    return X;
}

double model_component(ModelId model, int k, double x) {
    if (model == ModelId::linear) return kLinearCoefficients[k] * x;
    static const Component a[] = {Component::g1, Component::g2, Component::g3, Component::g4a};
    if (model == ModelId::B && k == 3) return true_component(Component::g4b, x);
    return true_component(a[k], x);
}

Vector signal(const Matrix& X, const SimConfig& cfg) {
    Vector s = Vector::Zero(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (int k = 0; k < 4; ++k) s[i] += model_component(cfg.model, k, X(i, cfg.active[k]));
    }
    return s;
}

double calibrate_sigma(const SimConfig& cfg, Rng& rng) {
    if (std::isinf(cfg.snr)) return 0.0;
    const double t = cfg.t_dep;
    std::vector<double> draws(static_cast<std::size_t>(cfg.calibration_draws));
    for (double& s : draws) {
        double w[4];
        for (double& wk : w) wk = sample_truncnorm01(rng);
        const double u = t == 0.0 ? 0.0 : sample_truncnorm01(rng);
        s = 0.0;
        for (int k = 0; k < 4; ++k) s += model_component(cfg.model, k, (w[k] + t * u) / (1.0 + t));
    }
    double mean = 0.0;
    for (double s : draws) mean += s;
    mean /= static_cast<double>(draws.size());
    double var = 0.0;
    for (double s : draws) var += (s - mean) * (s - mean);
    var /= static_cast<double>(draws.size() - 1);
    return std::sqrt(var / cfg.snr);
}

Vector gen_response(const Matrix& X, const SimConfig& cfg, double sigma, Rng& rng) {
    Vector y = signal(X, cfg);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * rng.normal();
    return y;
}

std::pair<int, int> tp_fp(const std::vector<Eigen::Index>& support, const std::vector<int>& active) {
    int tp = 0;
    for (Eigen::Index s : support) {
        if (std::find(active.begin(), active.end(), static_cast<int>(s)) != active.end()) ++tp;
    }
    return {tp, static_cast<int>(support.size()) - tp};
}

double component_mse(const FitResult& fit, Eigen::Index j, const Matrix& X, ModelId model, int k) {
    const Eigen::Index n = X.rows();
    std::vector<double> unit(static_cast<std::size_t>(n));
    Vector truth(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        unit[i] = fit.transform.rescale[j].apply(X(i, j));
        truth[i] = model_component(model, k, X(i, j));
    }
    Vector fitted = component_curve(fit, j, unit);
    fitted.array() -= fitted.mean();
    truth.array() -= truth.mean();
    return (fitted - truth).squaredNorm() / static_cast<double>(n);
}

int monotonicity_violations(const FitResult& fit, int grid_points) {
    if (!is_monotone(fit.method)) return 0;
    std::vector<double> grid(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) grid[i] = static_cast<double>(i) / (grid_points - 1);
    const GroupLayout layout = fit.layout();
    int violations = 0;
    for (Eigen::Index j : fit.support) {
        if (!fit.sign_coherent[j]) continue;
        const Vector b = fit.beta.segment(layout.begin(j), layout.size);
        const double direction = b.sum() >= 0.0 ? 1.0 : -1.0;
        const Vector curve = component_curve(fit, j, grid);
        const double tol = 1e-12 * std::max(1.0, curve.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 1; i < curve.size(); ++i) {
            if (direction * (curve[i] - curve[i - 1]) < -tol) {
                ++violations;
                break;
            }
        }
    }
    return violations;
}

std::vector<ReplicationRecord> run_replication(const SimConfig& cfg, double sigma, int replication) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(replication), kDataStream));
    const Matrix X = gen_covariates(cfg, rng);
    const Vector y = gen_response(X, cfg, sigma, rng);
    const FitOptions opts =
        cfg.fit_options(derive_seed(cfg.seed, static_cast<std::uint64_t>(replication), kFoldStream));

    std::vector<ReplicationRecord> out;
    for (Method method : cfg.methods) {
        ReplicationRecord r;
        r.replication = replication;
        r.method = method;
        try {
            const FitResult f = fit(method, X, y, opts);
            for (Eigen::Index s : f.support) r.support.push_back(static_cast<int>(s));
            for (Eigen::Index s : f.initial_support) r.initial_support.push_back(static_cast<int>(s));
            std::tie(r.tp, r.fp) = tp_fp(f.support, cfg.active);
            for (int k = 0; k < 4; ++k) {
                const int j = cfg.active[k];
                r.selected.push_back(std::find(r.support.begin(), r.support.end(), j) != r.support.end());
                r.mse.push_back(component_mse(f, j, X, cfg.model, k));
            }
            r.lambda = f.lambda;
            r.initial_lambda = f.initial_lambda.value_or(0.0);
            if (is_monotone(method)) {
                for (Eigen::Index s : f.support) {
                    if (!f.sign_coherent[s]) r.incoherent.push_back(static_cast<int>(s));
                }
            }
            r.monotone_violations = monotonicity_violations(f);
            r.converged = f.converged;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

Stat summarize(const std::vector<double>& values) {
    Stat s;
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::vector<MethodSummary> aggregate(const SimConfig& cfg, const std::vector<ReplicationRecord>& records) {
    std::vector<MethodSummary> out;
    for (Method method : cfg.methods) {
        MethodSummary s;
        s.method = method;
        std::vector<std::vector<double>> sel(4), mse(4);
        std::vector<double> tp, fp;
        for (const auto& r : records) {
            if (r.method != method) continue;
            if (!r.ok) {
                ++s.failed;
                continue;
            }
            ++s.completed;
            tp.push_back(r.tp);
            fp.push_back(r.fp);
            for (int k = 0; k < 4; ++k) {
                sel[k].push_back(r.selected[k]);
                mse[k].push_back(r.mse[k]);
            }
        }
        for (int k = 0; k < 4; ++k) {
            s.selection.push_back(summarize(sel[k]));
            s.mse.push_back(summarize(mse[k]));
        }
        s.tp = summarize(tp);
        s.fp = summarize(fp);
        out.push_back(std::move(s));
    }
    return out;
}

bool SimReport::complete() const {
    return std::all_of(records.begin(), records.end(), [](const ReplicationRecord& r) { return r.ok; });
}

SimReport run_experiment(const SimConfig& cfg, int jobs) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    SimReport report;
    report.config = cfg;
    {
        Rng rng(derive_seed(cfg.seed, kCalibrationIndex, kCalibrationStream));
        report.sigma = calibrate_sigma(cfg, rng);
    }

    std::vector<std::vector<ReplicationRecord>> per_rep(static_cast<std::size_t>(cfg.replications));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < cfg.replications; r = next++) {
            per_rep[r] = run_replication(cfg, report.sigma, r);
        }
    };
    const int threads = std::clamp(jobs, 1, cfg.replications);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& recs : per_rep) {
        for (auto& r : recs) report.records.push_back(std::move(r));
    }
    report.summaries = aggregate(cfg, report.records);
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

nlohmann::json to_json(const ReplicationRecord& r) {
    std::vector<int> support, initial_support, incoherent;
    for (int s : r.support) support.push_back(s + 1);
    for (int s : r.initial_support) initial_support.push_back(s + 1);
    for (int s : r.incoherent) incoherent.push_back(s + 1);
    nlohmann::json j = {{"replication", r.replication},
                        {"method", to_string(r.method)},
                        {"ok", r.ok}};
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    j["support"] = support;
    if (is_adaptive(r.method)) j["initial_support"] = initial_support;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["selected"] = r.selected;
    j["mse"] = r.mse;
    j["lambda"] = r.lambda;
    j["initial_lambda"] = r.initial_lambda;
    j["incoherent"] = incoherent;
    j["monotone_violations"] = r.monotone_violations;
    j["converged"] = r.converged;
    return j;
}

nlohmann::json to_json(const SimReport& report) {
    auto stat = [](const Stat& s) { return nlohmann::json{{"mean", s.mean}, {"sd", s.sd}}; };
    nlohmann::json summaries = nlohmann::json::array();
    for (const auto& s : report.summaries) {
        nlohmann::json sel = nlohmann::json::array(), mse = nlohmann::json::array();
        for (const auto& v : s.selection) sel.push_back(stat(v));
        for (const auto& v : s.mse) mse.push_back(stat(v));
        summaries.push_back({{"method", to_string(s.method)},
                             {"name", display_name(s.method)},
                             {"completed", s.completed},
                             {"failed", s.failed},
                             {"selection", sel},
                             {"tp", stat(s.tp)},
                             {"fp", stat(s.fp)},
                             {"mse", mse}});
    }
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : report.records) records.push_back(to_json(r));
    return {{"config", to_json(report.config)},
            {"sigma", report.sigma},
            {"complete", report.complete()},
            {"summaries", summaries},
            {"records", records}};
}

std::string format_table(const SimReport& report) {
    const SimConfig& c = report.config;
    std::ostringstream os;
    char head[256];
    std::snprintf(head, sizeof head, "Model %s: n=%d, P=%d, t=%g, SNR=%g, replications=%d, sigma=%.4f\n",
                  to_string(c.model), c.n, c.P, c.t_dep, c.snr, c.replications, report.sigma);
    os << head;

    auto row_label = [](const MethodSummary& s) {
        std::string name = display_name(s.method);
        if (s.failed > 0) name += "*";
        name.resize(std::max<std::size_t>(name.size(), 14), ' ');
        return name;
    };
    auto cell = [](const Stat& s) { return fmt("%6.2f (%5.2f)", s.mean, s.sd); };
    auto header = [&](bool with_counts) {
        std::string h(14, ' ');
        for (int k = 0; k < 4; ++k) {
            char b[32];
            std::snprintf(b, sizeof b, "  %14s", component_label(c.model, k));
            h += b;
        }
        if (with_counts) h += "              TP              FP";
        return h + "\n";
    };

    os << "\nSelection\n" << header(true);
    for (const auto& s : report.summaries) {
        os << row_label(s);
        for (const auto& v : s.selection) os << "  " << cell(v);
        os << "  " << cell(s.tp) << "  " << cell(s.fp) << "\n";
    }
    os << "\nEstimation\n" << header(false);
    for (const auto& s : report.summaries) {
        os << row_label(s);
        for (const auto& v : s.mse) os << "  " << cell(v);
        os << "\n";
    }
    bool any_failed = false;
    for (const auto& s : report.summaries) any_failed = any_failed || s.failed > 0;
    if (any_failed) os << "\n* some replications failed; cells average the completed ones\n";
    char tail[64];
    std::snprintf(tail, sizeof tail, "\nruntime: %.1f s\n", report.runtime_seconds);
    os << tail;
    return os.str();
}

}  // namespace monospline
