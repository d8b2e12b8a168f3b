#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "monospline/estimators.hpp"
#include "monospline/random.hpp"

namespace monospline {

enum class ModelId { A, B, linear };

const char* to_string(ModelId model);
ModelId model_from_string(const std::string& name);

// The true additive components.
enum class Component { g1, g2, g3, g4a, g4b };

double true_component(Component id, double x);

struct SimConfig {
    int n = 50;
    int P = 1000;
    double t_dep = 0.0;  // dependence between covariates in the same block
    double snr = 4.0;    // Var(signal) / sigma^2
    ModelId model = ModelId::A;
    std::vector<int> active{0, 1, 2, 3};  // zero-based covariate indices
    int replications = 100;
    std::uint64_t seed = 1;
    std::vector<Method> methods{Method::ms, Method::ams};
    int knots = 6;
    int ispline_order = 2;
    int bspline_order = 3;
    int folds = 10;
    int grid_size = 100;
    double grid_ratio = 1e-3;
    int calibration_draws = 100000;

    void validate() const;
    FitOptions fit_options(std::uint64_t cv_seed) const;
};

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& cfg);

// N(0,1) truncated to [0,1] by inversion.
double sample_truncnorm01(Rng& rng);
std::vector<double> sample_truncnorm01(std::size_t count, Rng& rng);

// Covariates in the active block share u_i, the others share v_i:
// x_ij = (w_ij + t * shared_i) / (1 + t).
Matrix gen_covariates(const SimConfig& cfg, Rng& rng);

// Value of the model's k-th active component (k = 0..3).
double model_component(ModelId model, int k, double x);

// Noise-free response for rows of X.
Vector signal(const Matrix& X, const SimConfig& cfg);

// sigma^2 = Var(signal) / SNR, with the variance estimated by Monte Carlo
// under the configured covariate law.
double calibrate_sigma(const SimConfig& cfg, Rng& rng);

Vector gen_response(const Matrix& X, const SimConfig& cfg, double sigma, Rng& rng);

std::pair<int, int> tp_fp(const std::vector<Eigen::Index>& support, const std::vector<int>& active);

// Mean squared difference between the fitted and true component over the
// observed points, both centered to mean zero over those points.
double component_mse(const FitResult& fit, Eigen::Index j, const Matrix& X, ModelId model, int k);

// Number of selected, sign-coherent components whose curve is not monotone
// on an equispaced grid of the unit interval.
int monotonicity_violations(const FitResult& fit, int grid_points = 1001);

struct ReplicationRecord {
    int replication = 0;
    Method method = Method::ms;
    bool ok = true;
    std::string error;
    std::vector<int> support;          // zero-based
    std::vector<int> initial_support;  // first stage of adaptive methods
    int tp = 0;
    int fp = 0;
    std::vector<int> selected;  // per active component, 0/1
    std::vector<double> mse;    // per active component
    double lambda = 0.0;
    double initial_lambda = 0.0;
    std::vector<int> incoherent;  // selected groups with mixed signs
    int monotone_violations = 0;
    bool converged = true;
};

struct Stat {
    double mean = 0.0;
    double sd = 0.0;
};

struct MethodSummary {
    Method method = Method::ms;
    int completed = 0;
    int failed = 0;
    std::vector<Stat> selection;  // per active component
    Stat tp;
    Stat fp;
    std::vector<Stat> mse;  // per active component
};

struct SimReport {
    SimConfig config;
    double sigma = 0.0;
    std::vector<MethodSummary> summaries;
    std::vector<ReplicationRecord> records;  // replication-major, methods in config order
    double runtime_seconds = 0.0;
    bool complete() const;
};

// Runs one replication of every configured method.
std::vector<ReplicationRecord> run_replication(const SimConfig& cfg, double sigma, int replication);

// Replications run on up to `jobs` threads; results do not depend on jobs.
SimReport run_experiment(const SimConfig& cfg, int jobs = 1);

// Mean and sample standard deviation.
Stat summarize(const std::vector<double>& values);

std::vector<MethodSummary> aggregate(const SimConfig& cfg, const std::vector<ReplicationRecord>& records);

nlohmann::json to_json(const ReplicationRecord& r);
// Wall-clock runtime is left out so that reports are reproducible.
nlohmann::json to_json(const SimReport& report);

// Aligned text with a Selection block and an Estimation block.
std::string format_table(const SimReport& report);

}  // namespace monospline
