#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "monospline/cli.hpp"
#include "monospline/fit_io.hpp"

using namespace monospline;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("monospline_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        unsetenv("MONOSPLINE_SEED");
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    // Columns a, b, c, y with a monotone signal in a and b.
    std::string write_data(const std::string& name, int n = 60, unsigned seed = 1) const {
        std::mt19937 gen(seed);
        std::uniform_real_distribution<double> u(0.0, 2.0);
        std::normal_distribution<double> z(0.0, 0.1);
        std::ofstream f(path(name));
        f.precision(17);
        f << "a,b,c,y\n";
        for (int i = 0; i < n; ++i) {
            const double a = u(gen), b = u(gen), c = u(gen);
            f << a << ',' << b << ',' << c << ',' << a * a - 2.0 * std::sqrt(b) + z(gen) << '\n';
        }
        return path(name);
    }

    fs::path dir_;
};

std::vector<double> read_column(const std::string& file) {
    std::istringstream in(slurp(file));
    std::string line;
    std::getline(in, line);
    std::vector<double> v;
    while (std::getline(in, line)) v.push_back(std::stod(line));
    return v;
}

}  // namespace

TEST_F(CliTest, FitThenPredictReproducesFittedValues) {
    const std::string data = write_data("train.csv");
    const CliRun f = run({"fit", "--input", data, "--lambda", "0.2", "--output", path("fit.json")});
    ASSERT_EQ(f.code, 0) << f.err;
    EXPECT_NE(f.out.find("selected"), std::string::npos);
    EXPECT_TRUE(fs::exists(path("fit.curves.tsv")));

    const CliRun p = run({"predict", "--fit", path("fit.json"), "--input", data, "--output", path("pred.csv")});
    ASSERT_EQ(p.code, 0) << p.err;
    const auto yhat = read_column(path("pred.csv"));

    const Dataset d = split_response(read_csv_file(data));
    FitOptions o;
    o.lambda = 0.2;
    const Vector expected = predict(fit(Method::ms, d.X, d.y, o), d.X);
    ASSERT_EQ(static_cast<Eigen::Index>(yhat.size()), expected.size());
    for (Eigen::Index i = 0; i < expected.size(); ++i) EXPECT_NEAR(yhat[i], expected[i], 1e-10);
    EXPECT_EQ(slurp(path("pred.csv")).substr(0, 6), "y_hat\n");
}

TEST_F(CliTest, PredictWithoutHeaderNamesUsesPositions) {
    const std::string data = write_data("train.csv");
    ASSERT_EQ(run({"fit", "--input", data, "--lambda", "0.2", "--output", path("fit.json"), "--quiet"}).code, 0);
    {
        std::ofstream f(path("new.csv"));
        f << "x1,x2,x3\n0.5,0.5,0.5\n1.5,0.2,1.0\n";
    }
    const CliRun p = run({"predict", "--fit", path("fit.json"), "--input", path("new.csv")});
    ASSERT_EQ(p.code, 0) << p.err;
    EXPECT_EQ(std::count(p.out.begin(), p.out.end(), '\n'), 3);
}

TEST_F(CliTest, PredictRejectsColumnMismatch) {
    const std::string data = write_data("train.csv");
    ASSERT_EQ(run({"fit", "--input", data, "--lambda", "0.2", "--output", path("fit.json"), "--quiet"}).code, 0);
    {
        std::ofstream f(path("bad.csv"));
        f << "p,q\n0.1,0.2\n";
    }
    const CliRun p = run({"predict", "--fit", path("fit.json"), "--input", path("bad.csv")});
    EXPECT_EQ(p.code, 1);
    EXPECT_NE(p.err.find("expects 3 covariates"), std::string::npos) << p.err;
}

TEST_F(CliTest, PredictClampsOutsideTrainingRange) {
    const std::string data = write_data("train.csv");
    ASSERT_EQ(run({"fit", "--input", data, "--lambda", "0.1", "--output", path("fit.json"), "--quiet"}).code, 0);
    const Dataset d = split_response(read_csv_file(data));
    std::ofstream f(path("edge.csv"));
    f.precision(17);
    f << "a,b,c\n";
    f << d.X.col(0).maxCoeff() << ',' << d.X.col(1).minCoeff() << ',' << d.X.col(2).maxCoeff() << '\n';
    f << d.X.col(0).maxCoeff() + 5.0 << ',' << d.X.col(1).minCoeff() - 3.0 << ',' << 100.0 << '\n';
    f.close();
    const CliRun p = run({"predict", "--fit", path("fit.json"), "--input", path("edge.csv")});
    ASSERT_EQ(p.code, 0) << p.err;
    std::istringstream in(p.out);
    std::string header, r1, r2;
    std::getline(in, header);
    std::getline(in, r1);
    std::getline(in, r2);
    EXPECT_EQ(r1, r2);
}

TEST_F(CliTest, LambdaMaxOnly) {
    const std::string data = write_data("train.csv");
    const CliRun r = run({"fit", "--input", data, "--lambda-max-only"});
    ASSERT_EQ(r.code, 0) << r.err;
    const double lmax = std::stod(r.out);
    EXPECT_GT(lmax, 0.0);

    // Just above lambda_max nothing is selected; just below something is.
    const CliRun above = run({"fit", "--input", data, "--lambda", std::to_string(lmax * 1.001), "--output", path("a.json"), "--quiet"});
    ASSERT_EQ(above.code, 0);
    const auto ja = nlohmann::json::parse(slurp(path("a.json")));
    EXPECT_TRUE(ja["diagnostics"]["support"].empty());
    run({"fit", "--input", data, "--lambda", std::to_string(lmax * 0.95), "--output", path("b.json"), "--quiet"});
    const auto jb = nlohmann::json::parse(slurp(path("b.json")));
    EXPECT_FALSE(jb["diagnostics"]["support"].empty());
}

TEST_F(CliTest, NullFitCurveFileHasOnlyIntercept) {
    const std::string data = write_data("train.csv");
    const CliRun r = run({"fit", "--input", data, "--lambda", "1e9", "--output", path("null.json"), "--curves",
                       path("null.tsv"), "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string curves = slurp(path("null.tsv"));
    EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 2);
    EXPECT_NE(curves.find("intercept\tNA\tNA\t"), std::string::npos);
}

TEST_F(CliTest, CurveFileHas201PointsPerSelectedCovariate) {
    const std::string data = write_data("train.csv");
    ASSERT_EQ(run({"fit", "--input", data, "--lambda", "0.2", "--output", path("fit.json"), "--quiet"}).code, 0);
    const auto j = nlohmann::json::parse(slurp(path("fit.json")));
    const std::size_t selected = j["diagnostics"]["support"].size();
    ASSERT_GT(selected, 0u);
    const std::string curves = slurp(path("fit.curves.tsv"));
    EXPECT_EQ(static_cast<std::size_t>(std::count(curves.begin(), curves.end(), '\n')), 2 + 201 * selected);
}

TEST_F(CliTest, MalformedCsvReportsLineAndColumn) {
    {
        std::ofstream f(path("bad.csv"));
        f << "a,b,y\n1,2,3\n4,oops,6\n";
    }
    const CliRun r = run({"fit", "--input", path("bad.csv")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 3, column 2"), std::string::npos) << r.err;
    {
        std::ofstream f(path("short.csv"));
        f << "a,b,y\n1,2,3\n4,5\n";
    }
    const CliRun s = run({"fit", "--input", path("short.csv")});
    EXPECT_EQ(s.code, 1);
    EXPECT_NE(s.err.find("line 3"), std::string::npos) << s.err;
    EXPECT_EQ(run({"fit", "--input", path("missing.csv")}).code, 1);
}

TEST_F(CliTest, ResponseFlagSelectsColumn) {
    std::ofstream f(path("resp.csv"));
    f << "y,a,b\n";
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        const double a = u(gen), b = u(gen);
        f << 3.0 * a << ',' << a << ',' << b << '\n';
    }
    f.close();
    const CliRun r = run({"fit", "--input", path("resp.csv"), "--response", "y", "--lambda", "0.1", "--output",
                       path("fit.json"), "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(path("fit.json")));
    EXPECT_EQ(j["response"], "y");
    EXPECT_EQ(j["diagnostics"]["support"], nlohmann::json::array({"a"}));
    EXPECT_EQ(run({"fit", "--input", path("resp.csv"), "--response", "zz"}).code, 1);
}

TEST_F(CliTest, CrossValidationIsDeterministic) {
    const std::string data = write_data("train.csv");
    const std::vector<std::string> args{"cv", "--input", data, "--grid-size", "20", "--folds", "5", "--seed", "7"};
    auto a = args, b = args;
    a.insert(a.end(), {"--output", path("a.tsv")});
    b.insert(b.end(), {"--output", path("b.tsv")});
    const CliRun ra = run(a);
    const CliRun rb = run(b);
    ASSERT_EQ(ra.code, 0) << ra.err;
    EXPECT_EQ(slurp(path("a.tsv")), slurp(path("b.tsv")));
    EXPECT_EQ(ra.out, rb.out);
    const std::string tsv = slurp(path("a.tsv"));
    EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "stage\tlambda\tcv");
    EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 21);

    // The environment seed is used when --seed is absent.
    setenv("MONOSPLINE_SEED", "7", 1);
    const CliRun env = run({"cv", "--input", data, "--grid-size", "20", "--folds", "5", "--output", path("c.tsv")});
    EXPECT_EQ(slurp(path("c.tsv")), tsv);
    setenv("MONOSPLINE_SEED", "seven", 1);
    EXPECT_EQ(run({"cv", "--input", data}).code, 1);
    unsetenv("MONOSPLINE_SEED");
}

TEST_F(CliTest, AdaptiveCvWritesBothStages) {
    const std::string data = write_data("train.csv");
    const CliRun r = run({"cv", "--input", data, "--method", "ams", "--grid-size", "10", "--folds", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("initial\t"), std::string::npos);
    EXPECT_NE(r.out.find("final\t"), std::string::npos);
    EXPECT_NE(r.out.find("initial lambda: "), std::string::npos);
}

TEST_F(CliTest, SimulateSmokeRunIsReproducible) {
    {
        std::ofstream f(path("sim.json"));
        f << R"({"n": 40, "P": 12, "replications": 1, "grid_size": 20, "folds": 5,
                 "calibration_draws": 5000, "methods": ["ms", "lasso"], "seed": 3})";
    }
    const CliRun a = run({"simulate", "--config", path("sim.json"), "--output", path("a.json"), "--table",
                       path("a.txt"), "--quiet"});
    ASSERT_EQ(a.code, 0) << a.err;
    const CliRun b = run({"simulate", "--config", path("sim.json"), "--output", path("b.json"), "--quiet", "--jobs",
                       "2"});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
    const std::string table = slurp(path("a.txt"));
    EXPECT_LT(table.find("Selection"), table.find("Estimation"));
    const auto j = nlohmann::json::parse(slurp(path("a.json")));
    EXPECT_EQ(j["records"].size(), 2u);
    EXPECT_EQ(j["config"]["P"], 12);

    const CliRun c = run({"simulate", "--config", path("sim.json"), "--seed", "4", "--output", path("c.json"), "--quiet"});
    ASSERT_EQ(c.code, 0);
    EXPECT_NE(slurp(path("c.json")), slurp(path("a.json")));
}

TEST_F(CliTest, SimulateRejectsBadConfig) {
    {
        std::ofstream f(path("bad.json"));
        f << R"({"P": 2})";
    }
    EXPECT_EQ(run({"simulate", "--config", path("bad.json"), "--quiet"}).code, 1);
    {
        std::ofstream f(path("broken.json"));
        f << "{";
    }
    EXPECT_EQ(run({"simulate", "--config", path("broken.json"), "--quiet"}).code, 1);
}

TEST_F(CliTest, BasisDump) {
    {
        std::ofstream f(path("x.csv"));
        f << "u,v\n";
        std::mt19937 gen(4);
        std::uniform_real_distribution<double> u(-1.0, 4.0);
        for (int i = 0; i < 25; ++i) f << u(gen) << ',' << u(gen) << '\n';
    }
    const CliRun raw = run({"basis", "--input", path("x.csv"), "--output", path("raw.tsv")});
    ASSERT_EQ(raw.code, 0) << raw.err;
    const Table t = [&] {
        std::string s = slurp(path("raw.tsv"));
        std::replace(s.begin(), s.end(), '\t', ',');
        std::istringstream in(s);
        return read_csv(in);
    }();
    ASSERT_EQ(t.values.rows(), 25);
    ASSERT_EQ(t.values.cols(), 16);
    EXPECT_EQ(t.names.front(), "u_1");
    EXPECT_EQ(t.names.back(), "v_8");
    EXPECT_GE(t.values.minCoeff(), 0.0);
    EXPECT_LE(t.values.maxCoeff(), 1.0);

    const CliRun centered = run({"basis", "--input", path("x.csv"), "--centered"});
    ASSERT_EQ(centered.code, 0);
    std::string s = centered.out;
    std::replace(s.begin(), s.end(), '\t', ',');
    std::istringstream in(s);
    const Table c = read_csv(in);
    EXPECT_LE(c.values.colwise().mean().cwiseAbs().maxCoeff(), 1e-15);

    const CliRun bs = run({"basis", "--input", path("x.csv"), "--kind", "bspline", "--order", "3"});
    ASSERT_EQ(bs.code, 0);
    EXPECT_NE(bs.out.find("v_9"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"fit"}).code, 1);
    EXPECT_EQ(run({"fit", "--input", "x.csv", "--knots", "many"}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
    const std::string data = write_data("train.csv");
    const CliRun bad = run({"fit", "--input", data, "--method", "ridge"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("unknown method"), std::string::npos);
}
