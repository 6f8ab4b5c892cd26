#include <doctest.h>

#include <gfs/bench.hpp>
#include <gfs/errors.hpp>
#include <gfs/graph.hpp>
#include <gfs/spectral.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using gfs::ExperimentConfig;
using gfs::ExperimentRecord;
using gfs::Method;
using gfs::Reconstructor;

namespace {

const char* kBaseConfig =
    "# smoke experiment\n"
    "graph.family = sensor\n"
    "graph.n = 24\n"
    "graph.radius = 0.5\n"
    "graph.seed = 3\n"
    "bandwidth = 3\n"
    "budgets = 6\n"
    "snrs_db = inf, 0\n"
    "trials = 2\n"
    "master_seed = 11\n"
    "rng = mt19937_64-boxmuller-v1\n"
    "methods = gfs, random\n"
    "reconstructors = ls, gfs-biased\n";

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

bool same_modulo_timing(const ExperimentRecord& a, const ExperimentRecord& b) {
    auto eq = [](double x, double y) {
        return (std::isnan(x) && std::isnan(y)) || x == y;
    };
    return a.method == b.method && a.reconstructor == b.reconstructor && a.m == b.m &&
           eq(a.snr_db, b.snr_db) && a.t == b.t && a.trial == b.trial &&
           eq(a.mse_sum, b.mse_sum) && eq(a.mse_mean, b.mse_mean) &&
           eq(a.objective, b.objective) && a.seed == b.seed;
}

}  // namespace

TEST_CASE("generate_signal: bandlimited, deterministic, degenerate spread") {
    auto lap = gfs::build_laplacian(gfs::gen_sensor_graph(20, 0.5, 2));
    auto basis = gfs::exact_eigendecompose(lap);
    auto T = gfs::lp_filter(basis, 4);
    gfs::SignalModel model{4, 1.0, 0.5};
    Eigen::VectorXd x = gfs::generate_signal(basis, model, 7);
    CHECK((T.matrix * x - x).norm() < 1e-10 * x.norm());
    Eigen::VectorXd y = gfs::generate_signal(basis, model, 7);
    CHECK((x - y).norm() == 0.0);
    Eigen::VectorXd z = gfs::generate_signal(basis, model, 8);
    CHECK((x - z).norm() > 0.0);
    // zero spread collapses to the deterministic mean combination
    gfs::SignalModel flat{4, 2.0, 0.0};
    Eigen::VectorXd w = gfs::generate_signal(basis, flat, 9);
    Eigen::VectorXd expect = basis.vectors.leftCols(4) * Eigen::VectorXd::Constant(4, 2.0);
    CHECK((w - expect).norm() < 1e-14);
}

TEST_CASE("add_noise: noiseless sentinel and exact snr power law") {
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;
    auto clean = gfs::add_noise(x, std::numeric_limits<double>::infinity(), 2.0, 5);
    CHECK(clean.noise_variance == 0.0);
    CHECK((clean.values - x).norm() == 0.0);

    auto at0 = gfs::add_noise(x, 0.0, 2.0, 5);
    CHECK(at0.noise_variance == doctest::Approx(2.0).epsilon(1e-15));
    auto at10 = gfs::add_noise(x, 10.0, 2.0, 5);
    CHECK(at10.noise_variance == doctest::Approx(0.2).epsilon(1e-15));
    auto atm10 = gfs::add_noise(x, -10.0, 2.0, 5);
    CHECK(atm10.noise_variance == doctest::Approx(20.0).epsilon(1e-15));

    auto a = gfs::add_noise(x, 0.0, 2.0, 5);
    auto b = gfs::add_noise(x, 0.0, 2.0, 5);
    CHECK((a.values - b.values).norm() == 0.0);
    CHECK_THROWS_AS(gfs::add_noise(x, 0.0, 0.0, 5), std::invalid_argument);
}

TEST_CASE("add_noise: sample variance tracks the requested level") {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(100000);
    auto noisy = gfs::add_noise(x, 0.0, 1.0, 17);
    const double var = noisy.values.squaredNorm() / x.size();
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("method and reconstructor names") {
    CHECK(std::string(gfs::method_name(Method::Gfs)) == "gfs");
    CHECK(std::string(gfs::method_name(Method::GfsNe)) == "gfs-ne");
    CHECK(std::string(gfs::method_name(Method::Random)) == "random");
    CHECK(std::string(gfs::method_name(Method::OracleGreedy)) == "oracle-greedy");
    CHECK(std::string(gfs::reconstructor_name(Reconstructor::Ls)) == "ls");
    CHECK(std::string(gfs::reconstructor_name(Reconstructor::GfsBiased)) == "gfs-biased");
}

TEST_CASE("trial_seed: stable and sensitive to every argument") {
    const auto s = gfs::trial_seed(1, Method::Gfs, 10, 0.0, 3);
    CHECK(s == gfs::trial_seed(1, Method::Gfs, 10, 0.0, 3));
    CHECK(s != gfs::trial_seed(2, Method::Gfs, 10, 0.0, 3));
    CHECK(s != gfs::trial_seed(1, Method::Random, 10, 0.0, 3));
    CHECK(s != gfs::trial_seed(1, Method::Gfs, 11, 0.0, 3));
    CHECK(s != gfs::trial_seed(1, Method::Gfs, 10, 5.0, 3));
    CHECK(s != gfs::trial_seed(1, Method::Gfs, 10, 0.0, 4));
}

TEST_CASE("parse_config_text: full example with comments and lists") {
    auto cfg = gfs::parse_config_text(kBaseConfig);
    CHECK(cfg.graph.family == gfs::GraphSpec::Family::Sensor);
    CHECK(cfg.graph.n == 24);
    CHECK(cfg.graph.radius == 0.5);
    CHECK(cfg.graph.seed == 3);
    CHECK(cfg.bandwidth == 3);
    REQUIRE(cfg.budgets.size() == 1);
    CHECK(cfg.budgets[0] == 6);
    REQUIRE(cfg.snrs_db.size() == 2);
    CHECK(std::isinf(cfg.snrs_db[0]));
    CHECK(cfg.snrs_db[1] == 0.0);
    CHECK(cfg.trials == 2);
    CHECK(cfg.master_seed == 11);
    REQUIRE(cfg.methods.size() == 2);
    CHECK(cfg.methods[0] == Method::Gfs);
    CHECK(cfg.methods[1] == Method::Random);
    REQUIRE(cfg.reconstructors.size() == 2);
    CHECK_FALSE(cfg.dynamic.has_value());
    // defaults
    CHECK(cfg.shift.kind == gfs::ShiftPolicy::Kind::ConditionNumber);
    CHECK(cfg.shift.kappa0 == 100.0);
    CHECK(cfg.beta.kind == gfs::BetaPolicy::Kind::DiagonalAverage);
    CHECK(cfg.basis == gfs::BasisKind::Exact);
    CHECK(cfg.j_factor == 6.0);
    CHECK(cfg.coeff_mean == 1.0);
    CHECK(cfg.coeff_std == 0.5);
}

TEST_CASE("parse_config_text: rejections") {
    // unknown key
    CHECK_THROWS_AS(gfs::parse_config_text(std::string(kBaseConfig) + "bogus = 1\n"),
                    gfs::ConfigError);
    // missing required keys
    CHECK_THROWS_AS(gfs::parse_config_text("graph.family = sensor\n"), gfs::ConfigError);
    // malformed line
    CHECK_THROWS_AS(gfs::parse_config_text("graph.family sensor\n"), gfs::ConfigError);
    // bad values
    CHECK_THROWS_AS(gfs::parse_config_text(std::string(kBaseConfig) + "j_factor = six\n"),
                    gfs::ConfigError);
    CHECK_THROWS_AS(gfs::parse_config_text(std::string(kBaseConfig) + "snrs_db = nan\n"),
                    gfs::ConfigError);
    CHECK_THROWS_AS(gfs::parse_config_text(std::string(kBaseConfig) + "methods = magic\n"),
                    gfs::ConfigError);
    CHECK_THROWS_AS(
        gfs::parse_config_text(std::string(kBaseConfig) + "rng = other-generator\n"),
        gfs::ConfigError);
    // gfs-ne needs a dynamic block
    CHECK_THROWS_AS(gfs::parse_config_text(std::string(kBaseConfig) + "methods = gfs-ne\n"),
                    gfs::ConfigError);
    // oracle-greedy cannot run dynamically
    CHECK_THROWS_AS(gfs::parse_config_text(std::string(kBaseConfig) +
                                           "methods = oracle-greedy\ndynamic.steps = 2\n"),
                    gfs::ConfigError);
}

TEST_CASE("parse_config_file: missing file") {
    CHECK_THROWS_AS(gfs::parse_config_file(fs::temp_directory_path() / "gfs_absent.cfg"),
                    gfs::ConfigError);
}

TEST_CASE("emit_csv: exact header, formatting, and ordering") {
    ExperimentRecord r1;
    r1.method = "random";
    r1.reconstructor = "ls";
    r1.m = 5;
    r1.snr_db = 0.0;
    r1.t = -1;
    r1.trial = 0;
    r1.mse_sum = 0.125;
    r1.mse_mean = 0.025;
    r1.objective = 1.5;
    r1.wall_time_ms = 3.25;
    r1.seed = 42;
    ExperimentRecord r2 = r1;
    r2.method = "gfs";
    r2.reconstructor = "gfs-biased";
    r2.snr_db = std::numeric_limits<double>::infinity();
    r2.mse_sum = std::numeric_limits<double>::quiet_NaN();
    r2.mse_mean = std::numeric_limits<double>::quiet_NaN();
    r2.seed = 18446744073709551615ull;

    fs::path p = fs::temp_directory_path() / "gfs_emit.csv";
    gfs::emit_csv({r1, r2}, p);  // unsorted input
    auto lines = read_lines(p);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] ==
          "method,reconstructor,M,snr_db,t,trial,mse_sum,mse_mean,objective,"
          "wall_time_ms,seed");
    // "gfs" sorts before "random" regardless of input order
    CHECK(lines[1] ==
          "gfs,gfs-biased,5,inf,-1,0,nan,nan,1.5,3.25,18446744073709551615");
    CHECK(lines[2] == "random,ls,5,0,-1,0,0.125,0.025,1.5,3.25,42");
    fs::remove(p);
}

TEST_CASE("emit_csv: header-only output for an empty record set") {
    fs::path p = fs::temp_directory_path() / "gfs_emit_empty.csv";
    gfs::emit_csv({}, p);
    auto lines = read_lines(p);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].substr(0, 6) == "method");
    fs::remove(p);
}

TEST_CASE("run_static: record grid, noiseless accuracy, determinism") {
    auto cfg = gfs::parse_config_text(kBaseConfig);
    auto records = gfs::run_static(cfg);
    // methods x budgets x snrs x trials x reconstructors
    REQUIRE(records.size() == 2u * 1u * 2u * 2u * 2u);

    int checked = 0;
    for (const auto& r : records) {
        CHECK(r.t == -1);
        CHECK(std::isfinite(r.objective));
        if (std::isinf(r.snr_db) && r.reconstructor == "ls") {
            // noiseless LS on an exactly bandlimited signal is exact
            CHECK(r.mse_sum < 1e-12);
            ++checked;
        }
        CHECK(r.mse_mean == doctest::Approx(r.mse_sum / 24.0).epsilon(1e-12));
    }
    CHECK(checked == 4);  // 2 methods x 2 trials

    // the deterministic sampler reports one objective per budget
    double gfs_obj = 0.0;
    bool first = true;
    for (const auto& r : records) {
        if (r.method != "gfs") continue;
        if (first) {
            gfs_obj = r.objective;
            first = false;
        } else {
            CHECK(r.objective == gfs_obj);
        }
    }

    auto again = gfs::run_static(cfg);
    REQUIRE(again.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        CHECK(same_modulo_timing(records[i], again[i]));
}

TEST_CASE("run_static: refuses a config with a dynamic block") {
    auto cfg = gfs::parse_config_text(std::string(kBaseConfig) + "dynamic.steps = 2\n");
    CHECK_THROWS_AS(gfs::run_static(cfg), gfs::ConfigError);
    CHECK_THROWS_AS(gfs::run_dynamic(gfs::parse_config_text(kBaseConfig), nullptr),
                    gfs::ConfigError);
}

TEST_CASE("run_dynamic: record grid, stable availability, paired objectives") {
    std::string text = std::string(kBaseConfig) +
                       "methods = gfs, gfs-ne, random\n"
                       "dynamic.p0 = 1.0\n"
                       "dynamic.eps = 0\n"
                       "dynamic.k0 = 10\n"
                       "dynamic.steps = 3\n";
    auto cfg = gfs::parse_config_text(text);
    fs::path trace = fs::temp_directory_path() / "gfs_trace.csv";
    auto records = gfs::run_dynamic(cfg, &trace);
    // methods x budgets x snrs x steps x trials x reconstructors
    REQUIRE(records.size() == 3u * 1u * 2u * 3u * 2u * 2u);

    // full availability with no churn: every sampler sees the whole graph at
    // every step, so gfs and the exchange method report identical objectives
    for (const auto& r : records) {
        CHECK(std::isfinite(r.objective));
        if (r.method == "random") continue;
        for (const auto& s : records) {
            if (s.m == r.m && s.trial == r.trial && s.method != "random")
                CHECK(r.objective == doctest::Approx(s.objective).epsilon(1e-12));
        }
    }

    auto lines = read_lines(trace);
    REQUIRE(lines.size() == 1u + 3u * 24u);  // header + steps x nodes (first trial)
    CHECK(lines[0] == "t,node,state");
    CHECK(lines[1] == "0,0,1");  // p0 = 1: everything available
    fs::remove(trace);

    auto again = gfs::run_dynamic(cfg, nullptr);
    REQUIRE(again.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        CHECK(same_modulo_timing(records[i], again[i]));
}

TEST_CASE("run_dynamic: availability churn keeps sample sets inside the mask") {
    std::string text = std::string(kBaseConfig) +
                       "methods = gfs-ne\n"
                       "trials = 1\n"
                       "snrs_db = 0\n"
                       "dynamic.p0 = 0.8\n"
                       "dynamic.eps = 0.05\n"
                       "dynamic.k0 = 5\n"
                       "dynamic.steps = 4\n";
    auto cfg = gfs::parse_config_text(text);
    auto records = gfs::run_dynamic(cfg, nullptr);
    REQUIRE(records.size() == 1u * 1u * 1u * 4u * 1u * 2u);
    for (const auto& r : records) {
        CHECK(std::isfinite(r.mse_sum));
        CHECK(r.t >= 0);
        CHECK(r.t < 4);
    }
}
