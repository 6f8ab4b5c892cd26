#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfs/dynamic.hpp"
#include "gfs/graph.hpp"
#include "gfs/reconstruction.hpp"
#include "gfs/sampler.hpp"
#include "gfs/spectral.hpp"

namespace gfs {

struct SignalModel {
    int bandwidth = 1;
    double coeff_mean = 1.0;
    double coeff_std = 0.5;
};

// Exactly bandlimited signal: x = V_K c with c_i drawn Normal(mean, std^2).
Eigen::VectorXd generate_signal(const SpectralBasis& basis, const SignalModel& model,
                                std::uint64_t seed);

struct NoisySamples {
    Eigen::VectorXd values;
    double noise_variance = 0.0;
};

// White Gaussian noise at the requested SNR against per-node signal power;
// snr_db = +infinity means noiseless.
NoisySamples add_noise(const Eigen::VectorXd& x_S, double snr_db,
                       double signal_power, std::uint64_t seed);

enum class Method { Gfs, GfsNe, Random, OracleGreedy };
enum class Reconstructor { Ls, GfsBiased };

const char* method_name(Method m);
const char* reconstructor_name(Reconstructor r);

struct GraphSpec {
    enum class Family { Sensor, Community, Cube, EdgeList };
    Family family = Family::Sensor;
    int n = 0;
    double radius = 0.25;           // sensor
    int communities = 1;            // community
    double p_in = 0.5, p_out = 0.01;
    int side = 2, dims = 1;         // cube
    std::filesystem::path path;     // edge list
    std::uint64_t seed = 0;
};

struct BetaPolicy {
    enum class Kind { DiagonalAverage, SameAsShift, Fixed };
    Kind kind = Kind::DiagonalAverage;
    double value = 0.0;  // Fixed
};

struct DynamicSpec {
    double p0 = 0.8;
    double eps = 0.02;
    int k0 = 50;
    int steps = 1;
    int screen_order = 10;
    int screen_draws = 50;
    int screen_rank = 5;
};

struct ExperimentConfig {
    GraphSpec graph;
    int bandwidth = 1;
    std::vector<int> budgets;      // sample sizes M
    std::vector<double> snrs_db;   // may contain +infinity
    int trials = 1;
    std::uint64_t master_seed = 0;
    ShiftPolicy shift = ShiftPolicy::condition_number(100.0);
    BetaPolicy beta;
    BasisKind basis = BasisKind::Exact;
    double j_factor = 6.0;         // rotations = round(j_factor * N * ln N)
    double coeff_mean = 1.0;
    double coeff_std = 0.5;
    std::optional<DynamicSpec> dynamic;
    std::vector<Method> methods;
    std::vector<Reconstructor> reconstructors;
};

struct ExperimentRecord {
    std::string method;
    std::string reconstructor;
    int m = 0;
    double snr_db = 0.0;
    int t = -1;  // time step; -1 for static runs
    int trial = 0;
    double mse_sum = 0.0;
    double mse_mean = 0.0;
    double objective = 0.0;
    double wall_time_ms = 0.0;
    std::uint64_t seed = 0;
};

// Stable per-record seed: a 64-bit hash of (master, method, M, snr, trial).
std::uint64_t trial_seed(std::uint64_t master, Method method, int m, double snr_db,
                         int trial);

// Flat key/value config text; unknown keys are rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

// One record per (method, M, snr, trial) x reconstructor.  Sampling-set
// computation is shared across trials for the deterministic methods.
std::vector<ExperimentRecord> run_static(const ExperimentConfig& config);

// Time-evolving availability: one record per (method, M, snr, t, trial) x
// reconstructor.  The availability trace is shared across methods so the
// comparison is paired.  Pass `trace_out` to also serialize the availability
// masks as CSV rows "t,node,state".
std::vector<ExperimentRecord> run_dynamic(const ExperimentConfig& config,
                                          const std::filesystem::path* trace_out = nullptr);

// CSV with the fixed header; records sorted by
// (method, M, snr_db, t, trial, reconstructor); 12 significant digits.
void emit_csv(std::vector<ExperimentRecord> records, const std::filesystem::path& path);

}  // namespace gfs
