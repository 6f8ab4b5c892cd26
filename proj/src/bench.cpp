#include "gfs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "gfs/errors.hpp"
#include "gfs/rng.hpp"

namespace gfs {

namespace {

constexpr const char* kRngName = "mt19937_64-boxmuller-v1";
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::uint64_t subseed(std::uint64_t seed, const char* purpose) {
    return hash_combine(seed, hash_string(purpose));
}

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::Gfs: return "gfs";
        case Method::GfsNe: return "gfs-ne";
        case Method::Random: return "random";
        case Method::OracleGreedy: return "oracle-greedy";
    }
    return "?";
}

const char* reconstructor_name(Reconstructor r) {
    return r == Reconstructor::Ls ? "ls" : "gfs-biased";
}

Eigen::VectorXd generate_signal(const SpectralBasis& basis, const SignalModel& model,
                                std::uint64_t seed) {
    if (model.bandwidth < 1 || model.bandwidth > basis.vectors.rows())
        throw std::invalid_argument("bandwidth must be in [1, N]");
    if (model.coeff_std < 0.0)
        throw std::invalid_argument("coefficient deviation must be non-negative");
    Rng rng(seed);
    Eigen::VectorXd coeffs(model.bandwidth);
    for (int i = 0; i < model.bandwidth; ++i)
        coeffs(i) = rng.normal(model.coeff_mean, model.coeff_std);
    return basis.vectors.leftCols(model.bandwidth) * coeffs;
}

NoisySamples add_noise(const Eigen::VectorXd& x_S, double snr_db,
                       double signal_power, std::uint64_t seed) {
    if (!(signal_power > 0.0))
        throw std::invalid_argument("signal power must be positive");
    NoisySamples out;
    if (std::isinf(snr_db) && snr_db > 0.0) {
        out.values = x_S;
        out.noise_variance = 0.0;
        return out;
    }
    out.noise_variance = signal_power * std::pow(10.0, -snr_db / 10.0);
    const double omega = std::sqrt(out.noise_variance);
    Rng rng(seed);
    out.values = x_S;
    for (Eigen::Index i = 0; i < out.values.size(); ++i)
        out.values(i) += rng.normal(0.0, omega);
    return out;
}

std::uint64_t trial_seed(std::uint64_t master, Method method, int m, double snr_db,
                         int trial) {
    std::uint64_t h = hash_combine(master, hash_string(method_name(method)));
    h = hash_combine(h, static_cast<std::uint64_t>(m));
    h = hash_combine(h, hash_double(snr_db));
    h = hash_combine(h, static_cast<std::uint64_t>(trial));
    return h;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(value);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) parts.push_back(cur);
    }
    return parts;
}

double parse_real(const std::string& key, const std::string& value) {
    if (value == "inf" || value == "+inf") return kInf;
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse real '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse integer '" + value + "'");
    }
}

Method parse_method(const std::string& name) {
    if (name == "gfs") return Method::Gfs;
    if (name == "gfs-ne") return Method::GfsNe;
    if (name == "random") return Method::Random;
    if (name == "oracle-greedy") return Method::OracleGreedy;
    throw ConfigError("unknown method '" + name + "'");
}

Reconstructor parse_reconstructor(const std::string& name) {
    if (name == "ls") return Reconstructor::Ls;
    if (name == "gfs-biased") return Reconstructor::GfsBiased;
    throw ConfigError("unknown reconstructor '" + name + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    bool have_family = false, have_bandwidth = false, have_budgets = false,
         have_snrs = false, have_methods = false, have_reconstructors = false,
         have_dynamic = false;
    DynamicSpec dyn;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");

        if (key == "graph.family") {
            if (value == "sensor") cfg.graph.family = GraphSpec::Family::Sensor;
            else if (value == "community") cfg.graph.family = GraphSpec::Family::Community;
            else if (value == "cube") cfg.graph.family = GraphSpec::Family::Cube;
            else if (value == "edge-list") cfg.graph.family = GraphSpec::Family::EdgeList;
            else throw ConfigError("unknown graph family '" + value + "'");
            have_family = true;
        } else if (key == "graph.n") {
            cfg.graph.n = static_cast<int>(parse_int(key, value));
        } else if (key == "graph.radius") {
            cfg.graph.radius = parse_real(key, value);
        } else if (key == "graph.communities") {
            cfg.graph.communities = static_cast<int>(parse_int(key, value));
        } else if (key == "graph.p_in") {
            cfg.graph.p_in = parse_real(key, value);
        } else if (key == "graph.p_out") {
            cfg.graph.p_out = parse_real(key, value);
        } else if (key == "graph.side") {
            cfg.graph.side = static_cast<int>(parse_int(key, value));
        } else if (key == "graph.dims") {
            cfg.graph.dims = static_cast<int>(parse_int(key, value));
        } else if (key == "graph.path") {
            cfg.graph.path = value;
        } else if (key == "graph.seed") {
            cfg.graph.seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "bandwidth") {
            cfg.bandwidth = static_cast<int>(parse_int(key, value));
            have_bandwidth = true;
        } else if (key == "budgets") {
            cfg.budgets.clear();  // repeated list keys: the last line wins
            for (const auto& part : split_list(value))
                cfg.budgets.push_back(static_cast<int>(parse_int(key, part)));
            have_budgets = true;
        } else if (key == "snrs_db") {
            cfg.snrs_db.clear();
            for (const auto& part : split_list(value)) {
                const double v = parse_real(key, part);
                if (std::isnan(v)) throw ConfigError("snrs_db entries must not be nan");
                cfg.snrs_db.push_back(v);
            }
            have_snrs = true;
        } else if (key == "trials") {
            cfg.trials = static_cast<int>(parse_int(key, value));
        } else if (key == "master_seed") {
            cfg.master_seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "shift.policy") {
            if (value == "condition-number") cfg.shift.kind = ShiftPolicy::Kind::ConditionNumber;
            else if (value == "fixed") cfg.shift.kind = ShiftPolicy::Kind::Fixed;
            else if (value == "diagonal-average") cfg.shift.kind = ShiftPolicy::Kind::DiagonalAverage;
            else throw ConfigError("unknown shift policy '" + value + "'");
        } else if (key == "shift.kappa0") {
            cfg.shift.kappa0 = parse_real(key, value);
        } else if (key == "shift.mu") {
            cfg.shift.mu = parse_real(key, value);
        } else if (key == "beta.policy") {
            if (value == "diagonal-average") cfg.beta.kind = BetaPolicy::Kind::DiagonalAverage;
            else if (value == "same-as-shift") cfg.beta.kind = BetaPolicy::Kind::SameAsShift;
            else if (value == "fixed") cfg.beta.kind = BetaPolicy::Kind::Fixed;
            else throw ConfigError("unknown beta policy '" + value + "'");
        } else if (key == "beta.value") {
            cfg.beta.value = parse_real(key, value);
        } else if (key == "basis") {
            if (value == "exact") cfg.basis = BasisKind::Exact;
            else if (value == "fgft") cfg.basis = BasisKind::Fgft;
            else throw ConfigError("unknown basis '" + value + "'");
        } else if (key == "j_factor") {
            cfg.j_factor = parse_real(key, value);
        } else if (key == "signal.coeff_mean") {
            cfg.coeff_mean = parse_real(key, value);
        } else if (key == "signal.coeff_std") {
            cfg.coeff_std = parse_real(key, value);
        } else if (key == "rng") {
            if (value != kRngName)
                throw ConfigError("unsupported rng '" + value + "' (this build provides " +
                                  kRngName + ")");
        } else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& part : split_list(value)) cfg.methods.push_back(parse_method(part));
            have_methods = true;
        } else if (key == "reconstructors") {
            cfg.reconstructors.clear();
            for (const auto& part : split_list(value))
                cfg.reconstructors.push_back(parse_reconstructor(part));
            have_reconstructors = true;
        } else if (key == "dynamic.p0") {
            dyn.p0 = parse_real(key, value);
            have_dynamic = true;
        } else if (key == "dynamic.eps") {
            dyn.eps = parse_real(key, value);
            have_dynamic = true;
        } else if (key == "dynamic.k0") {
            dyn.k0 = static_cast<int>(parse_int(key, value));
            have_dynamic = true;
        } else if (key == "dynamic.steps") {
            dyn.steps = static_cast<int>(parse_int(key, value));
            have_dynamic = true;
        } else if (key == "dynamic.screen_order") {
            dyn.screen_order = static_cast<int>(parse_int(key, value));
            have_dynamic = true;
        } else if (key == "dynamic.screen_draws") {
            dyn.screen_draws = static_cast<int>(parse_int(key, value));
            have_dynamic = true;
        } else if (key == "dynamic.screen_rank") {
            dyn.screen_rank = static_cast<int>(parse_int(key, value));
            have_dynamic = true;
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }

    if (!have_family) throw ConfigError("missing key graph.family");
    if (!have_bandwidth) throw ConfigError("missing key bandwidth");
    if (!have_budgets || cfg.budgets.empty()) throw ConfigError("missing key budgets");
    if (!have_snrs || cfg.snrs_db.empty()) throw ConfigError("missing key snrs_db");
    if (!have_methods || cfg.methods.empty()) throw ConfigError("missing key methods");
    if (!have_reconstructors || cfg.reconstructors.empty())
        throw ConfigError("missing key reconstructors");
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    if (cfg.bandwidth < 1) throw ConfigError("bandwidth must be >= 1");
    for (int m : cfg.budgets)
        if (m < 1) throw ConfigError("budgets must all be >= 1");
    if (have_dynamic) {
        if (dyn.steps < 1) throw ConfigError("dynamic.steps must be >= 1");
        if (dyn.p0 < 0.0 || dyn.p0 > 1.0 || dyn.eps < 0.0 || dyn.eps > 1.0)
            throw ConfigError("dynamic probabilities must be in [0, 1]");
        if (dyn.k0 < 0) throw ConfigError("dynamic.k0 must be >= 0");
        if (dyn.screen_draws < dyn.screen_rank || dyn.screen_rank < 1)
            throw ConfigError("need dynamic.screen_draws >= dynamic.screen_rank >= 1");
        cfg.dynamic = dyn;
        for (Method m : cfg.methods)
            if (m == Method::OracleGreedy)
                throw ConfigError("oracle-greedy is a static-only method");
    } else {
        for (Method m : cfg.methods)
            if (m == Method::GfsNe)
                throw ConfigError("gfs-ne requires a dynamic block");
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

// ---------------------------------------------------------------------------
// Shared experiment setup

namespace {

Graph build_graph(const GraphSpec& spec) {
    switch (spec.family) {
        case GraphSpec::Family::Sensor:
            return gen_sensor_graph(spec.n, spec.radius, spec.seed);
        case GraphSpec::Family::Community:
            return gen_community_graph(spec.n, spec.communities, spec.p_in, spec.p_out,
                                       spec.seed);
        case GraphSpec::Family::Cube:
            return gen_cube_graph(spec.side, spec.dims);
        case GraphSpec::Family::EdgeList:
            return load_edge_list(spec.path);
    }
    throw ConfigError("unhandled graph family");
}

struct Workbench {
    Graph graph;
    LaplacianView lap;
    SpectralBasis exact;          // always computed: signals and LS use it
    SpectralBasis sampling_basis; // exact or rotation-approximate
    LowPassFilter filter;         // from sampling_basis
    Eigen::MatrixXd g_matrix;     // filter + mu I, per budget (see resolve)
};

Workbench prepare(const ExperimentConfig& cfg) {
    Workbench wb{build_graph(cfg.graph), {}, {}, {}, {}, {}};
    wb.lap = build_laplacian(wb.graph);
    const int n = wb.graph.node_count();
    if (cfg.bandwidth > n) throw ConfigError("bandwidth exceeds node count");
    for (int m : cfg.budgets)
        if (m > n) throw ConfigError("budget exceeds node count");
    wb.exact = exact_eigendecompose(wb.lap);
    if (cfg.basis == BasisKind::Fgft) {
        const int rotations =
            static_cast<int>(std::lround(cfg.j_factor * n * std::log(double(n))));
        wb.sampling_basis = truncated_jacobi(wb.lap, rotations);
    } else {
        wb.sampling_basis = wb.exact;
    }
    wb.filter = lp_filter(wb.sampling_basis, cfg.bandwidth);
    return wb;
}

double resolve_beta(const ExperimentConfig& cfg, const LowPassFilter& filter,
                    double mu, int budget) {
    switch (cfg.beta.kind) {
        case BetaPolicy::Kind::DiagonalAverage:
            return select_beta(filter, budget);
        case BetaPolicy::Kind::SameAsShift:
            return mu;
        case BetaPolicy::Kind::Fixed:
            return cfg.beta.value;
    }
    throw ConfigError("unhandled beta policy");
}

struct SampleOutcome {
    std::vector<int> set;
    double objective = kNan;
    const Eigen::MatrixXd* maintained_inverse = nullptr;  // valid when beta == mu
};

ExperimentRecord make_record(Method method, Reconstructor rec, int m, double snr,
                             int t, int trial, std::uint64_t seed) {
    ExperimentRecord row;
    row.method = method_name(method);
    row.reconstructor = reconstructor_name(rec);
    row.m = m;
    row.snr_db = snr;
    row.t = t;
    row.trial = trial;
    row.seed = seed;
    row.mse_sum = row.mse_mean = row.objective = kNan;
    row.wall_time_ms = 0.0;
    return row;
}

// Reconstruct with every requested reconstructor and fill the records.
void reconstruct_all(const ExperimentConfig& cfg, const Workbench& wb,
                     const SampleOutcome& sample, const Eigen::VectorXd& x,
                     double snr, double beta, std::uint64_t noise_seed,
                     std::vector<ExperimentRecord*>& rows) {
    const int n = wb.graph.node_count();
    const int m = static_cast<int>(sample.set.size());
    Eigen::VectorXd x_s(m);
    for (int r = 0; r < m; ++r) x_s(r) = x(sample.set[static_cast<std::size_t>(r)]);
    const double power = x.squaredNorm() / n;
    const NoisySamples noisy = add_noise(x_s, snr, power, noise_seed);
    ObservedSamples obs{sample.set, noisy.values, noisy.noise_variance};

    for (std::size_t r = 0; r < cfg.reconstructors.size(); ++r) {
        ExperimentRecord& row = *rows[r];
        row.objective = sample.objective;
        const double start = now_ms();
        try {
            Reconstruction rec;
            if (cfg.reconstructors[r] == Reconstructor::Ls)
                rec = ls_reconstruct(wb.exact, cfg.bandwidth, obs);
            else
                rec = gfs_reconstruct(wb.filter, beta, obs, sample.maintained_inverse);
            row.mse_sum = empirical_mse(x, rec.signal);
            row.mse_mean = row.mse_sum / n;
        } catch (const Error& e) {
            std::cerr << "trial failed (" << row.method << ", M=" << row.m
                      << ", snr=" << row.snr_db << ", t=" << row.t << ", trial="
                      << row.trial << ", " << row.reconstructor << "): " << e.what()
                      << "\n";
        }
        row.wall_time_ms = now_ms() - start;
    }
}

}  // namespace

std::vector<ExperimentRecord> run_static(const ExperimentConfig& cfg) {
    if (cfg.dynamic)
        throw ConfigError("static run invoked with a dynamic block present");
    const Workbench wb = prepare(cfg);
    const int n = wb.graph.node_count();
    const SignalModel model{cfg.bandwidth, cfg.coeff_mean, cfg.coeff_std};

    // Deterministic methods sample once per (method, M); the maintained
    // inverse is reused by the biased reconstructor when beta == mu.
    struct PerBudget {
        double mu = 0.0;
        double beta = 0.0;
        GfsState gfs;
        std::vector<int> oracle_set;
        double oracle_objective = kNan;
    };
    std::map<int, PerBudget> shared;
    const bool want_gfs = std::count(cfg.methods.begin(), cfg.methods.end(), Method::Gfs) > 0;
    const bool want_oracle =
        std::count(cfg.methods.begin(), cfg.methods.end(), Method::OracleGreedy) > 0;
    for (int m : cfg.budgets) {
        PerBudget pb;
        pb.mu = resolve_mu(cfg.shift, wb.filter, m);
        pb.beta = resolve_beta(cfg, wb.filter, pb.mu, m);
        if (want_gfs) pb.gfs = gfs_sample(wb.filter, pb.mu, m);
        if (want_oracle) {
            pb.oracle_set = naive_a_optimal_greedy(wb.sampling_basis, cfg.bandwidth, pb.mu, m);
            pb.oracle_objective = objective(wb.filter, pb.mu, pb.oracle_set);
        }
        shared.emplace(m, std::move(pb));
    }

    struct Job {
        Method method;
        int m;
        double snr;
        int trial;
        std::size_t first_row;
    };
    std::vector<Job> jobs;
    std::vector<ExperimentRecord> records;
    for (Method method : cfg.methods)
        for (int m : cfg.budgets)
            for (double snr : cfg.snrs_db)
                for (int trial = 0; trial < cfg.trials; ++trial) {
                    const std::uint64_t rs = trial_seed(cfg.master_seed, method, m, snr, trial);
                    jobs.push_back({method, m, snr, trial, records.size()});
                    for (Reconstructor rec : cfg.reconstructors)
                        records.push_back(make_record(method, rec, m, snr, -1, trial, rs));
                }

    const int job_count = static_cast<int>(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (int jidx = 0; jidx < job_count; ++jidx) {
        const Job& job = jobs[static_cast<std::size_t>(jidx)];
        const PerBudget& pb = shared.at(job.m);
        const std::uint64_t rs =
            trial_seed(cfg.master_seed, job.method, job.m, job.snr, job.trial);
        std::vector<ExperimentRecord*> rows;
        for (std::size_t r = 0; r < cfg.reconstructors.size(); ++r)
            rows.push_back(&records[job.first_row + r]);
        try {
            const Eigen::VectorXd x =
                generate_signal(wb.exact, model, subseed(rs, "signal"));
            SampleOutcome sample;
            const double sample_start = now_ms();
            switch (job.method) {
                case Method::Gfs:
                    sample.set = pb.gfs.sample_set;
                    sample.objective = pb.gfs.objective;
                    if (pb.beta == pb.mu) sample.maintained_inverse = &pb.gfs.g_inverse;
                    break;
                case Method::OracleGreedy:
                    sample.set = pb.oracle_set;
                    sample.objective = pb.oracle_objective;
                    break;
                case Method::Random:
                    sample.set = random_sample(n, job.m, subseed(rs, "sample"));
                    sample.objective = objective(wb.filter, pb.mu, sample.set);
                    break;
                case Method::GfsNe:
                    throw ConfigError("gfs-ne requires a dynamic block");
            }
            const double sample_ms = now_ms() - sample_start;
            reconstruct_all(cfg, wb, sample, x, job.snr, pb.beta, subseed(rs, "noise"),
                            rows);
            for (ExperimentRecord* row : rows) row->wall_time_ms += sample_ms;
        } catch (const std::exception& e) {
#pragma omp critical(bench_log)
            std::cerr << "trial failed (" << method_name(job.method) << ", M=" << job.m
                      << ", snr=" << job.snr << ", trial=" << job.trial
                      << "): " << e.what() << "\n";
        }
    }
    return records;
}

std::vector<ExperimentRecord> run_dynamic(const ExperimentConfig& cfg,
                                          const std::filesystem::path* trace_out) {
    if (!cfg.dynamic) throw ConfigError("dynamic run requires a dynamic block");
    const DynamicSpec dyn = *cfg.dynamic;
    const Workbench wb = prepare(cfg);
    const int n = wb.graph.node_count();
    const SignalModel model{cfg.bandwidth, cfg.coeff_mean, cfg.coeff_std};
    const ExchangeConfig xcfg{dyn.k0};

    std::ofstream trace;
    if (trace_out) {
        trace.open(*trace_out, std::ios::binary);
        if (!trace) throw IoError("cannot open " + trace_out->string() + " for writing");
        trace << "t,node,state\n";
    }

    std::vector<ExperimentRecord> records;
    for (int trial = 0; trial < cfg.trials; ++trial) {
        // One availability trace per trial, shared by every method and budget
        // so comparisons are paired.  Initial masks failing the screen are
        // redrawn.
        const std::uint64_t avail_seed =
            hash_combine(subseed(cfg.master_seed, "availability"),
                         static_cast<std::uint64_t>(trial));
        AvailabilityProcess proc;
        bool screened = false;
        for (int attempt = 0; attempt < 50 && !screened; ++attempt) {
            proc = AvailabilityProcess::init(n, dyn.p0, dyn.eps,
                                             hash_combine(avail_seed,
                                                          static_cast<std::uint64_t>(attempt)));
            const ScreenResult screen =
                screen_initial_set(wb.lap, proc.mask, dyn.screen_order, dyn.screen_draws,
                                   dyn.screen_rank, subseed(proc.seed, "screen"));
            screened = screen.good;
            if (!screened)
                std::cerr << "initial availability set rejected by screening (trial "
                          << trial << ", attempt " << attempt << "): cutoff "
                          << screen.value << " <= threshold " << screen.threshold
                          << "; redrawing\n";
        }
        if (!screened)
            throw GenerationFailed("no screen-passing initial availability set in 50 draws");

        std::vector<std::vector<char>> masks;
        masks.reserve(static_cast<std::size_t>(dyn.steps));
        masks.push_back(proc.mask);
        for (int t = 1; t < dyn.steps; ++t) {
            proc = evolve_availability(proc);
            masks.push_back(proc.mask);
        }
        if (trace_out && trial == 0) {  // one unambiguous trace: the first trial's
            for (int t = 0; t < dyn.steps; ++t)
                for (int node = 0; node < n; ++node)
                    trace << t << ',' << node << ','
                          << int(masks[static_cast<std::size_t>(t)][static_cast<std::size_t>(node)])
                          << '\n';
        }

        for (Method method : cfg.methods) {
            for (int m : cfg.budgets) {
                const double mu = resolve_mu(cfg.shift, wb.filter, m);
                const double beta = resolve_beta(cfg, wb.filter, mu, m);
                Eigen::MatrixXd g_matrix = wb.filter.matrix;
                g_matrix.diagonal().array() += mu;

                GfsState carried;  // gfs-ne state across steps
                bool carried_valid = false;
                for (int t = 0; t < dyn.steps; ++t) {
                    const std::vector<char>& avail = masks[static_cast<std::size_t>(t)];
                    const int available =
                        static_cast<int>(std::count(avail.begin(), avail.end(), char(1)));

                    SampleOutcome sample;
                    GfsState step_state;
                    std::string step_error;
                    const double sample_start = now_ms();
                    try {
                        if (available < m)
                            throw InfeasibleAvailability(
                                "step " + std::to_string(t) + ": " + std::to_string(available) +
                                " available nodes for budget " + std::to_string(m));
                        switch (method) {
                            case Method::Gfs:
                                step_state = gfs_sample(wb.filter, mu, m, Exec::OpenMp, &avail);
                                break;
                            case Method::GfsNe:
                                if (!carried_valid)
                                    step_state = gfs_sample(wb.filter, mu, m, Exec::OpenMp, &avail);
                                else
                                    step_state = gfs_ne(carried, g_matrix, avail, xcfg);
                                carried = step_state;
                                carried_valid = true;
                                break;
                            case Method::Random: {
                                std::uint64_t ss = subseed(cfg.master_seed, "sample");
                                ss = hash_combine(ss, hash_string(method_name(method)));
                                ss = hash_combine(ss, static_cast<std::uint64_t>(m));
                                ss = hash_combine(ss, static_cast<std::uint64_t>(trial));
                                ss = hash_combine(ss, static_cast<std::uint64_t>(t));
                                std::vector<int> nodes;
                                for (int i = 0; i < n; ++i)
                                    if (avail[static_cast<std::size_t>(i)]) nodes.push_back(i);
                                sample.set.clear();
                                for (int idx : random_sample(available, m, ss))
                                    sample.set.push_back(nodes[static_cast<std::size_t>(idx)]);
                                sample.objective = objective(wb.filter, mu, sample.set);
                                break;
                            }
                            case Method::OracleGreedy:
                                throw ConfigError("oracle-greedy is a static-only method");
                        }
                        if (method != Method::Random) {
                            sample.set = step_state.sample_set;
                            sample.objective = step_state.objective;
                            if (beta == mu) sample.maintained_inverse = &step_state.g_inverse;
                        }
                    } catch (const std::exception& e) {
                        step_error = e.what();
                    }
                    const double sample_ms = now_ms() - sample_start;

                    for (double snr : cfg.snrs_db) {
                        const std::uint64_t rs =
                            trial_seed(cfg.master_seed, method, m, snr, trial);
                        const std::uint64_t rst =
                            hash_combine(rs, static_cast<std::uint64_t>(t));
                        const std::size_t first_row = records.size();
                        for (Reconstructor rec : cfg.reconstructors)
                            records.push_back(make_record(method, rec, m, snr, t, trial, rst));
                        if (!step_error.empty()) {
                            std::cerr << "step failed (" << method_name(method) << ", M=" << m
                                      << ", t=" << t << ", trial=" << trial
                                      << "): " << step_error << "\n";
                            continue;
                        }
                        std::vector<ExperimentRecord*> rows;
                        for (std::size_t r = 0; r < cfg.reconstructors.size(); ++r)
                            rows.push_back(&records[first_row + r]);
                        try {
                            const Eigen::VectorXd x =
                                generate_signal(wb.exact, model, subseed(rst, "signal"));
                            reconstruct_all(cfg, wb, sample, x, snr, beta,
                                            subseed(rst, "noise"), rows);
                            for (ExperimentRecord* row : rows)
                                row->wall_time_ms += sample_ms / cfg.snrs_db.size();
                        } catch (const std::exception& e) {
                            std::cerr << "step failed (" << method_name(method) << ", M=" << m
                                      << ", snr=" << snr << ", t=" << t << ", trial=" << trial
                                      << "): " << e.what() << "\n";
                        }
                    }
                }
            }
        }
    }
    if (trace_out && !trace) throw IoError("failed writing " + trace_out->string());
    return records;
}

void emit_csv(std::vector<ExperimentRecord> records, const std::filesystem::path& path) {
    std::sort(records.begin(), records.end(),
              [](const ExperimentRecord& a, const ExperimentRecord& b) {
                  if (a.method != b.method) return a.method < b.method;
                  if (a.m != b.m) return a.m < b.m;
                  if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
                  if (a.t != b.t) return a.t < b.t;
                  if (a.trial != b.trial) return a.trial < b.trial;
                  return a.reconstructor < b.reconstructor;
              });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "method,reconstructor,M,snr_db,t,trial,mse_sum,mse_mean,objective,"
           "wall_time_ms,seed\n";
    char buf[320];
    for (const ExperimentRecord& r : records) {
        std::snprintf(buf, sizeof buf, "%s,%s,%d,%.12g,%d,%d,%.12g,%.12g,%.12g,%.12g,%llu\n",
                      r.method.c_str(), r.reconstructor.c_str(), r.m, r.snr_db, r.t,
                      r.trial, r.mse_sum, r.mse_mean, r.objective, r.wall_time_ms,
                      static_cast<unsigned long long>(r.seed));
        out << buf;
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace gfs
