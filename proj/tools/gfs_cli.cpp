#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gfs/bench.hpp"
#include "gfs/dynamic.hpp"
#include "gfs/errors.hpp"
#include "gfs/graph.hpp"
#include "gfs/reconstruction.hpp"
#include "gfs/sampler.hpp"
#include "gfs/spectral.hpp"

namespace {

gfs::SpectralBasis make_basis(const gfs::LaplacianView& lap, const std::string& kind,
                              double j_factor) {
    if (kind == "exact") return gfs::exact_eigendecompose(lap);
    if (kind == "fgft") {
        const int n = static_cast<int>(lap.matrix.rows());
        const int rotations =
            static_cast<int>(std::lround(j_factor * n * std::log(double(n))));
        return gfs::truncated_jacobi(lap, rotations);
    }
    throw gfs::ConfigError("unknown basis '" + kind + "'");
}

gfs::ShiftPolicy make_shift(const std::string& policy, double kappa0, double mu) {
    if (policy == "condition-number") return gfs::ShiftPolicy::condition_number(kappa0);
    if (policy == "fixed") return gfs::ShiftPolicy::fixed(mu);
    if (policy == "diagonal-average") return gfs::ShiftPolicy::diagonal_average();
    throw gfs::ConfigError("unknown shift policy '" + policy + "'");
}

// Shared line scaffolding for the one-token-per-line text files: strips CR
// and '#' comments, skips blank lines, rejects trailing tokens.
template <typename T>
std::vector<T> read_token_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw gfs::IoError("cannot open " + path);
    std::vector<T> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream row(line);
        T v{};
        if (!(row >> v))
            throw gfs::ParseError(lineno, std::string("cannot parse ") + what);
        std::string rest;
        if (row >> rest)
            throw gfs::ParseError(lineno, std::string("expected one ") + what + " per line");
        out.push_back(v);
    }
    return out;
}

std::vector<int> read_index_file(const std::string& path) {
    const auto raw = read_token_file<long long>(path, "node index");
    std::vector<int> out;
    for (long long v : raw) {
        if (v < 0) throw gfs::ParseError(0, "negative node index");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

Eigen::VectorXd read_value_file(const std::string& path) {
    const auto vals = read_token_file<double>(path, "value");
    Eigen::VectorXd out(static_cast<Eigen::Index>(vals.size()));
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = vals[static_cast<std::size_t>(i)];
    return out;
}

void write_index_file(const std::vector<int>& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw gfs::IoError("cannot open " + path + " for writing");
    for (int s : set) out << s << '\n';
    if (!out) throw gfs::IoError("failed writing " + path);
}

void write_signal_csv(const Eigen::VectorXd& signal, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw gfs::IoError("cannot open " + path + " for writing");
    out << "node,value\n";
    char buf[64];
    for (Eigen::Index i = 0; i < signal.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%lld,%.12g\n", static_cast<long long>(i), signal(i));
        out << buf;
    }
    if (!out) throw gfs::IoError("failed writing " + path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"low-complexity graph sampling and bandlimited reconstruction"};
    app.require_subcommand(1);

    // ---- gen-graph -------------------------------------------------------
    auto* gen = app.add_subcommand("gen-graph", "generate a synthetic graph as an edge list");
    std::string gen_family, gen_out;
    int gen_n = 100, gen_comms = 4, gen_side = 10, gen_dims = 2;
    double gen_radius = 0.25, gen_pin = 0.5, gen_pout = 0.01;
    std::uint64_t gen_seed = 0;
    gen->add_option("--family", gen_family, "sensor | community | cube")->required();
    gen->add_option("--out", gen_out, "output edge-list path")->required();
    gen->add_option("--n", gen_n, "node count (sensor, community)");
    gen->add_option("--radius", gen_radius, "connection radius (sensor)");
    gen->add_option("--communities", gen_comms, "community count (community)");
    gen->add_option("--p-in", gen_pin, "intra-community edge probability");
    gen->add_option("--p-out", gen_pout, "inter-community edge probability");
    gen->add_option("--side", gen_side, "lattice side length (cube)");
    gen->add_option("--dims", gen_dims, "lattice dimension, 1-3 (cube)");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->callback([&] {
        gfs::Graph g = [&] {
            if (gen_family == "sensor") return gfs::gen_sensor_graph(gen_n, gen_radius, gen_seed);
            if (gen_family == "community")
                return gfs::gen_community_graph(gen_n, gen_comms, gen_pin, gen_pout, gen_seed);
            if (gen_family == "cube") return gfs::gen_cube_graph(gen_side, gen_dims);
            throw gfs::ConfigError("unknown graph family '" + gen_family + "'");
        }();
        gfs::save_edge_list(g, gen_out);
        std::cerr << "wrote " << g.edges().size() << " edges over " << g.node_count()
                  << " nodes to " << gen_out << "\n";
    });

    // ---- sample ----------------------------------------------------------
    auto* sample = app.add_subcommand("sample", "select a sample set from an edge-list graph");
    std::string smp_graph, smp_out, smp_basis = "exact", smp_policy = "condition-number",
                smp_method = "gfs";
    int smp_k = 1, smp_m = 1;
    double smp_jfactor = 6.0, smp_kappa0 = 100.0, smp_mu = 0.01;
    std::uint64_t smp_seed = 0;
    sample->add_option("--graph", smp_graph, "edge-list path")->required();
    sample->add_option("--bandwidth", smp_k, "signal bandwidth K")->required();
    sample->add_option("--budget", smp_m, "sample budget M")->required();
    sample->add_option("--out", smp_out, "output sample-set path (one index per line)")->required();
    sample->add_option("--basis", smp_basis, "exact | fgft (default exact)");
    sample->add_option("--j-factor", smp_jfactor, "rotations = round(factor * N * ln N)");
    sample->add_option("--shift-policy", smp_policy,
                       "condition-number | fixed | diagonal-average");
    sample->add_option("--kappa0", smp_kappa0, "condition-number bound");
    sample->add_option("--mu", smp_mu, "fixed shift value");
    sample->add_option("--method", smp_method, "gfs | random | oracle-greedy");
    sample->add_option("--seed", smp_seed, "seed (random method)");
    sample->callback([&] {
        const gfs::Graph g = gfs::load_edge_list(smp_graph);
        const gfs::LaplacianView lap = gfs::build_laplacian(g);
        const gfs::SpectralBasis basis = make_basis(lap, smp_basis, smp_jfactor);
        const gfs::LowPassFilter filter = gfs::lp_filter(basis, smp_k);
        const double mu =
            gfs::resolve_mu(make_shift(smp_policy, smp_kappa0, smp_mu), filter, smp_m);
        std::vector<int> set;
        double obj = 0.0;
        if (smp_method == "gfs") {
            const gfs::GfsState state = gfs::gfs_sample(filter, mu, smp_m);
            set = state.sample_set;
            obj = state.objective;
        } else if (smp_method == "random") {
            set = gfs::random_sample(g.node_count(), smp_m, smp_seed);
            obj = gfs::objective(filter, mu, set);
        } else if (smp_method == "oracle-greedy") {
            set = gfs::naive_a_optimal_greedy(basis, smp_k, mu, smp_m);
            obj = gfs::objective(filter, mu, set);
        } else {
            throw gfs::ConfigError("unknown method '" + smp_method + "'");
        }
        write_index_file(set, smp_out);
        std::cerr << "selected " << set.size() << " nodes (shift " << mu
                  << ", trace objective " << obj << ") -> " << smp_out << "\n";
    });

    // ---- reconstruct -----------------------------------------------------
    auto* rec = app.add_subcommand("reconstruct",
                                   "reconstruct a bandlimited signal from samples");
    std::string rec_graph, rec_samples, rec_values, rec_out, rec_method = "ls",
                rec_basis = "exact";
    int rec_k = 1;
    double rec_jfactor = 6.0, rec_beta = 0.0;
    bool rec_beta_set = false;
    rec->add_option("--graph", rec_graph, "edge-list path")->required();
    rec->add_option("--samples", rec_samples, "sample-set path (one index per line)")->required();
    rec->add_option("--values", rec_values, "observed values path (one real per line)")->required();
    rec->add_option("--bandwidth", rec_k, "signal bandwidth K")->required();
    rec->add_option("--out", rec_out, "output CSV path (node,value)")->required();
    rec->add_option("--method", rec_method, "ls | gfs-biased (default ls)");
    rec->add_option("--basis", rec_basis, "exact | fgft, for the biased filter");
    rec->add_option("--j-factor", rec_jfactor, "rotations = round(factor * N * ln N)");
    rec->add_option("--beta", rec_beta, "bias parameter (default: diagonal average)")
        ->each([&](const std::string&) { rec_beta_set = true; });
    rec->callback([&] {
        const gfs::Graph g = gfs::load_edge_list(rec_graph);
        const gfs::LaplacianView lap = gfs::build_laplacian(g);
        gfs::ObservedSamples obs;
        obs.sample_set = read_index_file(rec_samples);
        obs.values = read_value_file(rec_values);
        if (obs.values.size() != static_cast<Eigen::Index>(obs.sample_set.size()))
            throw gfs::LengthMismatch("sample and value files differ in length");
        gfs::Reconstruction out;
        if (rec_method == "ls") {
            out = gfs::ls_reconstruct(gfs::exact_eigendecompose(lap), rec_k, obs);
        } else if (rec_method == "gfs-biased") {
            const gfs::SpectralBasis basis = make_basis(lap, rec_basis, rec_jfactor);
            const gfs::LowPassFilter filter = gfs::lp_filter(basis, rec_k);
            const double beta =
                rec_beta_set ? rec_beta
                             : gfs::select_beta(filter,
                                                static_cast<int>(obs.sample_set.size()));
            out = gfs::gfs_reconstruct(filter, beta, obs);
        } else {
            throw gfs::ConfigError("unknown reconstruction method '" + rec_method + "'");
        }
        write_signal_csv(out.signal, rec_out);
        std::cerr << "reconstructed " << out.signal.size() << " node values -> "
                  << rec_out << "\n";
    });

    // ---- static-bench / dynamic-bench -------------------------------------
    auto* sbench = app.add_subcommand("static-bench", "run a static sampling benchmark");
    std::string sbench_config, sbench_out;
    sbench->add_option("--config", sbench_config, "config file path")->required();
    sbench->add_option("--out", sbench_out, "output CSV path")->required();
    sbench->callback([&] {
        const gfs::ExperimentConfig cfg = gfs::parse_config_file(sbench_config);
        gfs::emit_csv(gfs::run_static(cfg), sbench_out);
        std::cerr << "wrote records to " << sbench_out << "\n";
    });

    auto* dbench = app.add_subcommand("dynamic-bench",
                                      "run a time-varying availability benchmark");
    std::string dbench_config, dbench_out, dbench_trace;
    dbench->add_option("--config", dbench_config, "config file path")->required();
    dbench->add_option("--out", dbench_out, "output CSV path")->required();
    dbench->add_option("--trace-out", dbench_trace,
                       "optional availability-trace CSV (t,node,state)");
    dbench->callback([&] {
        const gfs::ExperimentConfig cfg = gfs::parse_config_file(dbench_config);
        const std::filesystem::path trace_path = dbench_trace;
        gfs::emit_csv(gfs::run_dynamic(cfg, dbench_trace.empty() ? nullptr : &trace_path),
                      dbench_out);
        std::cerr << "wrote records to " << dbench_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // --help exits cleanly
    } catch (const gfs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
