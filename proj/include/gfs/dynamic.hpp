#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gfs/exec.hpp"
#include "gfs/graph.hpp"
#include "gfs/sampler.hpp"

namespace gfs {

// Random node availability: every node's on/off state flips independently
// with probability eps per step.  The trajectory is a pure function of
// (seed, step).
struct AvailabilityProcess {
    double p0 = 0.8;
    double eps = 0.02;
    std::uint64_t seed = 0;
    int step = 0;
    std::vector<char> mask;  // z^t, length N

    // Initial mask: round(p0 * N) distinct nodes drawn uniformly.
    static AvailabilityProcess init(int n, double p0, double eps, std::uint64_t seed);

    int available_count() const;
    std::vector<int> available_nodes() const;
};

AvailabilityProcess evolve_availability(const AvailabilityProcess& proc);

// Partition of the previous sample set against the new availability mask:
// sa = still-available selected nodes, su = selected-but-gone nodes,
// ua = available-but-unselected candidates.
struct ExchangeSets {
    std::vector<int> sa;
    std::vector<int> su;
    std::vector<int> ua;
};

ExchangeSets compute_exchange_sets(const std::vector<int>& sample_set,
                                   const std::vector<char>& avail);

struct ExchangeConfig {
    int k0 = 50;  // accepted-swap cap for the improvement phase
};

// Diagnostics from one gfs_ne call.
struct ExchangeReport {
    int replaced = 0;                      // forced replacements (phase 1)
    int accepted_swaps = 0;                // improving swaps (phase 2)
    int degenerate_fallbacks = 0;          // dense solves after update breakdown
    double objective_after_phase1 = 0.0;
    std::vector<double> swap_objectives;   // trace after each accepted swap
};

// Replaces node j (at its position within S) by node k via two rank-1
// inverse updates; returns the new inverse.  Throws DegenerateUpdate when an
// update denominator falls below 1e-12 in magnitude.
Eigen::MatrixXd sm_rank1_exchange(const Eigen::MatrixXd& g_inv,
                                  const std::vector<int>& S, int j, int k,
                                  const Eigen::MatrixXd& G);

// Node exchange under a new availability mask.  Phase 1 replaces each
// unavailable selected node with the best available candidate; phase 2 makes
// first-improvement swaps over the phase-1 set until cfg.k0 accepted swaps
// or scan exhaustion.  G is the full filter-plus-shift matrix.  If the
// current set is still fully available the state is returned unchanged.
GfsState gfs_ne(const GfsState& state, const Eigen::MatrixXd& G,
                const std::vector<char>& avail, const ExchangeConfig& cfg,
                Exec exec = Exec::OpenMp, ExchangeReport* report = nullptr);

// Spectral-proxy cutoff frequency of the complement of S:
// (smallest eigenvalue of (L^k)^T L^k restricted to S-complement)^(1/2k).
// Returns +infinity when the complement is empty.
double cutoff_frequency(const LaplacianView& lap, const std::vector<int>& S,
                        int proxy_order);

struct ScreenResult {
    bool good = false;
    double threshold = 0.0;  // calibration quantile
    double value = 0.0;      // cutoff frequency of the screened set
};

// Calibrates a cutoff threshold from `calib_draws` random same-size sets
// (ascending `quantile_rank`-th value) and flags the availability set good
// when its own cutoff exceeds the threshold.
ScreenResult screen_initial_set(const LaplacianView& lap,
                                const std::vector<char>& avail, int proxy_order,
                                int calib_draws, int quantile_rank,
                                std::uint64_t seed);

}  // namespace gfs
