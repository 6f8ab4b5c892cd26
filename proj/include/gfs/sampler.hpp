#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gfs/exec.hpp"
#include "gfs/spectral.hpp"

namespace gfs {

// How the augmented shift mu in G = T + mu*I is chosen.  ConditionNumber
// derives mu = 1/(kappa0 - 1) from a target condition-number bound;
// DiagonalAverage reuses the reconstruction bias parameter beta (average of
// the sample-budget smallest diagonal entries of T over K).
struct ShiftPolicy {
    enum class Kind { ConditionNumber, Fixed, DiagonalAverage };
    Kind kind = Kind::ConditionNumber;
    double kappa0 = 100.0;  // ConditionNumber
    double mu = 0.0;        // Fixed

    static ShiftPolicy condition_number(double kappa0) {
        return {Kind::ConditionNumber, kappa0, 0.0};
    }
    static ShiftPolicy fixed(double mu) { return {Kind::Fixed, 0.0, mu}; }
    static ShiftPolicy diagonal_average() { return {Kind::DiagonalAverage, 0.0, 0.0}; }
};

double resolve_mu(const ShiftPolicy& policy, const LowPassFilter& filter,
                  int sample_budget);

// Greedy sampling state: the selected nodes in insertion order and the
// maintained inverse of G_S.
struct GfsState {
    std::vector<int> sample_set;
    Eigen::MatrixXd g_inverse;
    double objective = 0.0;  // tr(g_inverse)

    // Frobenius norm of G_S * g_inverse - I; the drift monitor.
    double inverse_residual(const Eigen::MatrixXd& G) const;
    // From-scratch fallback for long runs: recompute g_inverse from G.
    void rebuild_inverse(const Eigen::MatrixXd& G);
};

// tr((T_S + mu*I)^-1) by direct factorization; the reference path the greedy
// never calls.
double objective(const LowPassFilter& filter, double mu, const std::vector<int>& S);

// One-column bordering update: given (G_S)^-1, the new column g_i = G_{S,i}
// and the diagonal entry G_ii, returns (G_{S+i})^-1.  Throws NonPositiveSchur
// when the Schur complement h = G_ii - g_i^T (G_S)^-1 g_i falls below 1e-14.
Eigen::MatrixXd block_inverse_extend(const Eigen::MatrixXd& g_inv,
                                     const Eigen::VectorXd& g_i, double G_ii);

// Greedy A-optimal sampling on G = filter.matrix + mu*I: picks argmax G_ii
// first, then the trace-minimizing extension each step (ties to the smallest
// node index).  `allowed`, when given, restricts candidates to mask-true
// nodes.  Exec::OpenMp and Exec::Serial yield identical results.
GfsState gfs_sample(const LowPassFilter& filter, double mu, int budget,
                    Exec exec = Exec::OpenMp,
                    const std::vector<char>* allowed = nullptr);

// Exhaustive-inversion greedy on the K x K information matrix
// (C V_K)^T (C V_K) + mu*I; the slow oracle whose trajectory the fast
// sampler must reproduce exactly.
std::vector<int> naive_a_optimal_greedy(const SpectralBasis& basis, int K,
                                        double mu, int budget);

// Uniform sampling without replacement, deterministic in seed.
std::vector<int> random_sample(int n, int budget, std::uint64_t seed);

// Approximate-supermodularity constant alpha = mu^3 (mu+2) / (mu+1)^4 of the
// augmented objective, and the resulting greedy guarantee factor e^{-alpha}.
double supermodularity_bound(double mu);
double greedy_guarantee_factor(double mu);

}  // namespace gfs
