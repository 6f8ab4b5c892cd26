#include "gfs/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gfs/errors.hpp"
#include "gfs/reconstruction.hpp"
#include "gfs/rng.hpp"

namespace gfs {

namespace {

constexpr double kSchurFloor = 1e-14;
constexpr int kRefreshInterval = 64;

struct Best {
    double score = std::numeric_limits<double>::infinity();
    int node = std::numeric_limits<int>::max();
};

// Total order on (score, node); makes the scan result independent of
// traversal or thread schedule.
inline void consider(Best& best, double score, int node) {
    if (score < best.score || (score == best.score && node < best.node))
        best = {score, node};
}

inline Eigen::MatrixXd submatrix(const Eigen::MatrixXd& G, const std::vector<int>& S) {
    const int m = static_cast<int>(S.size());
    Eigen::MatrixXd out(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) out(r, c) = G(S[static_cast<std::size_t>(r)], S[static_cast<std::size_t>(c)]);
    return out;
}

// Trace increment of the one-column bordering update.  Algebraically equal to
// extending the inverse and taking the trace difference; the full extended
// matrix is built only for the winning candidate.
inline double trace_increment(const Eigen::MatrixXd& g_inv, const Eigen::VectorXd& g_i,
                              double G_ii, Eigen::VectorXd& w) {
    w.noalias() = g_inv * g_i;
    const double h = G_ii - g_i.dot(w);
    if (h <= kSchurFloor) return std::numeric_limits<double>::infinity();
    return (1.0 + w.squaredNorm()) / h;
}

Best scan_serial(const Eigen::MatrixXd& G, const Eigen::MatrixXd& g_inv,
                 const std::vector<int>& S, const std::vector<char>& eligible) {
    const int n = static_cast<int>(G.rows());
    const int m = static_cast<int>(S.size());
    Best best;
    Eigen::VectorXd g(m), w(m);
    for (int i = 0; i < n; ++i) {
        if (!eligible[static_cast<std::size_t>(i)]) continue;
        for (int r = 0; r < m; ++r) g(r) = G(S[static_cast<std::size_t>(r)], i);
        consider(best, trace_increment(g_inv, g, G(i, i), w), i);
    }
    return best;
}

Best scan_openmp(const Eigen::MatrixXd& G, const Eigen::MatrixXd& g_inv,
                 const std::vector<int>& S, const std::vector<char>& eligible) {
#ifdef _OPENMP
    const int n = static_cast<int>(G.rows());
    const int m = static_cast<int>(S.size());
    Best best;
#pragma omp parallel
    {
        Best local;
        Eigen::VectorXd g(m), w(m);
#pragma omp for schedule(static) nowait
        for (int i = 0; i < n; ++i) {
            if (!eligible[static_cast<std::size_t>(i)]) continue;
            for (int r = 0; r < m; ++r) g(r) = G(S[static_cast<std::size_t>(r)], i);
            consider(local, trace_increment(g_inv, g, G(i, i), w), i);
        }
#pragma omp critical(gfs_scan_reduce)
        consider(best, local.score, local.node);
    }
    return best;
#else
    return scan_serial(G, g_inv, S, eligible);
#endif
}

}  // namespace

double resolve_mu(const ShiftPolicy& policy, const LowPassFilter& filter,
                  int sample_budget) {
    double mu = 0.0;
    switch (policy.kind) {
        case ShiftPolicy::Kind::ConditionNumber:
            mu = 1.0 / (policy.kappa0 - 1.0);
            break;
        case ShiftPolicy::Kind::Fixed:
            mu = policy.mu;
            break;
        case ShiftPolicy::Kind::DiagonalAverage:
            mu = select_beta(filter, sample_budget);
            break;
    }
    if (!(mu > 0.0 && mu < 1.0))
        throw InvalidShift("resolved shift " + std::to_string(mu) +
                           " outside (0, 1)");
    return mu;
}

double GfsState::inverse_residual(const Eigen::MatrixXd& G) const {
    const Eigen::MatrixXd gs = submatrix(G, sample_set);
    const int m = static_cast<int>(sample_set.size());
    return (gs * g_inverse - Eigen::MatrixXd::Identity(m, m)).norm();
}

void GfsState::rebuild_inverse(const Eigen::MatrixXd& G) {
    const Eigen::MatrixXd gs = submatrix(G, sample_set);
    const int m = static_cast<int>(sample_set.size());
    g_inverse = gs.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
    objective = g_inverse.trace();
}

double objective(const LowPassFilter& filter, double mu, const std::vector<int>& S) {
    if (S.empty()) throw std::invalid_argument("sample set must be non-empty");
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("shift outside (0, 1)");
    const int n = static_cast<int>(filter.matrix.rows());
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int s : S) {
        if (s < 0 || s >= n) throw std::invalid_argument("sample index out of range");
        if (seen[static_cast<std::size_t>(s)])
            throw std::invalid_argument("duplicate sample index");
        seen[static_cast<std::size_t>(s)] = 1;
    }
    const int m = static_cast<int>(S.size());
    Eigen::MatrixXd gs = submatrix(filter.matrix, S);
    gs.diagonal().array() += mu;
    const auto ldlt = gs.ldlt();
    assert(ldlt.info() == Eigen::Success);  // SPD for mu > 0
    return ldlt.solve(Eigen::MatrixXd::Identity(m, m)).trace();
}

Eigen::MatrixXd block_inverse_extend(const Eigen::MatrixXd& g_inv,
                                     const Eigen::VectorXd& g_i, double G_ii) {
    const int m = static_cast<int>(g_inv.rows());
    const Eigen::VectorXd w = g_inv * g_i;
    const double h = G_ii - g_i.dot(w);
    if (h <= kSchurFloor)
        throw NonPositiveSchur("Schur complement " + std::to_string(h) +
                               " not positive");
    Eigen::MatrixXd out(m + 1, m + 1);
    out.topLeftCorner(m, m) = g_inv + (w * w.transpose()) / h;
    out.topRightCorner(m, 1) = -w / h;
    out.bottomLeftCorner(1, m) = -w.transpose() / h;
    out(m, m) = 1.0 / h;
    return out;
}

GfsState gfs_sample(const LowPassFilter& filter, double mu, int budget, Exec exec,
                    const std::vector<char>* allowed) {
    const int n = static_cast<int>(filter.matrix.rows());
    if (budget < 1 || budget > n)
        throw std::invalid_argument("sample budget must be in [1, N]");
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("shift outside (0, 1)");
    if (allowed && static_cast<int>(allowed->size()) != n)
        throw std::invalid_argument("availability mask length mismatch");

    std::vector<char> eligible(static_cast<std::size_t>(n), 1);
    int eligible_count = n;
    if (allowed) {
        eligible = *allowed;
        eligible_count = static_cast<int>(std::count(eligible.begin(), eligible.end(), char(1)));
    }
    if (eligible_count < budget)
        throw std::invalid_argument("sample budget exceeds eligible node count");

    Eigen::MatrixXd G = filter.matrix;
    G.diagonal().array() += mu;

    GfsState state;
    state.sample_set.reserve(static_cast<std::size_t>(budget));

    // First node: the largest diagonal entry, which is also the greedy
    // trace minimizer over singletons.
    {
        int u = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (!eligible[static_cast<std::size_t>(i)]) continue;
            if (G(i, i) > best) {
                best = G(i, i);
                u = i;
            }
        }
        state.sample_set.push_back(u);
        eligible[static_cast<std::size_t>(u)] = 0;
        state.g_inverse = Eigen::MatrixXd::Constant(1, 1, 1.0 / G(u, u));
    }

    while (static_cast<int>(state.sample_set.size()) < budget) {
        const Best winner = exec == Exec::OpenMp
                                ? scan_openmp(G, state.g_inverse, state.sample_set, eligible)
                                : scan_serial(G, state.g_inverse, state.sample_set, eligible);
        if (!std::isfinite(winner.score))
            throw NonPositiveSchur("every remaining candidate is numerically rank-deficient");
        const int m = static_cast<int>(state.sample_set.size());
        Eigen::VectorXd g(m);
        for (int r = 0; r < m; ++r) g(r) = G(state.sample_set[static_cast<std::size_t>(r)], winner.node);
        state.g_inverse = block_inverse_extend(state.g_inverse, g, G(winner.node, winner.node));
        state.sample_set.push_back(winner.node);
        eligible[static_cast<std::size_t>(winner.node)] = 0;
        if (state.sample_set.size() % kRefreshInterval == 0) state.rebuild_inverse(G);
#ifndef NDEBUG
        assert(state.inverse_residual(G) <=
               1e-6 * static_cast<double>(state.sample_set.size()));
#endif
    }
    state.objective = state.g_inverse.trace();
    return state;
}

std::vector<int> naive_a_optimal_greedy(const SpectralBasis& basis, int K,
                                        double mu, int budget) {
    const int n = static_cast<int>(basis.vectors.rows());
    if (K < 1 || K > n) throw std::invalid_argument("bandwidth must be in [1, N]");
    if (budget < 1 || budget > n)
        throw std::invalid_argument("sample budget must be in [1, N]");
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("shift outside (0, 1)");
    const Eigen::MatrixXd vk = basis.vectors.leftCols(K);

    std::vector<int> S;
    std::vector<char> in_set(static_cast<std::size_t>(n), 0);
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(K, K);  // sum of selected row outer products
    for (int step = 0; step < budget; ++step) {
        Best best;
        for (int i = 0; i < n; ++i) {
            if (in_set[static_cast<std::size_t>(i)]) continue;
            Eigen::MatrixXd cand = psi;
            cand.noalias() += vk.row(i).transpose() * vk.row(i);
            cand.diagonal().array() += mu;
            const double g = cand.ldlt().solve(Eigen::MatrixXd::Identity(K, K)).trace();
            consider(best, g, i);
        }
        S.push_back(best.node);
        in_set[static_cast<std::size_t>(best.node)] = 1;
        psi.noalias() += vk.row(best.node).transpose() * vk.row(best.node);
    }
    return S;
}

std::vector<int> random_sample(int n, int budget, std::uint64_t seed) {
    if (budget < 0 || budget > n)
        throw std::invalid_argument("sample budget must be in [0, N]");
    Rng rng(seed);
    return sample_without_replacement(n, budget, rng);
}

double supermodularity_bound(double mu) {
    // The greedy suboptimality constant; well-defined for any positive shift
    // even though the sampler itself restricts mu to (0, 1).
    if (!(mu > 0.0)) throw std::invalid_argument("shift must be positive");
    const double mp1 = mu + 1.0;
    return mu * mu * mu * (mu + 2.0) / (mp1 * mp1 * mp1 * mp1);
}

double greedy_guarantee_factor(double mu) { return std::exp(-supermodularity_bound(mu)); }

}  // namespace gfs
