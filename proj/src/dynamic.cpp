#include "gfs/dynamic.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "gfs/errors.hpp"
#include "gfs/rng.hpp"

namespace gfs {

namespace {

constexpr double kDenominatorFloor = 1e-12;
constexpr int kRefreshInterval = 64;

inline Eigen::MatrixXd submatrix(const Eigen::MatrixXd& G, const std::vector<int>& S) {
    const int m = static_cast<int>(S.size());
    Eigen::MatrixXd out(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) out(r, c) = G(S[static_cast<std::size_t>(r)], S[static_cast<std::size_t>(c)]);
    return out;
}

inline Eigen::MatrixXd direct_inverse(const Eigen::MatrixXd& G, const std::vector<int>& S) {
    const int m = static_cast<int>(S.size());
    return submatrix(G, S).ldlt().solve(Eigen::MatrixXd::Identity(m, m));
}

// The two rank-1 update vectors for replacing S[i] = j with k:
// row/column i of G_S moves from G's j-slice to k's slice.
inline void exchange_vectors(const Eigen::MatrixXd& G, const std::vector<int>& S,
                             int i, int j, int k, Eigen::VectorXd& p,
                             Eigen::VectorXd& q) {
    const int m = static_cast<int>(S.size());
    p.resize(m);
    for (int r = 0; r < m; ++r) {
        const int node = r == i ? k : S[static_cast<std::size_t>(r)];
        p(r) = G(node, k) - G(S[static_cast<std::size_t>(r)], j);
    }
    q = p;
    q(i) -= G(k, k) - G(j, j);
}

// Trace of the exchanged inverse without materializing it; returns NaN when
// an update denominator degenerates (caller falls back to a dense solve).
double exchange_trace(const Eigen::MatrixXd& g_inv, const std::vector<int>& S,
                      int i, int j, int k, const Eigen::MatrixXd& G) {
    Eigen::VectorXd p, q;
    exchange_vectors(G, S, i, j, k, p, q);
    const Eigen::VectorXd u = g_inv.col(i);       // G_S^-1 e_i
    const Eigen::VectorXd v = g_inv * p;          // G_S^-1 p
    const double den1 = 1.0 + v(i);               // 1 + p^T G_S^-1 e_i
    if (std::abs(den1) <= kDenominatorFloor) return std::numeric_limits<double>::quiet_NaN();
    const double trace_f = g_inv.trace() - u.dot(v) / den1;
    // F^-1 = G_S^-1 - u v^T / den1 applied to q and to e_i's row.
    const Eigen::VectorXd w = g_inv * q - u * (v.dot(q) / den1);   // F^-1 q
    Eigen::VectorXd row_i = u - v * (u(i) / den1);                 // (e_i^T F^-1)^T
    const double den2 = 1.0 + row_i.dot(q);
    if (std::abs(den2) <= kDenominatorFloor) return std::numeric_limits<double>::quiet_NaN();
    return trace_f - row_i.dot(w) / den2;
}

struct Best {
    double score = std::numeric_limits<double>::infinity();
    int node = std::numeric_limits<int>::max();
};

inline void consider(Best& best, double score, int node) {
    if (score < best.score || (score == best.score && node < best.node))
        best = {score, node};
}

// Minimum-trace replacement for position i over `candidates`; NaN scores are
// re-evaluated with a dense solve so breakdown never silently drops a node.
Best scan_replacements(const Eigen::MatrixXd& g_inv, const std::vector<int>& S,
                       int i, int j, const std::vector<int>& candidates,
                       const Eigen::MatrixXd& G, Exec exec, int* fallbacks) {
    const int count = static_cast<int>(candidates.size());
    Best best;
    int degenerate = 0;
    auto evaluate = [&](int idx) {
        const int k = candidates[static_cast<std::size_t>(idx)];
        double score = exchange_trace(g_inv, S, i, j, k, G);
        if (std::isnan(score)) {
            std::vector<int> swapped = S;
            swapped[static_cast<std::size_t>(i)] = k;
            score = direct_inverse(G, swapped).trace();
#pragma omp atomic
            ++degenerate;
        }
        return score;
    };
    if (exec == Exec::OpenMp) {
#pragma omp parallel
        {
            Best local;
#pragma omp for schedule(static) nowait
            for (int idx = 0; idx < count; ++idx)
                consider(local, evaluate(idx), candidates[static_cast<std::size_t>(idx)]);
#pragma omp critical(gfs_ne_scan_reduce)
            consider(best, local.score, local.node);
        }
    } else {
        for (int idx = 0; idx < count; ++idx)
            consider(best, evaluate(idx), candidates[static_cast<std::size_t>(idx)]);
    }
    if (fallbacks) *fallbacks += degenerate;
    return best;
}

// Materialize the exchanged inverse, falling back to dense inversion when the
// rank-1 path degenerates.
void apply_exchange(GfsState& state, int i, int k, const Eigen::MatrixXd& G,
                    int* fallbacks) {
    const int j = state.sample_set[static_cast<std::size_t>(i)];
    try {
        state.g_inverse = sm_rank1_exchange(state.g_inverse, state.sample_set, j, k, G);
        state.sample_set[static_cast<std::size_t>(i)] = k;
    } catch (const DegenerateUpdate&) {
        state.sample_set[static_cast<std::size_t>(i)] = k;
        state.g_inverse = direct_inverse(G, state.sample_set);
        if (fallbacks) ++*fallbacks;
    }
    state.objective = state.g_inverse.trace();
}

}  // namespace

AvailabilityProcess AvailabilityProcess::init(int n, double p0, double eps,
                                              std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("node count must be positive");
    if (p0 < 0.0 || p0 > 1.0 || eps < 0.0 || eps > 1.0)
        throw std::invalid_argument("probabilities must be in [0, 1]");
    AvailabilityProcess proc;
    proc.p0 = p0;
    proc.eps = eps;
    proc.seed = seed;
    proc.step = 0;
    proc.mask.assign(static_cast<std::size_t>(n), 0);
    const int m = static_cast<int>(std::lround(p0 * n));
    Rng rng(hash_combine(seed, 0));
    for (int i : sample_without_replacement(n, m, rng))
        proc.mask[static_cast<std::size_t>(i)] = 1;
    return proc;
}

int AvailabilityProcess::available_count() const {
    return static_cast<int>(std::count(mask.begin(), mask.end(), char(1)));
}

std::vector<int> AvailabilityProcess::available_nodes() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.push_back(static_cast<int>(i));
    return out;
}

AvailabilityProcess evolve_availability(const AvailabilityProcess& proc) {
    AvailabilityProcess next = proc;
    next.step = proc.step + 1;
    Rng rng(hash_combine(proc.seed, static_cast<std::uint64_t>(next.step)));
    for (std::size_t i = 0; i < next.mask.size(); ++i)
        if (rng.bernoulli(proc.eps)) next.mask[i] = !next.mask[i];
    return next;
}

ExchangeSets compute_exchange_sets(const std::vector<int>& sample_set,
                                   const std::vector<char>& avail) {
    ExchangeSets sets;
    std::vector<char> in_set(avail.size(), 0);
    for (int s : sample_set) in_set[static_cast<std::size_t>(s)] = 1;
    std::vector<int> sorted = sample_set;
    std::sort(sorted.begin(), sorted.end());
    for (int s : sorted)
        (avail[static_cast<std::size_t>(s)] ? sets.sa : sets.su).push_back(s);
    for (std::size_t i = 0; i < avail.size(); ++i)
        if (avail[i] && !in_set[i]) sets.ua.push_back(static_cast<int>(i));
    return sets;
}

Eigen::MatrixXd sm_rank1_exchange(const Eigen::MatrixXd& g_inv,
                                  const std::vector<int>& S, int j, int k,
                                  const Eigen::MatrixXd& G) {
    const auto pos = std::find(S.begin(), S.end(), j);
    if (pos == S.end()) throw std::invalid_argument("node j is not in the sample set");
    if (std::find(S.begin(), S.end(), k) != S.end())
        throw std::invalid_argument("node k is already in the sample set");
    const int i = static_cast<int>(pos - S.begin());
    const int m = static_cast<int>(S.size());

    Eigen::VectorXd p, q;
    exchange_vectors(G, S, i, j, k, p, q);

    const Eigen::VectorXd u = g_inv.col(i);
    const Eigen::VectorXd v = g_inv * p;
    const double den1 = 1.0 + v(i);
    if (std::abs(den1) <= kDenominatorFloor)
        throw DegenerateUpdate("first update denominator " + std::to_string(den1));
    const Eigen::MatrixXd f_inv = g_inv - (u * v.transpose()) / den1;

    const Eigen::VectorXd fq = f_inv * q;
    const Eigen::VectorXd fi_row = f_inv.row(i).transpose();
    const double den2 = 1.0 + fi_row.dot(q);
    if (std::abs(den2) <= kDenominatorFloor)
        throw DegenerateUpdate("second update denominator " + std::to_string(den2));
    Eigen::MatrixXd out = f_inv - (fq * fi_row.transpose()) / den2;
    // The exact result is symmetric; wash out the asymmetric roundoff the two
    // one-sided updates leave behind.
    out = ((out + out.transpose()) * 0.5).eval();
    (void)m;
    return out;
}

GfsState gfs_ne(const GfsState& state, const Eigen::MatrixXd& G,
                const std::vector<char>& avail, const ExchangeConfig& cfg,
                Exec exec, ExchangeReport* report) {
    if (cfg.k0 < 0) throw std::invalid_argument("swap cap must be non-negative");
    if (avail.size() != static_cast<std::size_t>(G.rows()))
        throw std::invalid_argument("availability mask length mismatch");
    const int m = static_cast<int>(state.sample_set.size());
    const int available =
        static_cast<int>(std::count(avail.begin(), avail.end(), char(1)));
    if (available < m)
        throw InfeasibleAvailability("only " + std::to_string(available) +
                                     " nodes available for a sample set of " +
                                     std::to_string(m));
    ExchangeReport local_report;
    ExchangeReport& rep = report ? *report : local_report;
    rep = ExchangeReport{};

    const ExchangeSets sets = compute_exchange_sets(state.sample_set, avail);
    if (sets.su.empty()) {
        rep.objective_after_phase1 = state.objective;
        return state;  // the whole set survived; leave it untouched
    }

    GfsState next = state;
    std::vector<char> in_set(avail.size(), 0);
    for (int s : next.sample_set) in_set[static_cast<std::size_t>(s)] = 1;

    // Phase 1: force out each vanished node, best available replacement,
    // candidates consumed as they are used.
    std::vector<int> candidates = sets.ua;
    int updates = 0;
    for (int j : sets.su) {
        const int i = static_cast<int>(
            std::find(next.sample_set.begin(), next.sample_set.end(), j) -
            next.sample_set.begin());
        const Best pick = scan_replacements(next.g_inverse, next.sample_set, i, j,
                                            candidates, G, exec,
                                            &rep.degenerate_fallbacks);
        apply_exchange(next, i, pick.node, G, &rep.degenerate_fallbacks);
        in_set[static_cast<std::size_t>(j)] = 0;
        in_set[static_cast<std::size_t>(pick.node)] = 1;
        candidates.erase(std::find(candidates.begin(), candidates.end(), pick.node));
        ++rep.replaced;
        if (++updates % kRefreshInterval == 0) next.rebuild_inverse(G);
#ifndef NDEBUG
        assert(next.inverse_residual(G) <= 1e-6 * static_cast<double>(m));
#endif
    }
    rep.objective_after_phase1 = next.objective;

    // Phase 2: first-improvement swaps over the frozen position list and the
    // frozen pool of unselected available nodes.
    std::vector<int> pool;
    for (std::size_t i = 0; i < avail.size(); ++i)
        if (avail[i] && !in_set[i]) pool.push_back(static_cast<int>(i));
    for (int i = 0; i < m && rep.accepted_swaps < cfg.k0; ++i) {
        for (int k : pool) {
            if (rep.accepted_swaps >= cfg.k0) break;
            if (in_set[static_cast<std::size_t>(k)]) continue;
            const int j = next.sample_set[static_cast<std::size_t>(i)];
            double score = exchange_trace(next.g_inverse, next.sample_set, i, j, k, G);
            if (std::isnan(score)) {
                std::vector<int> swapped = next.sample_set;
                swapped[static_cast<std::size_t>(i)] = k;
                score = direct_inverse(G, swapped).trace();
                ++rep.degenerate_fallbacks;
            }
            if (score < next.objective) {
                apply_exchange(next, i, k, G, &rep.degenerate_fallbacks);
                in_set[static_cast<std::size_t>(j)] = 0;
                in_set[static_cast<std::size_t>(k)] = 1;
                ++rep.accepted_swaps;
                rep.swap_objectives.push_back(next.objective);
                if (++updates % kRefreshInterval == 0) next.rebuild_inverse(G);
#ifndef NDEBUG
                assert(next.inverse_residual(G) <= 1e-6 * static_cast<double>(m));
#endif
            }
        }
    }
    return next;
}

double cutoff_frequency(const LaplacianView& lap, const std::vector<int>& S,
                        int proxy_order) {
    if (proxy_order < 1) throw std::invalid_argument("proxy order must be >= 1");
    const int n = static_cast<int>(lap.matrix.rows());
    std::vector<char> in_set(static_cast<std::size_t>(n), 0);
    for (int s : S) {
        if (s < 0 || s >= n) throw std::invalid_argument("node index out of range");
        in_set[static_cast<std::size_t>(s)] = 1;
    }
    std::vector<int> complement;
    for (int i = 0; i < n; ++i)
        if (!in_set[static_cast<std::size_t>(i)]) complement.push_back(i);
    if (complement.empty()) return std::numeric_limits<double>::infinity();

    Eigen::MatrixXd lk = lap.matrix;
    for (int e = 1; e < proxy_order; ++e) lk = (lk * lap.matrix).eval();
    const Eigen::MatrixXd squared = lk.transpose() * lk;
    const int c = static_cast<int>(complement.size());
    Eigen::MatrixXd sub(c, c);
    for (int r = 0; r < c; ++r)
        for (int col = 0; col < c; ++col)
            sub(r, col) = squared(complement[static_cast<std::size_t>(r)],
                                  complement[static_cast<std::size_t>(col)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sub, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("eigensolve failed in cutoff estimate");
    const double lambda = std::max(0.0, solver.eigenvalues()(0));
    return std::pow(lambda, 1.0 / (2.0 * proxy_order));
}

ScreenResult screen_initial_set(const LaplacianView& lap,
                                const std::vector<char>& avail, int proxy_order,
                                int calib_draws, int quantile_rank,
                                std::uint64_t seed) {
    if (calib_draws < quantile_rank || quantile_rank < 1)
        throw std::invalid_argument("need calib_draws >= quantile_rank >= 1");
    const int n = static_cast<int>(lap.matrix.rows());
    if (avail.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("availability mask length mismatch");
    std::vector<int> set;
    for (int i = 0; i < n; ++i)
        if (avail[static_cast<std::size_t>(i)]) set.push_back(i);

    ScreenResult result;
    result.value = cutoff_frequency(lap, set, proxy_order);
    if (std::isinf(result.value)) {  // full availability is always usable
        result.threshold = result.value;
        result.good = true;
        return result;
    }
    std::vector<double> calib(static_cast<std::size_t>(calib_draws));
    for (int d = 0; d < calib_draws; ++d) {
        Rng rng(hash_combine(seed, static_cast<std::uint64_t>(d)));
        const std::vector<int> draw =
            sample_without_replacement(n, static_cast<int>(set.size()), rng);
        calib[static_cast<std::size_t>(d)] = cutoff_frequency(lap, draw, proxy_order);
    }
    std::sort(calib.begin(), calib.end());
    result.threshold = calib[static_cast<std::size_t>(quantile_rank - 1)];
    result.good = result.value > result.threshold;
    return result;
}

}  // namespace gfs
