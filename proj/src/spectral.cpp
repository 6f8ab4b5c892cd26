#include "gfs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "gfs/errors.hpp"

namespace gfs {

SpectralBasis exact_eigendecompose(const LaplacianView& lap, int oracle_cap) {
    const int n = static_cast<int>(lap.matrix.rows());
    if (n > oracle_cap)
        throw std::invalid_argument("matrix exceeds the exact-eigensolve cap");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap.matrix);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailure("symmetric eigensolver did not converge");
    SpectralBasis basis;
    basis.vectors = solver.eigenvectors();
    basis.values = solver.eigenvalues();
    basis.kind = BasisKind::Exact;
    return basis;
}

SpectralBasis truncated_jacobi(const LaplacianView& lap, int rotations,
                               JacobiTrace* trace) {
    if (rotations < 0)
        throw std::invalid_argument("rotation count must be non-negative");
    const int n = static_cast<int>(lap.matrix.rows());
    Eigen::MatrixXd A = lap.matrix;
    Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);

    // Per-row cache of the strict-upper-triangle maximum, so each pivot
    // search is O(N) instead of O(N^2).  Ties keep the smallest column, and
    // the global scan keeps the smallest row, giving the lexicographic
    // pivot rule exactly.
    std::vector<double> max_val(static_cast<std::size_t>(n), -1.0);
    std::vector<int> max_col(static_cast<std::size_t>(n), -1);
    auto rescan_row = [&](int i) {
        double best = -1.0;
        int col = -1;
        for (int j = i + 1; j < n; ++j) {
            const double a = std::abs(A(i, j));
            if (a > best) {
                best = a;
                col = j;
            }
        }
        max_val[static_cast<std::size_t>(i)] = best;
        max_col[static_cast<std::size_t>(i)] = col;
    };
    for (int i = 0; i < n; ++i) rescan_row(i);

    double energy = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) energy += 2.0 * A(i, j) * A(i, j);
    if (trace) {
        trace->offdiag_energy.clear();
        trace->offdiag_energy.push_back(energy);
    }

    SpectralBasis basis;
    basis.kind = BasisKind::Fgft;
    basis.requested_rotations = rotations;
    basis.rotations.reserve(static_cast<std::size_t>(std::min(rotations, 4 * n * n)));

    for (int step = 0; step < rotations; ++step) {
        int p = -1;
        double best = 0.0;
        for (int i = 0; i < n; ++i) {
            if (max_val[static_cast<std::size_t>(i)] > best) {
                best = max_val[static_cast<std::size_t>(i)];
                p = i;
            }
        }
        if (p < 0) break;  // working matrix already diagonal
        const int q = max_col[static_cast<std::size_t>(p)];

        const double apq = A(p, q);
        const double app = A(p, p);
        const double aqq = A(q, q);
        // Stable rotation angle: t is the smaller root of t^2 + 2*tau*t - 1.
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (int i = 0; i < n; ++i) {
            if (i == p || i == q) continue;
            const double aip = A(i, p);
            const double aiq = A(i, q);
            A(i, p) = A(p, i) = c * aip - s * aiq;
            A(i, q) = A(q, i) = s * aip + c * aiq;
        }
        A(p, p) = app - t * apq;
        A(q, q) = aqq + t * apq;
        A(p, q) = A(q, p) = 0.0;

        for (int i = 0; i < n; ++i) {
            const double vip = V(i, p);
            const double viq = V(i, q);
            V(i, p) = c * vip - s * viq;
            V(i, q) = s * vip + c * viq;
        }

        basis.rotations.push_back({p, q, c, s});
        energy = std::max(0.0, energy - 2.0 * apq * apq);
        if (trace) trace->offdiag_energy.push_back(energy);

        rescan_row(p);
        rescan_row(q);
        for (int i = 0; i < n; ++i) {
            if (i == p || i == q) continue;
            const int cached = max_col[static_cast<std::size_t>(i)];
            if (cached == p || cached == q) {
                rescan_row(i);
                continue;
            }
            for (int j : {p, q}) {
                if (j <= i) continue;
                const double a = std::abs(A(i, j));
                if (a > max_val[static_cast<std::size_t>(i)] ||
                    (a == max_val[static_cast<std::size_t>(i)] && j < cached)) {
                    max_val[static_cast<std::size_t>(i)] = a;
                    max_col[static_cast<std::size_t>(i)] = j;
                }
            }
        }
    }

    // Sort columns by the working diagonal, stably, and keep the permutation
    // so the rotation-list application path can reproduce sorted coefficients.
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int a, int b) { return A(a, a) < A(b, b); });
    basis.vectors.resize(n, n);
    basis.values.resize(n);
    for (int j = 0; j < n; ++j) {
        basis.vectors.col(j) = V.col(perm[static_cast<std::size_t>(j)]);
        basis.values(j) = A(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(j)]);
    }
    basis.permutation = std::move(perm);
    return basis;
}

LowPassFilter lp_filter(const SpectralBasis& basis, int K) {
    const int n = static_cast<int>(basis.vectors.rows());
    if (K < 1 || K > n) throw std::invalid_argument("bandwidth must be in [1, N]");
    LowPassFilter filter;
    const auto vk = basis.vectors.leftCols(K);
    filter.matrix = vk * vk.transpose();
    filter.bandwidth = K;
    filter.source_kind = basis.kind;
    return filter;
}

double fgft_error(const LaplacianView& lap, const SpectralBasis& basis, int K) {
    const SpectralBasis exact = exact_eigendecompose(lap);
    const LowPassFilter ideal = lp_filter(exact, K);
    const LowPassFilter approx = lp_filter(basis, K);
    return (ideal.matrix - approx.matrix).norm() / ideal.matrix.norm();
}

Eigen::VectorXd apply_basis_transpose(const SpectralBasis& basis,
                                      const Eigen::VectorXd& x) {
    const int n = static_cast<int>(basis.vectors.rows());
    if (x.size() != n) throw LengthMismatch("signal length does not match basis");
    if (basis.kind == BasisKind::Exact || basis.permutation.empty())
        return basis.vectors.transpose() * x;
    Eigen::VectorXd y = x;
    for (const GivensRotation& r : basis.rotations) {
        const double yp = y(r.p);
        const double yq = y(r.q);
        // R^T action on the vector: rows of R^T are (c, -s) and (s, c).
        y(r.p) = r.c * yp - r.s * yq;
        y(r.q) = r.s * yp + r.c * yq;
    }
    Eigen::VectorXd out(n);
    for (int j = 0; j < n; ++j) out(j) = y(basis.permutation[static_cast<std::size_t>(j)]);
    return out;
}

}  // namespace gfs
