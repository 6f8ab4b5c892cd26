#include "gfs/reconstruction.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "gfs/errors.hpp"

namespace gfs {

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd out(static_cast<int>(idx.size()), m.cols());
    for (int r = 0; r < out.rows(); ++r) out.row(r) = m.row(idx[static_cast<std::size_t>(r)]);
    return out;
}

void check_samples(const ObservedSamples& obs, int n) {
    if (obs.values.size() != static_cast<Eigen::Index>(obs.sample_set.size()))
        throw LengthMismatch("observed values do not match the sample set size");
    for (int s : obs.sample_set)
        if (s < 0 || s >= n) throw std::invalid_argument("sample index out of range");
}

// Eigenpairs of Psi = (C V_K)^T (C V_K); shared by both analytic MSEs.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> psi_eigs(const SpectralBasis& basis,
                                                        int K,
                                                        const std::vector<int>& S) {
    if (basis.kind != BasisKind::Exact)
        throw std::invalid_argument(
            "analytic MSE formulas are derived for the exact basis");
    const int n = static_cast<int>(basis.vectors.rows());
    if (K < 1 || K > n) throw std::invalid_argument("bandwidth must be in [1, N]");
    for (int s : S)
        if (s < 0 || s >= n) throw std::invalid_argument("sample index out of range");
    const Eigen::MatrixXd a = rows_of(basis.vectors.leftCols(K), S);
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a.transpose() * a);
}

}  // namespace

double select_beta(const LowPassFilter& filter, int sample_size) {
    const int n = static_cast<int>(filter.matrix.rows());
    if (sample_size < 1 || sample_size > n)
        throw std::invalid_argument("sample size must be in [1, N]");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const auto& t = filter.matrix;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return t(a, a) < t(b, b); });
    double sum = 0.0;
    for (int r = 0; r < sample_size; ++r) {
        const int i = order[static_cast<std::size_t>(r)];
        sum += t(i, i);
    }
    return sum / filter.bandwidth;
}

Reconstruction ls_reconstruct(const SpectralBasis& basis, int K,
                              const ObservedSamples& obs) {
    const int n = static_cast<int>(basis.vectors.rows());
    if (K < 1 || K > n) throw std::invalid_argument("bandwidth must be in [1, N]");
    check_samples(obs, n);
    const Eigen::MatrixXd vk = basis.vectors.leftCols(K);
    const Eigen::MatrixXd a = rows_of(vk, obs.sample_set);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (static_cast<int>(obs.sample_set.size()) < K || sv.size() < K ||
        sv(sv.size() - 1) <= 1e-10 * sv(0))
        throw RankDeficient("sampled basis rows do not span the band");
    Reconstruction rec;
    rec.method = ReconMethod::LeastSquares;
    rec.signal = vk * svd.solve(obs.values);
    return rec;
}

Reconstruction gfs_reconstruct(const LowPassFilter& filter, double beta,
                               const ObservedSamples& obs,
                               const Eigen::MatrixXd* reuse_inverse) {
    if (!(beta > 0.0)) throw std::invalid_argument("bias parameter must be positive");
    const int n = static_cast<int>(filter.matrix.rows());
    check_samples(obs, n);
    const int m = static_cast<int>(obs.sample_set.size());
    Eigen::VectorXd z;
    if (reuse_inverse) {
        if (reuse_inverse->rows() != m || reuse_inverse->cols() != m)
            throw std::invalid_argument("reused inverse has the wrong shape");
        z = *reuse_inverse * obs.values;
    } else {
        Eigen::MatrixXd h(m, m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c)
                h(r, c) = filter.matrix(obs.sample_set[static_cast<std::size_t>(r)],
                                        obs.sample_set[static_cast<std::size_t>(c)]);
        h.diagonal().array() += beta;
        z = h.llt().solve(obs.values);
    }
    Reconstruction rec;
    rec.method = ReconMethod::GfsBiased;
    rec.beta = beta;
    rec.signal.setZero(n);
    for (int r = 0; r < m; ++r)
        rec.signal += filter.matrix.col(obs.sample_set[static_cast<std::size_t>(r)]) * z(r);
    return rec;
}

double theoretical_mse_gfs(const SpectralBasis& basis, int K,
                           const std::vector<int>& S, double beta,
                           const Eigen::VectorXd& coeffs, double noise_variance) {
    if (!(beta > 0.0)) throw std::invalid_argument("bias parameter must be positive");
    if (coeffs.size() != K) throw LengthMismatch("coefficient vector must have length K");
    const auto eig = psi_eigs(basis, K, S);
    double bias2 = 0.0;
    double var = 0.0;
    for (int i = 0; i < K; ++i) {
        const double sigma = eig.eigenvalues()(i);
        if (sigma <= 1e-12)
            throw RankDeficient("information matrix is numerically singular");
        const double proj = eig.eigenvectors().col(i).dot(coeffs);
        const double shrink = 1.0 + sigma / beta;
        bias2 += proj * proj / (shrink * shrink);
        var += noise_variance * sigma / ((sigma + beta) * (sigma + beta));
    }
    return bias2 + var;
}

double theoretical_mse_ls(const SpectralBasis& basis, int K,
                          const std::vector<int>& S, double noise_variance) {
    const auto eig = psi_eigs(basis, K, S);
    double total = 0.0;
    for (int i = 0; i < K; ++i) {
        const double sigma = eig.eigenvalues()(i);
        if (sigma <= 1e-12)
            throw RankDeficient("information matrix is numerically singular");
        total += noise_variance / sigma;
    }
    return total;
}

double empirical_mse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate) {
    if (truth.size() != estimate.size())
        throw LengthMismatch("signal lengths differ");
    return (estimate - truth).squaredNorm();
}

}  // namespace gfs
