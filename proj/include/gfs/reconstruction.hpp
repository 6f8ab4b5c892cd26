#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gfs/spectral.hpp"

namespace gfs {

struct ObservedSamples {
    std::vector<int> sample_set;  // ordered node indices S
    Eigen::VectorXd values;       // y_S, aligned with sample_set
    double noise_variance = 0.0;  // known omega^2, for the analytic MSEs
};

enum class ReconMethod { LeastSquares, GfsBiased };

struct Reconstruction {
    Eigen::VectorXd signal;  // length-N estimate
    ReconMethod method = ReconMethod::LeastSquares;
    double beta = 0.0;  // GfsBiased only
};

// Bias parameter: the mean of the sample-size smallest diagonal entries of
// the filter, divided by its bandwidth.  A lower bound on tr(T_S)/K over all
// size-M subsets.
double select_beta(const LowPassFilter& filter, int sample_size);

// Unbiased estimate x = V_K pinv(C V_K) y_S.  Requires numerical
// rank(C V_K) = K (singular values above 1e-10 relative).
Reconstruction ls_reconstruct(const SpectralBasis& basis, int K,
                              const ObservedSamples& obs);

// Biased estimate x = T[:, S] (T_S + beta I)^{-1} y_S through an SPD solve.
// When beta equals the sampling shift, the sampler's maintained inverse of
// (T_S + beta I) can be passed to skip the factorization.
Reconstruction gfs_reconstruct(const LowPassFilter& filter, double beta,
                               const ObservedSamples& obs,
                               const Eigen::MatrixXd* reuse_inverse = nullptr);

// Closed-form expected squared error of the biased estimator for an exactly
// bandlimited signal with frequency coefficients `coeffs`, derived on the
// ideal filter: bias^2 plus noise variance, summed over the eigenpairs of
// (C V_K)^T (C V_K).
double theoretical_mse_gfs(const SpectralBasis& basis, int K,
                           const std::vector<int>& S, double beta,
                           const Eigen::VectorXd& coeffs, double noise_variance);

// Closed-form expected squared error of the LS estimator:
// omega^2 * sum(1 / sigma_i).
double theoretical_mse_ls(const SpectralBasis& basis, int K,
                          const std::vector<int>& S, double noise_variance);

// Summed squared error ||estimate - truth||^2.
double empirical_mse(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate);

}  // namespace gfs
