#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gfs/graph.hpp"

namespace gfs {

enum class BasisKind { Exact, Fgft };

// Plane rotation acting on coordinates (p, q):
//   [x_p']   [ c  s] [x_p]
//   [x_q'] = [-s  c] [x_q]
// applied as a right-multiplication column update V <- V R.
struct GivensRotation {
    int p = 0;
    int q = 0;
    double c = 1.0;
    double s = 0.0;
};

struct SpectralBasis {
    Eigen::MatrixXd vectors;  // N x N orthonormal, columns sorted by value
    Eigen::VectorXd values;   // non-decreasing
    BasisKind kind = BasisKind::Exact;

    // Fgft only: the rotation product R_1...R_J and the column permutation
    // mapping sorted column j to raw rotation-product column permutation[j].
    // Kept so the transform can be applied rotation-by-rotation.
    std::vector<GivensRotation> rotations;
    std::vector<int> permutation;
    int requested_rotations = 0;
};

struct LowPassFilter {
    Eigen::MatrixXd matrix;  // V_K V_K^T
    int bandwidth = 0;
    BasisKind source_kind = BasisKind::Exact;
};

// Dense symmetric eigensolve; the small-instance oracle.  N must not exceed
// `oracle_cap`.
SpectralBasis exact_eigendecompose(const LaplacianView& lap, int oracle_cap = 2048);

// Off-diagonal Frobenius energy of the working matrix after each rotation;
// entry 0 is the energy of L itself.  This equals ||L - V diag V^T||_F^2 and
// is non-increasing by construction.
struct JacobiTrace {
    std::vector<double> offdiag_energy;
};

// Approximate eigenbasis as a product of J greedy classical Jacobi rotations:
// each step annihilates the largest-magnitude off-diagonal entry (ties
// lexicographic on (p, q)).  Stops early once the working matrix is diagonal.
SpectralBasis truncated_jacobi(const LaplacianView& lap, int rotations,
                               JacobiTrace* trace = nullptr);

// Ideal low-pass projector onto the K lowest-frequency columns.
LowPassFilter lp_filter(const SpectralBasis& basis, int K);

// Relative Frobenius distance between the filter built from `basis` and the
// one built from the exact eigenbasis of L.
double fgft_error(const LaplacianView& lap, const SpectralBasis& basis, int K);

// vectors^T * x, computed through the rotation list for Fgft bases (the
// complexity-faithful path) and densely for exact ones.
Eigen::VectorXd apply_basis_transpose(const SpectralBasis& basis,
                                      const Eigen::VectorXd& x);

}  // namespace gfs
