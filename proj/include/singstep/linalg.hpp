#pragma once

#include <Eigen/Dense>

#include "singstep/errors.hpp"

namespace singstep::linalg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative rank threshold: a matrix counts as singular when
/// sigma_min <= rank_tol * sigma_max.
inline constexpr double kDefaultRankTol = 1e-8;

/// Relative tolerance of the numerical membership test y in R(A).
inline constexpr double kRangeMembershipTol = 1e-8;

double spectral_norm(const Matrix& a);

bool all_finite(const Vector& v);
bool all_finite(const Matrix& a);

/// Full singular value decomposition A = U diag(sigmas) V^T with
/// non-increasing, non-negative sigmas.
struct SvdFactorization {
    Matrix u;
    Vector sigmas;
    Matrix v;

    double sigma_max() const;
    double sigma_min() const;
    /// sigma_min / sigma_max, or 0 for the zero matrix.
    double sigma_ratio() const;
    /// Number of singular values strictly above rank_tol * sigma_max.
    Eigen::Index rank(double rank_tol = kDefaultRankTol) const;
    bool is_singular(double rank_tol = kDefaultRankTol) const;
    Matrix reconstruct() const;
};

/// Throws NonConvergence if the decomposition does not reach a finite result.
SvdFactorization svd(const Matrix& a);

/// Solves the square system A x = b. Throws SingularMatrix when the rank test fails.
Vector solve(const Matrix& a, const Vector& b, double rank_tol = kDefaultRankTol);
Vector solve(const SvdFactorization& f, const Vector& b, double rank_tol = kDefaultRankTol);

/// Minimum-norm least-squares solution with singular values at or below
/// rank_tol * sigma_max truncated.
Vector pseudoinverse_apply(const Matrix& a, const Vector& b, double rank_tol = kDefaultRankTol);
Vector pseudoinverse_apply(const SvdFactorization& f, const Vector& b,
                           double rank_tol = kDefaultRankTol);

/// Orthonormal basis of R(A) and its orthogonal projector, rank decided by rank_tol.
Matrix range_basis(const SvdFactorization& f, double rank_tol = kDefaultRankTol);
Matrix null_basis(const SvdFactorization& f, double rank_tol = kDefaultRankTol);

/// ||(Id - Pi_R(A)) y|| <= rel_tol * ||y||.
bool in_range(const SvdFactorization& f, const Vector& y, double rank_tol = kDefaultRankTol,
              double rel_tol = kRangeMembershipTol);

/// Neumann-series bounds for M = L + (M - L) given ||L^-1|| and ||M - L||.
struct InverseBounds {
    double inverse_norm;        // bound on ||M^-1||
    double inverse_difference;  // bound on ||L^-1 - M^-1||
};

/// Throws NotApplicable unless norm_diff < 1 / norm_l_inv.
InverseBounds inverse_perturbation_bounds(double norm_l_inv, double norm_diff);

enum class ComplementChoice {
    Orthogonal,        // complement of N(A) is N(A)^perp
    BPreimageOfRange,  // complement of N(A) is {x : B x in R(A)}
};

/// Splitting used to approximate (A + eps B)^-1 for singular A.
///
/// With Y = B N(A) (+) R(A), P projects onto B N(A) along R(A). Astar inverts
/// A restricted to the chosen complement of N(A); Bstar inverts B restricted
/// to N(A). Both are stored as n x n matrices that are meaningful on R(A)
/// and B N(A) respectively.
struct PerturbationDecomposition {
    Matrix null_basis_a;
    Matrix range_basis_a;
    Matrix image_basis_bn;
    Matrix complement_basis;
    Matrix projector_p;
    Matrix restricted_inverse_astar;
    Matrix restricted_inverse_bstar;
    ComplementChoice complement_choice = ComplementChoice::Orthogonal;

    Eigen::Index dimension() const { return projector_p.rows(); }
};

/// Throws SharedNullspace if N(A) and N(B) intersect, DegenerateSum if
/// B N(A) + R(A) is not the whole space.
PerturbationDecomposition perturbation_decompose(const Matrix& a, const Matrix& b,
                                                 ComplementChoice complement_choice,
                                                 double rank_tol = kDefaultRankTol);

/// Astar (Id - P) b + (1/eps) Bstar P b.
Vector approximate_perturbed_inverse_apply(const PerturbationDecomposition& d, double eps,
                                           const Vector& b);

/// (1/eps) Bstar P b; differs from the exact inverse by O(1) as well.
Vector simplified_perturbed_inverse_apply(const PerturbationDecomposition& d, double eps,
                                          const Vector& b);

/// Solves (A + eps B) x = y for y in R(A) by the fixed-point iteration
/// x_0 = Astar y, x_{i+1} = x_i - Astar ((A + eps B) x_i - y).
///
/// Requires a decomposition built with ComplementChoice::BPreimageOfRange so
/// that every residual stays in R(A). Throws NotApplicable if y is not in
/// R(A) or the complement choice is wrong, and NoConvergence if a residual
/// contraction factor exceeds 0.5 or max_iter is exhausted.
Vector range_restricted_inverse_apply(const PerturbationDecomposition& d, const Matrix& a,
                                      const Matrix& b, double eps, const Vector& y,
                                      int max_iter = 100);

}  // namespace singstep::linalg
