#include "singstep/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace singstep::linalg {

double spectral_norm(const Matrix& a)
{
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> s(a);
    return s.singularValues()(0);
}

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& a) { return a.allFinite(); }

double SvdFactorization::sigma_max() const { return sigmas.size() ? sigmas(0) : 0.0; }

double SvdFactorization::sigma_min() const
{
    return sigmas.size() ? sigmas(sigmas.size() - 1) : 0.0;
}

double SvdFactorization::sigma_ratio() const
{
    const double smax = sigma_max();
    return smax > 0.0 ? sigma_min() / smax : 0.0;
}

Eigen::Index SvdFactorization::rank(double rank_tol) const
{
    const double cut = rank_tol * sigma_max();
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sigmas.size(); ++i)
        if (sigmas(i) > cut) ++r;
    return r;
}

bool SvdFactorization::is_singular(double rank_tol) const
{
    return sigma_max() <= 0.0 || sigma_min() <= rank_tol * sigma_max();
}

Matrix SvdFactorization::reconstruct() const
{
    const Eigen::Index k = sigmas.size();
    return u.leftCols(k) * sigmas.asDiagonal() * v.leftCols(k).transpose();
}

SvdFactorization svd(const Matrix& a)
{
    if (!a.allFinite()) throw NonConvergence("svd: matrix has non-finite entries");
    Eigen::JacobiSVD<Matrix> s(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (s.info() != Eigen::Success) throw NonConvergence("svd: Jacobi sweeps did not converge");
    SvdFactorization f{s.matrixU(), s.singularValues(), s.matrixV()};
    if (!f.u.allFinite() || !f.v.allFinite() || !f.sigmas.allFinite())
        throw NonConvergence("svd: non-finite factors");
    return f;
}

Vector solve(const Matrix& a, const Vector& b, double rank_tol)
{
    if (a.rows() != a.cols()) throw DimensionMismatch("solve: matrix is not square");
    if (a.rows() != b.size()) throw DimensionMismatch("solve: right-hand side has wrong size");
    return solve(svd(a), b, rank_tol);
}

Vector solve(const SvdFactorization& f, const Vector& b, double rank_tol)
{
    if (f.is_singular(rank_tol)) throw SingularMatrix(f.sigma_min(), f.sigma_max());
    Vector c = f.u.transpose() * b;
    c.array() /= f.sigmas.array();
    return f.v * c;
}

Vector pseudoinverse_apply(const Matrix& a, const Vector& b, double rank_tol)
{
    if (a.rows() != b.size()) throw DimensionMismatch("pseudoinverse_apply: size mismatch");
    return pseudoinverse_apply(svd(a), b, rank_tol);
}

Vector pseudoinverse_apply(const SvdFactorization& f, const Vector& b, double rank_tol)
{
    const Eigen::Index r = f.rank(rank_tol);
    Vector c = f.u.leftCols(r).transpose() * b;
    c.array() /= f.sigmas.head(r).array();
    return f.v.leftCols(r) * c;
}

Matrix range_basis(const SvdFactorization& f, double rank_tol)
{
    return f.u.leftCols(f.rank(rank_tol));
}

Matrix null_basis(const SvdFactorization& f, double rank_tol)
{
    const Eigen::Index r = f.rank(rank_tol);
    return f.v.rightCols(f.v.cols() - r);
}

bool in_range(const SvdFactorization& f, const Vector& y, double rank_tol, double rel_tol)
{
    const Matrix ur = range_basis(f, rank_tol);
    const Vector off = y - ur * (ur.transpose() * y);
    return off.norm() <= rel_tol * y.norm();
}

InverseBounds inverse_perturbation_bounds(double norm_l_inv, double norm_diff)
{
    if (!(norm_l_inv >= 0.0) || !(norm_diff >= 0.0))
        throw NotApplicable("inverse_perturbation_bounds: norms must be non-negative");
    const double q = norm_l_inv * norm_diff;
    if (!(q < 1.0))
        throw NotApplicable("inverse_perturbation_bounds: requires ||M - L|| < 1/||L^-1||");
    return {norm_l_inv / (1.0 - q), norm_l_inv * norm_l_inv * norm_diff / (1.0 - q)};
}

namespace {

// Inverse of a small square block; empty blocks are allowed.
Matrix small_inverse(const Matrix& m)
{
    if (m.size() == 0) return Matrix(0, 0);
    return m.fullPivLu().inverse();
}

}  // namespace

PerturbationDecomposition perturbation_decompose(const Matrix& a, const Matrix& b,
                                                 ComplementChoice complement_choice,
                                                 double rank_tol)
{
    const Eigen::Index n = a.rows();
    if (a.cols() != n || b.rows() != n || b.cols() != n)
        throw DimensionMismatch("perturbation_decompose: A and B must be square of equal size");

    const SvdFactorization fa = svd(a);
    const Eigen::Index r = fa.rank(rank_tol);
    const Eigen::Index k = n - r;

    PerturbationDecomposition d;
    d.complement_choice = complement_choice;
    d.null_basis_a = fa.v.rightCols(k);
    d.range_basis_a = fa.u.leftCols(r);

    const Matrix bn = b * d.null_basis_a;
    if (k > 0) {
        const SvdFactorization fbn = svd(bn);
        const double scale = std::max(spectral_norm(b), std::numeric_limits<double>::min());
        if (fbn.sigma_min() <= rank_tol * scale)
            throw SharedNullspace("perturbation_decompose: N(A) and N(B) intersect");
        d.image_basis_bn = fbn.u.leftCols(k);
    } else {
        d.image_basis_bn = Matrix(n, 0);
    }

    Matrix stacked(n, n);
    stacked << d.range_basis_a, d.image_basis_bn;
    if (n > 0) {
        const SvdFactorization fs = svd(stacked);
        if (fs.sigma_min() <= rank_tol)
            throw DegenerateSum("perturbation_decompose: B N(A) + R(A) is not the whole space");
    }

    // P = S diag(0_r, I_k) S^-1 with S = [range basis, B N(A) basis].
    const Matrix s_inv = small_inverse(stacked);
    d.projector_p = d.image_basis_bn * s_inv.bottomRows(k);

    switch (complement_choice) {
    case ComplementChoice::Orthogonal:
        d.complement_basis = fa.v.leftCols(r);
        break;
    case ComplementChoice::BPreimageOfRange: {
        // {x : B x in R(A)} is the null space of U_perp^T B.
        const Matrix u_perp = fa.u.rightCols(k);
        if (k == 0) {
            d.complement_basis = Matrix::Identity(n, n);
        } else {
            const SvdFactorization fc = svd(u_perp.transpose() * b);
            d.complement_basis = fc.v.rightCols(n - k);
        }
        break;
    }
    }

    // Astar = X (U_r^T A X)^-1 U_r^T, the inverse of A restricted to span X.
    const Matrix ax = d.range_basis_a.transpose() * a * d.complement_basis;
    d.restricted_inverse_astar =
        d.complement_basis * small_inverse(ax) * d.range_basis_a.transpose();

    // Bstar = N (W^T B N)^-1 W^T, the inverse of B restricted to N(A).
    const Matrix wbn = d.image_basis_bn.transpose() * bn;
    d.restricted_inverse_bstar =
        d.null_basis_a * small_inverse(wbn) * d.image_basis_bn.transpose();
    return d;
}

Vector approximate_perturbed_inverse_apply(const PerturbationDecomposition& d, double eps,
                                           const Vector& b)
{
    const Vector pb = d.projector_p * b;
    return d.restricted_inverse_astar * (b - pb) + (1.0 / eps) * (d.restricted_inverse_bstar * pb);
}

Vector simplified_perturbed_inverse_apply(const PerturbationDecomposition& d, double eps,
                                          const Vector& b)
{
    return (1.0 / eps) * (d.restricted_inverse_bstar * (d.projector_p * b));
}

Vector range_restricted_inverse_apply(const PerturbationDecomposition& d, const Matrix& a,
                                      const Matrix& b, double eps, const Vector& y, int max_iter)
{
    if (d.complement_choice != ComplementChoice::BPreimageOfRange)
        throw NotApplicable("range_restricted_inverse_apply: needs the B-preimage complement");
    const Vector off = y - d.range_basis_a * (d.range_basis_a.transpose() * y);
    if (off.norm() > kRangeMembershipTol * y.norm())
        throw NotApplicable("range_restricted_inverse_apply: y is not in R(A)");

    const Matrix pert = a + eps * b;
    const double ynorm = y.norm();
    const double floor_scale = 64.0 * std::numeric_limits<double>::epsilon() *
                               (spectral_norm(a) + eps * spectral_norm(b));

    Vector x = d.restricted_inverse_astar * y;
    Vector r = pert * x - y;
    double rnorm = r.norm();
    for (int i = 0; i < max_iter; ++i) {
        if (rnorm <= 1e-12 * ynorm || rnorm <= floor_scale * x.norm()) return x;
        x -= d.restricted_inverse_astar * r;
        const Vector r_next = pert * x - y;
        const double next_norm = r_next.norm();
        if (next_norm > 0.5 * rnorm && next_norm > floor_scale * x.norm())
            throw NoConvergence("range_restricted_inverse_apply: contraction factor " +
                                std::to_string(next_norm / rnorm) + " exceeds 0.5");
        r = r_next;
        rnorm = next_norm;
    }
    if (rnorm <= 1e-12 * ynorm || rnorm <= floor_scale * x.norm()) return x;
    throw NoConvergence("range_restricted_inverse_apply: iteration limit reached");
}

}  // namespace singstep::linalg
