#include "singstep/smooth_svd.hpp"

#include <cmath>
#include <limits>

namespace singstep::smooth_svd {

namespace {

double gap_of(const linalg::SvdFactorization& f)
{
    const Eigen::Index n = f.sigmas.size();
    if (n < 2) return std::numeric_limits<double>::infinity();
    return f.sigmas(n - 2) - f.sigmas(n - 1);
}

void require_isolated(const linalg::SvdFactorization& f)
{
    if (!(gap_of(f) > 1e-10 * f.sigma_max()))
        throw ClusteredSingularValues("smallest singular value is not isolated");
}

// (lambda - S)^+ for the symmetric S = Q diag(s^2) Q^T, dropping the column n-1.
Matrix shifted_pinv(const Matrix& q, const Vector& sigmas)
{
    const Eigen::Index n = sigmas.size();
    const double lambda = sigmas(n - 1) * sigmas(n - 1);
    Matrix out = Matrix::Zero(q.rows(), q.rows());
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double denom = lambda - sigmas(i) * sigmas(i);
        out += q.col(i) * q.col(i).transpose() / denom;
    }
    return out;
}

}  // namespace

SmoothSvdState init_smallest_triple(const Matrix& a)
{
    if (a.rows() != a.cols() || a.rows() == 0)
        throw DimensionMismatch("init_smallest_triple: matrix must be square and non-empty");
    const linalg::SvdFactorization f = linalg::svd(a);
    require_isolated(f);
    const Eigen::Index n = a.rows();

    SmoothSvdState s;
    s.v = f.v.col(n - 1);
    s.u = f.u.col(n - 1);
    s.sigma = f.sigmas(n - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (s.v(i) != 0.0) {
            if (s.v(i) < 0.0) {
                s.v = -s.v;
                s.u = -s.u;
            }
            break;
        }
    }
    s.anchor = a;
    s.gap = gap_of(f);
    return s;
}

SmoothSvdState propagate(const SmoothSvdState& state, const Matrix& a_new)
{
    if (a_new.rows() != state.anchor.rows() || a_new.cols() != state.anchor.cols())
        throw DimensionMismatch("propagate: matrix size changed");
    const Matrix da = a_new - state.anchor;
    const double step = linalg::spectral_norm(da);
    if (step == 0.0) return state;
    if (step > 0.25 * state.gap)
        throw StepTooLarge("propagate: increment exceeds a quarter of the singular gap");

    // Predictor: d sigma = <u, dA v>, dv = (lambda - B)^+ dB v, du = (lambda - B^T)^+ dB^T u.
    const Matrix& a = state.anchor;
    const linalg::SvdFactorization fa = linalg::svd(a);
    const Matrix db = a.transpose() * da + da.transpose() * a;
    const Matrix dbt = da * a.transpose() + a * da.transpose();
    const Vector v_pred = (state.v + shifted_pinv(fa.v, fa.sigmas) * db * state.v).normalized();
    const Vector u_pred = (state.u + shifted_pinv(fa.u, fa.sigmas) * dbt * state.u).normalized();
    const double sigma_pred = state.sigma + sigma_directional_derivative(state, da);

    // Corrector: smallest pair of a_new with signs carried from the prediction.
    const linalg::SvdFactorization fn = linalg::svd(a_new);
    require_isolated(fn);
    const Eigen::Index n = a_new.rows();
    Vector v = fn.v.col(n - 1);
    Vector u = fn.u.col(n - 1);
    const double v_align = v.dot(v_pred);
    const double u_align = u.dot(u_pred);
    if (std::abs(v_align) < 0.5 || std::abs(u_align) < 0.5)
        throw StepTooLarge("propagate: prediction and correction disagree");
    if (v_align < 0.0) v = -v;
    if (u_align < 0.0) u = -u;

    SmoothSvdState next;
    next.sigma = u.dot(a_new * v);
    // Near zero the sign of the corrected value is noise; keep the predicted side.
    if (std::abs(next.sigma) <= 1e-14 * fn.sigma_max() && sigma_pred != 0.0)
        next.sigma = std::copysign(std::abs(next.sigma), sigma_pred);
    next.u = std::move(u);
    next.v = std::move(v);
    next.anchor = a_new;
    next.gap = gap_of(fn);
    return next;
}

double sigma_directional_derivative(const SmoothSvdState& state, const Matrix& da)
{
    return state.u.dot(da * state.v);
}

}  // namespace singstep::smooth_svd
