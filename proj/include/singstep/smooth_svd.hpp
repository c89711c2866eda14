#pragma once

#include "singstep/linalg.hpp"

namespace singstep::smooth_svd {

using linalg::Matrix;
using linalg::Vector;

/// Smallest singular triple of a matrix family, tracked so that sigma keeps
/// its sign (and u, v stay continuous) when the singular value passes
/// through zero.
struct SmoothSvdState {
    Vector u;
    Vector v;
    double sigma = 0.0;
    Matrix anchor;  // matrix at which the triple is valid
    double gap = 0.0;  // sigma_{n-1} - |sigma_n| at the anchor, +inf for n = 1
};

/// Seeds tracking from a standard SVD. Sign convention: the first nonzero
/// entry of v is positive. Throws ClusteredSingularValues unless
/// sigma_{n-1} - sigma_n > 1e-10 sigma_1.
SmoothSvdState init_smallest_triple(const Matrix& a);

/// Moves the triple to a_new. Predicts with the first-order perturbation
/// formulas, then corrects with the smallest pair of a fresh SVD whose
/// signs are aligned with the prediction.
///
/// Throws StepTooLarge if ||a_new - anchor|| > 0.25 * gap or the corrected
/// vectors disagree with the prediction, and ClusteredSingularValues if the
/// smallest singular value of a_new is not isolated.
SmoothSvdState propagate(const SmoothSvdState& state, const Matrix& a_new);

/// d sigma = <u, dA v>.
double sigma_directional_derivative(const SmoothSvdState& state, const Matrix& da);

}  // namespace singstep::smooth_svd
