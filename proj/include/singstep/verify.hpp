#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "singstep/linalg.hpp"

namespace singstep::verify {

using linalg::Matrix;
using linalg::Vector;

/// Outcome of one oracle suite. `measured` is the worst value seen and
/// passes when it stays on the right side of `threshold`.
struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    int instances = 0;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 20240611;
    /// Instances per randomized suite; 0 keeps each suite's own default.
    int trials = 0;
    /// Forwarded to the exact-control inner product (fault injection).
    double es_perturbation = 0.0;
};

using Rng = std::mt19937_64;

Matrix random_gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols);
Vector random_unit(Rng& rng, Eigen::Index n);
Matrix random_orthogonal(Rng& rng, Eigen::Index n);
/// U diag(sigmas) V^T with Haar-ish random U, V.
Matrix random_with_singular_values(Rng& rng, const Vector& sigmas);

/// Random L, M with ||M - L|| ||L^-1|| < 1: measured ||M^-1|| and
/// ||L^-1 - M^-1|| never exceed the returned bounds.
CheckResult check_inverse_bounds(Rng& rng, int trials = 200);

/// Random 5x5 rank-4 A and generic B: the spread (max/min) across
/// eps in {1e-2, ..., 1e-6} of ||approx - (A + eps B)^-1|| stays below 10.
/// `simplified` drops the Astar (Id - P) term.
CheckResult check_perturbed_inverse(Rng& rng, bool simplified, int trials = 50);

/// Same instances with the B-preimage complement: the spread across eps of
/// ||Astar y - (A + eps B)^-1 y|| / eps for 10 y in R(A) stays below 10,
/// and the fixed-point solve matches a dense solve to 1e-10.
CheckResult check_range_restricted_inverse(Rng& rng, int trials = 50);

/// g(x0 + eps v) at a point of y = x where F is outside the range of DF:
/// first divided differences over eps = 0.1 / 2^k (k = 0..3) have gaps
/// shrinking by at least 1.5x and second divided differences within a
/// factor 10 of each other.
CheckResult check_directional_derivative_existence();

/// Bordered g versus ||T||^2 / <T, A^-1 R> on random nonsingular 4x4
/// instances with unit T, R (relative 1e-10), and |g| <= 1e-8 on rank-3
/// instances.
CheckResult check_bordered_equivalence(Rng& rng, int trials = 100, int singular_trials = 20);

/// Tracked sigma versus the standard smallest singular value along random
/// paths (1e-8), sign change on diag(t, 2), and d sigma versus central
/// differences (1e-5 relative).
CheckResult check_smooth_svd(Rng& rng, int paths = 10, int steps = 100);

/// Closed-form Dg(x)(v) against central differences of g on random regular
/// expsin points (1e-4 relative).
CheckResult check_dg_formula(Rng& rng, int trials = 200);

/// g * es_inner along the Newton step against central differences of g on
/// random regular expsin points (1e-5 relative). Sensitive to es_perturbation.
CheckResult check_es_formula(Rng& rng, int trials = 200, double es_perturbation = 0.0);

/// lambda_AS <= lambda_ES + 1e-12 on random regular expsin points and exact
/// equality on 1-D problems.
CheckResult check_control_ordering(Rng& rng, int trials = 1000, double es_perturbation = 0.0);

std::vector<CheckResult> run_all(const VerifyOptions& options = {});

}  // namespace singstep::verify
