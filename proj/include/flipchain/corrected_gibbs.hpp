#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "flipchain/linalg.hpp"
#include "flipchain/profile.hpp"
#include "flipchain/thermo.hpp"

namespace flipchain {

/// First-order corrected product state for a slowly varying potential
/// profile. The density is exp(-x' P x / 2 + a . x) up to normalization,
/// with x = (r_0..r_{N-1}, p_0..p_{N-1}). P = D + H/N where D is the plain
/// product part and the O(1/N) band H couples r_x to (r_x, p_x, p_{x+1})
/// through the profile slopes.
struct CorrectedGibbs {
    int N = 0;
    double gamma = 0.0;
    Vec linear;    // a, length 2N
    Mat precision; // P, 2N x 2N symmetric banded
};

inline CorrectedGibbs build_corrected_gibbs(const PotentialProfile& prof, int N, double gamma) {
    if (N < 4) throw std::invalid_argument("build_corrected_gibbs: N must be at least 4");
    if (!(gamma > 0.0)) throw std::invalid_argument("build_corrected_gibbs: gamma must be positive");
    require_positive_profile(prof.beta, N, "build_corrected_gibbs");

    CorrectedGibbs cg;
    cg.N = N;
    cg.gamma = gamma;
    cg.linear = Vec::Zero(2 * N);
    cg.precision = Mat::Zero(2 * N, 2 * N);

    const Vec beta = sample_profile(prof.beta, N);
    const Vec lambda = sample_profile(prof.lambda, N);
    Vec dbeta(N), dlambda(N);
    for (int x = 0; x < N; ++x) {
        dbeta[x] = profile_diff1(prof.beta, N, x);
        dlambda[x] = profile_diff1(prof.lambda, N, x);
    }

    const double invN = 1.0 / N;
    for (int x = 0; x < N; ++x) {
        const int xr = x;            // r_x coordinate
        const int xp = N + x;        // p_x coordinate
        const int xp1 = N + (x + 1) % N;

        cg.precision(xr, xr) += beta[x] + 0.5 * dbeta[x] * invN;
        cg.precision(xp, xp) += beta[x];

        const double cross = dbeta[x] / (2.0 * gamma) * invN;
        cg.precision(xr, xp) += cross;
        cg.precision(xp, xr) += cross;
        cg.precision(xr, xp1) += cross;
        cg.precision(xp1, xr) += cross;

        cg.linear[xr] = -lambda[x];
        cg.linear[xp1] += -dlambda[x] / gamma * invN;
    }
    return cg;
}

/// log of the normalizing constant of the corrected state, via Cholesky of
/// the precision matrix. Fails (physics error semantics) when the corrected
/// quadratic form is not positive definite, which signals a profile too
/// steep for the given N.
inline double log_partition_corrected(const CorrectedGibbs& cg) {
    Eigen::LLT<Mat> llt(cg.precision);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("log_partition_corrected: precision matrix not positive definite");
    double logdet = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < cg.precision.rows(); ++i) logdet += std::log(l(i, i));
    logdet *= 2.0;
    const Vec sol = llt.solve(cg.linear);
    const double half_b2 = 0.5 * cg.linear.dot(sol);
    return half_b2 + cg.N * std::log(2.0 * std::numbers::pi) - 0.5 * logdet;
}

/// Sum of single-site log partition functions for the sampled profile; the
/// zeroth-order product value that the corrected one stays within O(1) of.
inline double product_log_partition(const PotentialProfile& prof, int N) {
    double s = 0.0;
    for (int x = 0; x < N; ++x) {
        const double q = static_cast<double>(x) / N;
        s += log_partition(GibbsParams{prof.beta(q), prof.lambda(q)});
    }
    return s;
}

} // namespace flipchain
