#pragma once

#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

namespace flipchain {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// log det of a symmetric positive definite matrix via Cholesky;
/// std::nullopt if the factorization fails (matrix not PD).
inline std::optional<double> cholesky_logdet(const Mat& a) {
    Eigen::LLT<Mat> llt(a);
    if (llt.info() != Eigen::Success) return std::nullopt;
    double s = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

inline bool is_psd_within(const Mat& a, double tol) {
    const Eigen::Index n = a.rows();
    Mat shifted = a + tol * Mat::Identity(n, n);
    Eigen::LLT<Mat> llt(shifted);
    return llt.info() == Eigen::Success;
}

/// Lower bound on the smallest eigenvalue of a symmetric matrix, located by
/// bisection on the Cholesky shift. Returns a value s with lambda_min >= s,
/// tight to within `resolution`.
inline double smallest_eig_lower_bound(const Mat& a, double resolution = 1e-12) {
    const double scale = a.cwiseAbs().rowwise().sum().maxCoeff(); // Gershgorin bound
    if (scale == 0.0) return 0.0;
    double lo = -scale, hi = scale;
    // invariant: lambda_min >= lo always; lambda_min < hi once hi fails
    if (is_psd_within(a, -hi)) return hi;
    while (hi - lo > resolution * scale) {
        const double mid = 0.5 * (lo + hi);
        if (is_psd_within(a, -mid)) lo = mid; else hi = mid;
    }
    return lo;
}

} // namespace flipchain
