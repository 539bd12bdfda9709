#include "kaicg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kaicg {

SubspaceDecomposition eigendecompose(const CovarianceEstimate& r, int p) {
    const int m = r.dim();
    if (p >= m) throw std::invalid_argument("eigendecompose: model order must be below dim(R)");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(r.matrix);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigendecompose: eigensolver failed");

    SubspaceDecomposition out;
    out.eigenvalues = es.eigenvalues().reverse();
    CMatrix vectors(m, m);
    for (int i = 0; i < m; ++i) vectors.col(i) = es.eigenvectors().col(m - 1 - i);
    out.signal_basis = vectors.leftCols(p);
    out.noise_basis = vectors.rightCols(m - p);
    return out;
}

Spectrum music_spectrum(const CovarianceEstimate& r, const AngleGrid& grid, int p,
                        const ArrayGeometry& geometry) {
    grid.validate();
    if (geometry.sensors != r.dim())
        throw std::invalid_argument("music_spectrum: geometry does not match covariance dimension");
    const SubspaceDecomposition sub = eigendecompose(r, p);

    const int n_points = grid.size();
    std::vector<double> angles(n_points);
    for (int i = 0; i < n_points; ++i) angles[i] = grid.angle(i);
    const CMatrix projected = sub.noise_basis.adjoint() * array_manifold(angles, geometry);

    Spectrum spectrum{grid, RVector(n_points)};
    for (int i = 0; i < n_points; ++i) {
        const double denom = projected.col(i).squaredNorm();
        spectrum.values[i] = denom < kSpectralCapEps ? 1.0 / kSpectralCapEps : 1.0 / denom;
    }
    return spectrum;
}

std::vector<double> music_estimate(const CovarianceEstimate& r, const AngleGrid& grid, int p,
                                   const ArrayGeometry& geometry) {
    return find_peaks(music_spectrum(r, grid, p, geometry), p);
}

std::vector<double> esprit_estimate(const CovarianceEstimate& r, int p,
                                    const ArrayGeometry& geometry, bool* clamped) {
    const int m = r.dim();
    if (geometry.sensors != m)
        throw std::invalid_argument("esprit_estimate: geometry does not match covariance dimension");
    if (m < 2) throw std::invalid_argument("esprit_estimate: needs at least two sensors");
    if (clamped) *clamped = false;

    const SubspaceDecomposition sub = eigendecompose(r, p);
    // Maximum-overlap subarrays: rows 1..M-1 and 2..M of the signal basis.
    const CMatrix upper = sub.signal_basis.topRows(m - 1);
    const CMatrix lower = sub.signal_basis.bottomRows(m - 1);
    const CMatrix rotation = upper.colPivHouseholderQr().solve(lower);

    Eigen::ComplexEigenSolver<CMatrix> es(rotation);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("esprit_estimate: rotation eigensolver failed");

    std::vector<double> estimates;
    estimates.reserve(p);
    for (int i = 0; i < p; ++i) {
        const double phase = std::arg(es.eigenvalues()(i));
        double u = phase / (2.0 * kPi * geometry.d_over_lambda);
        if (u > 1.0 || u < -1.0) {
            if (clamped) *clamped = true;
            u = std::clamp(u, -1.0, 1.0);
        }
        estimates.push_back(rad_to_deg(std::asin(u)));
    }
    std::sort(estimates.begin(), estimates.end());
    return estimates;
}

std::vector<double> cg_fb_estimate(const SnapshotMatrix& x, const AngleGrid& grid, int p,
                                   const ArrayGeometry& geometry, const SmoothingConfig& smoothing,
                                   const std::optional<CovarianceEstimate>& base_override) {
    const CovarianceEstimate r0 = base_override ? *base_override : sample_covariance(x);
    const CovarianceEstimate smoothed = fbss(r0, smoothing, p);
    const ArrayGeometry subarray_geometry{smoothing.subarray_length, geometry.d_over_lambda};
    return cg_estimate(smoothed, grid, p, subarray_geometry);
}

}  // namespace kaicg
