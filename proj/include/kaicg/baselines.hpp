#pragma once

#include <optional>
#include <vector>

#include "kaicg/cg_estimator.hpp"
#include "kaicg/covariance.hpp"
#include "kaicg/types.hpp"

namespace kaicg {

/// Eigenvector split of a covariance estimate: the p dominant eigenvectors
/// span the signal subspace, the rest the noise subspace.
struct SubspaceDecomposition {
    CMatrix signal_basis;   // M x P
    CMatrix noise_basis;    // M x (M-P)
    RVector eigenvalues;    // descending
};

SubspaceDecomposition eigendecompose(const CovarianceEstimate& r, int p);

/// Pseudo-spectrum 1 / ||E_n^H a(theta)||^2 over the grid, capped like the
/// CG spectrum.
Spectrum music_spectrum(const CovarianceEstimate& r, const AngleGrid& grid, int p,
                        const ArrayGeometry& geometry);

/// MUSIC peak-search estimates; peak selection shared with cg_estimate.
std::vector<double> music_estimate(const CovarianceEstimate& r, const AngleGrid& grid, int p,
                                   const ArrayGeometry& geometry);

/// ESPRIT with maximum-overlap subarrays; grid-free. Arguments whose
/// rotation eigenvalue falls outside the visible region are clamped to
/// +-90 degrees and reported via *clamped.
std::vector<double> esprit_estimate(const CovarianceEstimate& r, int p,
                                    const ArrayGeometry& geometry, bool* clamped = nullptr);

/// CG on the forward-backward smoothed covariance (subarray geometry).
std::vector<double> cg_fb_estimate(const SnapshotMatrix& x, const AngleGrid& grid, int p,
                                   const ArrayGeometry& geometry, const SmoothingConfig& smoothing,
                                   const std::optional<CovarianceEstimate>& base_override = std::nullopt);

}  // namespace kaicg
