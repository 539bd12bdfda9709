#pragma once

#include <vector>

#include "kaicg/covariance.hpp"
#include "kaicg/signal_model.hpp"
#include "kaicg/types.hpp"

namespace kaicg {

/// Search grid theta(n) = n*step - 90 for n = 0..180/step.
/// 180/step must be an integer.
struct AngleGrid {
    double step_deg = 0.2;

    int size() const;
    double angle(int index) const { return index * step_deg - 90.0; }
    void validate() const;
};

/// Columns [g_0, ..., g_P] of the conjugate-gradient residual recursion at
/// one search angle. Columns 0..P-1 are unit norm; column P is kept raw.
struct ResidualBasis {
    CMatrix g;
    bool converged_early = false;
};

struct Spectrum {
    AngleGrid grid;
    RVector values;
};

/// Spectral values are capped at 1/kSpectralCapEps when the denominator of
/// the spectral function falls below kSpectralCapEps.
inline constexpr double kSpectralCapEps = 1e-20;

/// Residuals below kCgBreakdownTol * rho_0 terminate the recursion early.
inline constexpr double kCgBreakdownTol = 1e-24;

/// b(theta) = R a(theta) / ||R a(theta)||.
CVector primary_vector(const CovarianceEstimate& r, double theta_deg,
                       const ArrayGeometry& geometry);

/// Runs p conjugate-gradient steps from b(theta) against r and collects the
/// residual columns. On breakdown the remaining columns are zeroed and the
/// basis is flagged converged_early.
ResidualBasis cg_residual_basis(const CovarianceEstimate& r, double theta_deg, int p,
                                const ArrayGeometry& geometry);

/// Recursion core used by cg_residual_basis and the spectrum scan; b must be
/// the (unit) primary vector for r at the angle of interest.
ResidualBasis cg_residual_basis_from_primary(const CMatrix& r, const CVector& b, int p);

/// 1 / || g_last^H G_prev ||^2, capped.
double spectral_value(const CVector& g_last, const CMatrix& g_prev);

/// Left-to-right scan over the grid; each point is scored against the basis
/// of the previous grid point (the first point against its own).
Spectrum cg_spectrum(const CovarianceEstimate& r, const AngleGrid& grid, int p,
                     const ArrayGeometry& geometry);

/// The p interior local maxima with the largest values, padded with the
/// largest remaining grid values when fewer exist. Ties break toward the
/// smaller angle. Ascending output.
std::vector<double> find_peaks(const Spectrum& spectrum, int p);

/// cg_spectrum followed by find_peaks.
std::vector<double> cg_estimate(const CovarianceEstimate& r, const AngleGrid& grid, int p,
                                const ArrayGeometry& geometry);

}  // namespace kaicg
