#pragma once

#include <span>

#include "kaicg/types.hpp"

namespace kaicg {

/// a(theta): element k is exp(j 2 pi k (d/lambda) sin theta), length M.
/// theta_deg must lie in [-90, 90].
CVector steering_vector(double theta_deg, const ArrayGeometry& geometry);

/// M x P matrix whose column p is steering_vector(angles_deg[p]).
CMatrix array_manifold(std::span<const double> angles_deg, const ArrayGeometry& geometry);

/// R_ss[i][j] = sqrt(p_i p_j) corr[i][j]; Hermitian PSD.
CMatrix source_covariance(const SourceSet& sources);

/// R = A R_ss A^H + sigma_n^2 I.
CMatrix true_covariance(const ScenarioConfig& config);

/// Columns x(i) = A s(i) + n(i) with bookkeeping of s and n.
/// Sources are colored by a square root of R_ss (Cholesky, falling back to
/// the eigendecomposition root when R_ss is singular). Deterministic in seed.
GeneratedData generate_snapshots_detailed(const ScenarioConfig& config);

/// Same as above, snapshots only.
SnapshotMatrix generate_snapshots(const ScenarioConfig& config);

}  // namespace kaicg
