#pragma once

#include <optional>
#include <vector>

#include "kaicg/cg_estimator.hpp"
#include "kaicg/covariance.hpp"
#include "kaicg/types.hpp"

namespace kaicg {

/// Knobs of the knowledge-aided refinement loop: iteration count I, the
/// correction-factor increment iota (mu runs over {0, iota, ..., 1}) and the
/// search grid. 1/iota must be an integer so that mu = 1 is on the grid.
struct KaiConfig {
    int iterations = 4;
    double iota = 0.1;
    AngleGrid grid;

    int tau() const;  // number of mu grid points, 1/iota + 1
    std::vector<double> mu_grid() const;
    void validate() const;
};

/// Signal-subspace projector Q = A (A^H A)^-1 A^H and its complement.
struct ProjectorPair {
    CMatrix q;
    CMatrix q_perp;
    bool reduced_rank = false;
};

/// One mu candidate probed inside an iteration.
struct MuCandidate {
    double mu = 0.0;
    double u = 0.0;  // correction-function value
    std::vector<double> angles;
    bool degenerate = false;
};

struct KaiIterationRecord {
    double mu_opt = 0.0;
    std::vector<MuCandidate> candidates;
    std::vector<double> adopted_angles;
    std::vector<int> steering_permutation;  // column order after the re-sort
};

struct KaiTrace {
    std::vector<double> first_step_angles;
    std::vector<KaiIterationRecord> iterations;
    bool pseudo_inverse_used = false;
};

struct KaiResult {
    std::vector<double> angles;
    KaiTrace trace;
};

/// Least-squares source amplitudes: s_hat(i) = (A^H A)^-1 A^H x(i).
/// Falls back to a rank-truncated pseudo-inverse for ill-conditioned A and
/// reports it through *pseudo_inverse_used when given.
CMatrix ls_amplitudes(const CMatrix& a_hat, const SnapshotMatrix& x,
                      bool* pseudo_inverse_used = nullptr);

/// n_hat(i) = x(i) - A s_hat(i).
CMatrix noise_residual(const CMatrix& a_hat, const SnapshotMatrix& x, const CMatrix& s_hat);

/// Q = A (A^H A)^-1 A^H, Q_perp = I - Q.
ProjectorPair projectors(const CMatrix& a_hat);

/// V = Q R Q_perp, the estimate of the signal-noise cross terms.
CMatrix unwanted_term(const ProjectorPair& pair, const CovarianceEstimate& r_base);

/// U = ln det( Q_B R Q_B + trace(Q_B_perp R)/(dim - p) Q_B_perp ),
/// evaluated as the sum of log-eigenvalues with a 1e-30 floor.
double correction_function(const ProjectorPair& q_b, const CovarianceEstimate& r_ref, int p);

struct SteeringUpdate {
    CMatrix a_hat;
    std::vector<double> angles;       // ascending
    std::vector<int> permutation;     // position of each pre-sort column
};

/// Hybrid steering matrix for iteration n: the first n columns come from the
/// newest estimates, the rest from the first-step estimates (all columns new
/// once n > p). Columns are re-sorted by angle.
SteeringUpdate steering_update(int n, int p, const std::vector<double>& new_estimates,
                               const std::vector<double>& initial_estimates,
                               const ArrayGeometry& geometry);

/// Multi-step knowledge-aided CG estimator. The refinement base is the
/// sample covariance of x unless base_override supplies another matrix
/// (e.g. the exact covariance in tests).
KaiResult ms_kai_cg(const SnapshotMatrix& x, int p, const ArrayGeometry& geometry,
                    const KaiConfig& kai,
                    const std::optional<CovarianceEstimate>& base_override = std::nullopt);

/// The forward-backward variant: smooths the sample covariance first and
/// runs the whole loop in subarray dimension L.
KaiResult ms_kai_cg_fb(const SnapshotMatrix& x, int p, const ArrayGeometry& geometry,
                       const SmoothingConfig& smoothing, const KaiConfig& kai,
                       const std::optional<CovarianceEstimate>& base_override = std::nullopt);

}  // namespace kaicg
