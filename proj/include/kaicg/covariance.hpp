#pragma once

#include <string>
#include <utility>

#include "kaicg/types.hpp"

namespace kaicg {

enum class CovProvenance { sample, fb_averaged, fbss, refined, exact };

std::string to_string(CovProvenance p);

/// Square Hermitian covariance estimate with a provenance tag so output
/// files can attribute every estimate.
struct CovarianceEstimate {
    CMatrix matrix;
    CovProvenance provenance = CovProvenance::sample;
    double mu = 0.0;     // refined only
    int iteration = 0;   // refined only

    int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Subarray length L for forward-backward spatial smoothing;
/// K = M - L + 1 subarrays. Requires P < L <= M.
struct SmoothingConfig {
    int subarray_length = 0;

    int subarray_count(int m) const { return m - subarray_length + 1; }
    void validate(int m, int p) const;
};

/// (1/N) sum_i x(i) x(i)^H, symmetrized.
CovarianceEstimate sample_covariance(const SnapshotMatrix& x);

/// Splits the sample covariance of x = A s + n into the signal+noise part
/// and the signal-noise cross terms:
///   wanted   = A {(1/N) sum s s^H} A^H + (1/N) sum n n^H
///   unwanted = A {(1/N) sum s n^H} + {(1/N) sum n s^H} A^H
/// wanted + unwanted reconstructs sample_covariance(x).
std::pair<CMatrix, CMatrix> covariance_decomposition(const SnapshotMatrix& x,
                                                     const CMatrix& a_true,
                                                     const CMatrix& s_true,
                                                     const CMatrix& n_true);

/// Anti-diagonal ones; J J = I.
RMatrix exchange_matrix(int m);

/// (R + J R* J) / 2; Hermitian and persymmetric.
CovarianceEstimate fb_average(const CovarianceEstimate& r);

/// Z_k = [0 | I_L | 0] selecting sensors k..k+L-1 (k is 1-based).
RMatrix selection_matrix(int k_index, int l, int m);

/// Forward-backward spatially smoothed covariance:
/// (1/K) sum_k Z_k fb_average(r0) Z_k^T, dimension L.
CovarianceEstimate fbss(const CovarianceEstimate& r0, const SmoothingConfig& cfg,
                        int model_order);

/// base - mu (V + V^H) for mu in [0, 1].
CovarianceEstimate refine(const CovarianceEstimate& base, const CMatrix& v, double mu,
                          int iteration = 0);

}  // namespace kaicg
