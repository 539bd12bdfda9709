#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace kaicg {

using cxd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Uniform linear array: M sensors spaced d/lambda wavelengths apart.
struct ArrayGeometry {
    int sensors = 1;
    double d_over_lambda = 0.5;

    void validate() const;
};

/// P far-field sources: DoAs in degrees (ascending), per-source variances,
/// and a Hermitian PSD correlation structure with unit diagonal.
struct SourceSet {
    std::vector<double> angles_deg;
    std::vector<double> powers;
    CMatrix correlation;  // P x P, unit diagonal

    int count() const { return static_cast<int>(angles_deg.size()); }
    void validate() const;

    /// Uncorrelated unit-power sources at the given angles.
    static SourceSet uncorrelated(std::vector<double> angles_deg);
    /// Two or more equal-power sources sharing one pairwise correlation rho.
    static SourceSet uniformly_correlated(std::vector<double> angles_deg, double rho);
};

/// One synthetic experiment: array, sources, snapshot count, SNR and seed.
struct ScenarioConfig {
    ArrayGeometry geometry;
    SourceSet sources;
    int n_snapshots = 1;
    double snr_db = 0.0;
    std::uint64_t seed = 0;

    /// sigma_n^2 = (mean source power) / 10^(snr_db/10)
    double noise_variance() const;
    void validate() const;
};

/// M x N complex observation block; column i is the snapshot x(i).
struct SnapshotMatrix {
    CMatrix data;

    int sensors() const { return static_cast<int>(data.rows()); }
    int snapshots() const { return static_cast<int>(data.cols()); }
};

/// Snapshots plus the source and noise components they were built from.
struct GeneratedData {
    SnapshotMatrix x;
    CMatrix signals;  // P x N
    CMatrix noise;    // M x N
};

}  // namespace kaicg
