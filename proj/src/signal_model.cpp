#include "kaicg/signal_model.hpp"

#include <cmath>
#include <stdexcept>

#include "kaicg/rng.hpp"

namespace kaicg {

void ArrayGeometry::validate() const {
    if (sensors < 1) throw std::invalid_argument("ArrayGeometry: sensor count must be >= 1");
    if (!(d_over_lambda > 0.0) || d_over_lambda > 0.5)
        throw std::invalid_argument("ArrayGeometry: d/lambda must lie in (0, 0.5]");
}

void SourceSet::validate() const {
    const int p = count();
    if (p < 1) throw std::invalid_argument("SourceSet: at least one source required");
    for (int i = 0; i < p; ++i) {
        if (angles_deg[i] < -90.0 || angles_deg[i] > 90.0)
            throw std::invalid_argument("SourceSet: angle outside [-90, 90] degrees");
        if (i > 0 && angles_deg[i] < angles_deg[i - 1])
            throw std::invalid_argument("SourceSet: angles must be ascending");
    }
    if (static_cast<int>(powers.size()) != p)
        throw std::invalid_argument("SourceSet: powers length must match angle count");
    for (double pw : powers)
        if (!(pw >= 0.0)) throw std::invalid_argument("SourceSet: powers must be non-negative");
    if (correlation.rows() != p || correlation.cols() != p)
        throw std::invalid_argument("SourceSet: correlation must be P x P");
    const double scale = std::max(correlation.norm(), 1.0);
    if ((correlation - correlation.adjoint()).norm() > 1e-10 * scale)
        throw std::invalid_argument("SourceSet: correlation must be Hermitian");
    for (int i = 0; i < p; ++i)
        if (std::abs(correlation(i, i) - cxd(1.0, 0.0)) > 1e-10)
            throw std::invalid_argument("SourceSet: correlation diagonal must be 1");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(correlation, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw std::invalid_argument("SourceSet: correlation must be positive semidefinite");
}

SourceSet SourceSet::uncorrelated(std::vector<double> angles_deg) {
    SourceSet s;
    const int p = static_cast<int>(angles_deg.size());
    s.angles_deg = std::move(angles_deg);
    s.powers.assign(p, 1.0);
    s.correlation = CMatrix::Identity(p, p);
    return s;
}

SourceSet SourceSet::uniformly_correlated(std::vector<double> angles_deg, double rho) {
    SourceSet s = uncorrelated(std::move(angles_deg));
    const int p = s.count();
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            if (i != j) s.correlation(i, j) = rho;
    return s;
}

double ScenarioConfig::noise_variance() const {
    double mean_power = 0.0;
    for (double pw : sources.powers) mean_power += pw;
    mean_power /= std::max<std::size_t>(sources.powers.size(), 1);
    return mean_power / std::pow(10.0, snr_db / 10.0);
}

void ScenarioConfig::validate() const {
    geometry.validate();
    sources.validate();
    if (sources.count() >= geometry.sensors)
        throw std::invalid_argument("ScenarioConfig: source count must be below sensor count");
    if (n_snapshots < 1) throw std::invalid_argument("ScenarioConfig: n_snapshots must be >= 1");
    if (!(noise_variance() > 0.0))
        throw std::invalid_argument("ScenarioConfig: derived noise variance must be positive");
}

CVector steering_vector(double theta_deg, const ArrayGeometry& geometry) {
    geometry.validate();
    if (theta_deg < -90.0 || theta_deg > 90.0)
        throw std::invalid_argument("steering_vector: angle outside [-90, 90] degrees");
    const double phase_step = 2.0 * kPi * geometry.d_over_lambda * std::sin(deg_to_rad(theta_deg));
    CVector a(geometry.sensors);
    for (int k = 0; k < geometry.sensors; ++k) a[k] = std::polar(1.0, k * phase_step);
    return a;
}

CMatrix array_manifold(std::span<const double> angles_deg, const ArrayGeometry& geometry) {
    if (angles_deg.empty()) throw std::invalid_argument("array_manifold: empty angle list");
    CMatrix a(geometry.sensors, angles_deg.size());
    for (std::size_t p = 0; p < angles_deg.size(); ++p)
        a.col(p) = steering_vector(angles_deg[p], geometry);
    return a;
}

CMatrix source_covariance(const SourceSet& sources) {
    sources.validate();
    const int p = sources.count();
    CMatrix r_ss(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            r_ss(i, j) = std::sqrt(sources.powers[i] * sources.powers[j]) * sources.correlation(i, j);
    return r_ss;
}

CMatrix true_covariance(const ScenarioConfig& config) {
    config.validate();
    const CMatrix a = array_manifold(config.sources.angles_deg, config.geometry);
    const CMatrix r_ss = source_covariance(config.sources);
    const int m = config.geometry.sensors;
    CMatrix r = a * r_ss * a.adjoint() +
                config.noise_variance() * CMatrix::Identity(m, m);
    return ((r + r.adjoint()) / 2.0).eval();
}

namespace {

/// Square root C of R_ss with C C^H = R_ss. Cholesky when positive definite,
/// Hermitian eigendecomposition root otherwise (handles coherent sources).
CMatrix covariance_root(const CMatrix& r_ss) {
    Eigen::LLT<CMatrix> llt(r_ss);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(r_ss);
    RVector lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

GeneratedData generate_snapshots_detailed(const ScenarioConfig& config) {
    config.validate();
    const int m = config.geometry.sensors;
    const int p = config.sources.count();
    const int n = config.n_snapshots;

    const CMatrix a = array_manifold(config.sources.angles_deg, config.geometry);
    const CMatrix root = covariance_root(source_covariance(config.sources));
    const double noise_sigma = std::sqrt(config.noise_variance());

    GaussianRng rng(config.seed);
    GeneratedData out;
    out.signals.resize(p, n);
    out.noise.resize(m, n);
    out.x.data.resize(m, n);
    for (int i = 0; i < n; ++i) {
        out.signals.col(i) = root * rng.complex_normal_vector(p);
        out.noise.col(i) = noise_sigma * rng.complex_normal_vector(m);
        out.x.data.col(i) = a * out.signals.col(i) + out.noise.col(i);
    }
    return out;
}

SnapshotMatrix generate_snapshots(const ScenarioConfig& config) {
    return generate_snapshots_detailed(config).x;
}

}  // namespace kaicg
