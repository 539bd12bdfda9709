#include "kaicg/cg_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kaicg {

int AngleGrid::size() const {
    validate();
    return static_cast<int>(std::llround(180.0 / step_deg)) + 1;
}

void AngleGrid::validate() const {
    if (!(step_deg > 0.0)) throw std::invalid_argument("AngleGrid: step must be positive");
    const double steps = 180.0 / step_deg;
    if (std::abs(steps - std::llround(steps)) > 1e-9)
        throw std::invalid_argument("AngleGrid: 180/step must be an integer");
}

CVector primary_vector(const CovarianceEstimate& r, double theta_deg,
                       const ArrayGeometry& geometry) {
    const CVector ra = r.matrix * steering_vector(theta_deg, geometry);
    const double norm = ra.norm();
    if (norm <= 1e-300) throw std::runtime_error("primary_vector: R a(theta) is degenerate");
    return ra / norm;
}

ResidualBasis cg_residual_basis_from_primary(const CMatrix& r, const CVector& b, int p) {
    const int m = static_cast<int>(r.rows());
    if (p >= m) throw std::invalid_argument("cg_residual_basis: model order must be below dim(R)");

    ResidualBasis out;
    out.g.resize(m, p + 1);

    CVector g = b;
    CVector d = b;
    CVector v(m);
    out.g.col(0) = g;
    double rho_prev = g.squaredNorm();
    const double rho0 = rho_prev;

    int i = 1;
    for (; i <= p; ++i) {
        v.noalias() = r * d;
        const cxd dv = d.dot(v);  // d^H v
        if (std::abs(dv) <= 1e-300) break;
        const cxd alpha = rho_prev / dv;
        g -= alpha * v;
        const double rho = g.squaredNorm();
        if (!std::isfinite(rho))
            throw std::runtime_error("cg_residual_basis: recursion lost finiteness");
        out.g.col(i) = g;
        if (rho <= kCgBreakdownTol * rho0) {
            ++i;
            break;
        }
        const double beta = rho / rho_prev;
        d = g + beta * d;
        rho_prev = rho;
    }
    // Breakdown or early convergence: remaining columns are zero, flagged.
    if (i <= p) {
        out.converged_early = true;
        for (; i <= p; ++i) out.g.col(i).setZero();
    }
    // Columns 0..p-1 form the normalized basis; the last stays raw.
    for (int k = 0; k < p; ++k) {
        const double norm = out.g.col(k).norm();
        if (norm > 0.0) out.g.col(k) /= norm;
    }
    return out;
}

ResidualBasis cg_residual_basis(const CovarianceEstimate& r, double theta_deg, int p,
                                const ArrayGeometry& geometry) {
    return cg_residual_basis_from_primary(r.matrix, primary_vector(r, theta_deg, geometry), p);
}

double spectral_value(const CVector& g_last, const CMatrix& g_prev) {
    if (g_last.size() != g_prev.rows())
        throw std::invalid_argument("spectral_value: dimension mismatch");
    const double denom = (g_last.adjoint() * g_prev).squaredNorm();
    if (denom < kSpectralCapEps) return 1.0 / kSpectralCapEps;
    return 1.0 / denom;
}

Spectrum cg_spectrum(const CovarianceEstimate& r, const AngleGrid& grid, int p,
                     const ArrayGeometry& geometry) {
    grid.validate();
    const int n_points = grid.size();
    const int m = r.dim();
    if (geometry.sensors != m)
        throw std::invalid_argument("cg_spectrum: geometry does not match covariance dimension");

    std::vector<double> angles(n_points);
    for (int i = 0; i < n_points; ++i) angles[i] = grid.angle(i);
    const CMatrix manifold = array_manifold(angles, geometry);
    const CMatrix primaries_raw = r.matrix * manifold;  // column n is R a(theta_n)

    Spectrum spectrum{grid, RVector(n_points)};
    CMatrix basis_prev;
    for (int n = 0; n < n_points; ++n) {
        const double norm = primaries_raw.col(n).norm();
        if (norm <= 1e-300) throw std::runtime_error("cg_spectrum: R a(theta) is degenerate");
        const CVector b = primaries_raw.col(n) / norm;
        ResidualBasis basis = cg_residual_basis_from_primary(r.matrix, b, p);
        const CMatrix& reference = (n == 0) ? basis.g : basis_prev;
        spectrum.values[n] = spectral_value(basis.g.col(p), reference);
        basis_prev = std::move(basis.g);
    }
    return spectrum;
}

std::vector<double> find_peaks(const Spectrum& spectrum, int p) {
    const int n = static_cast<int>(spectrum.values.size());
    if (n == 0) throw std::invalid_argument("find_peaks: empty spectrum");

    // Indices by descending value, ties toward the smaller angle.
    auto by_value_desc = [&](int a, int b) {
        if (spectrum.values[a] != spectrum.values[b]) return spectrum.values[a] > spectrum.values[b];
        return a < b;
    };

    std::vector<int> peaks;
    for (int i = 1; i + 1 < n; ++i)
        if (spectrum.values[i] > spectrum.values[i - 1] && spectrum.values[i] > spectrum.values[i + 1])
            peaks.push_back(i);
    std::sort(peaks.begin(), peaks.end(), by_value_desc);
    if (static_cast<int>(peaks.size()) > p) peaks.resize(p);

    if (static_cast<int>(peaks.size()) < p) {
        std::vector<char> taken(n, 0);
        for (int i : peaks) taken[i] = 1;
        std::vector<int> rest;
        rest.reserve(n);
        for (int i = 0; i < n; ++i)
            if (!taken[i]) rest.push_back(i);
        std::sort(rest.begin(), rest.end(), by_value_desc);
        for (int i : rest) {
            if (static_cast<int>(peaks.size()) == p) break;
            peaks.push_back(i);
        }
    }

    std::vector<double> angles;
    angles.reserve(peaks.size());
    for (int i : peaks) angles.push_back(spectrum.grid.angle(i));
    std::sort(angles.begin(), angles.end());
    return angles;
}

std::vector<double> cg_estimate(const CovarianceEstimate& r, const AngleGrid& grid, int p,
                                const ArrayGeometry& geometry) {
    return find_peaks(cg_spectrum(r, grid, p, geometry), p);
}

}  // namespace kaicg
