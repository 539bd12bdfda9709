#include "kaicg/kai_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kaicg {

int KaiConfig::tau() const {
    validate();
    return static_cast<int>(std::llround(1.0 / iota)) + 1;
}

std::vector<double> KaiConfig::mu_grid() const {
    const int steps = tau() - 1;
    std::vector<double> grid(steps + 1);
    for (int k = 0; k <= steps; ++k) grid[k] = static_cast<double>(k) / steps;
    return grid;
}

void KaiConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("KaiConfig: iterations must be >= 1");
    if (!(iota > 0.0) || iota > 1.0)
        throw std::invalid_argument("KaiConfig: iota must lie in (0, 1]");
    const double steps = 1.0 / iota;
    if (std::abs(steps - std::llround(steps)) > 1e-9)
        throw std::invalid_argument("KaiConfig: 1/iota must be an integer so mu = 1 is on the grid");
    grid.validate();
}

namespace {

/// Numerical rank split of a steering matrix. Columns of a manifold are
/// never exactly dependent, but closely spaced estimates can push the
/// normal equations past usefulness; cond(A^H A) > 1e12 triggers the
/// truncated pseudo-inverse route.
struct ManifoldSvd {
    Eigen::JacobiSVD<CMatrix> svd;
    int rank = 0;
    bool truncated = false;

    explicit ManifoldSvd(const CMatrix& a_hat)
        : svd(a_hat, Eigen::ComputeThinU | Eigen::ComputeThinV) {
        const auto& sv = svd.singularValues();
        const double cutoff = sv(0) * 1e-6;
        rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > cutoff) ++rank;
        truncated = rank < a_hat.cols();
    }
};

}  // namespace

CMatrix ls_amplitudes(const CMatrix& a_hat, const SnapshotMatrix& x, bool* pseudo_inverse_used) {
    if (a_hat.rows() != x.data.rows())
        throw std::invalid_argument("ls_amplitudes: dimension mismatch");
    ManifoldSvd m(a_hat);
    if (pseudo_inverse_used) *pseudo_inverse_used = m.truncated;
    const auto& sv = m.svd.singularValues();
    CMatrix uh_x = m.svd.matrixU().leftCols(m.rank).adjoint() * x.data;
    for (int i = 0; i < m.rank; ++i) uh_x.row(i) /= sv(i);
    return m.svd.matrixV().leftCols(m.rank) * uh_x;
}

CMatrix noise_residual(const CMatrix& a_hat, const SnapshotMatrix& x, const CMatrix& s_hat) {
    if (a_hat.rows() != x.data.rows() || a_hat.cols() != s_hat.rows() ||
        s_hat.cols() != x.data.cols())
        throw std::invalid_argument("noise_residual: dimension mismatch");
    return x.data - a_hat * s_hat;
}

ProjectorPair projectors(const CMatrix& a_hat) {
    ManifoldSvd m(a_hat);
    const CMatrix u = m.svd.matrixU().leftCols(m.rank);
    ProjectorPair out;
    out.q = u * u.adjoint();
    out.q = ((out.q + out.q.adjoint()) / 2.0).eval();
    out.q_perp = CMatrix::Identity(a_hat.rows(), a_hat.rows()) - out.q;
    out.reduced_rank = m.truncated;
    return out;
}

CMatrix unwanted_term(const ProjectorPair& pair, const CovarianceEstimate& r_base) {
    if (pair.q.rows() != r_base.dim())
        throw std::invalid_argument("unwanted_term: dimension mismatch");
    return pair.q * r_base.matrix * pair.q_perp;
}

double correction_function(const ProjectorPair& q_b, const CovarianceEstimate& r_ref, int p) {
    const int dim = r_ref.dim();
    if (dim - p <= 0)
        throw std::invalid_argument("correction_function: dim - p must be positive");
    if (q_b.q.rows() != dim)
        throw std::invalid_argument("correction_function: dimension mismatch");

    const CMatrix& r = r_ref.matrix;
    const double noise_level = (q_b.q_perp * r).trace().real() / (dim - p);
    CMatrix bracket = q_b.q * r * q_b.q + noise_level * q_b.q_perp;
    bracket = ((bracket + bracket.adjoint()) / 2.0).eval();

    // ln det via eigenvalues; direct determinants underflow at these scales.
    Eigen::SelfAdjointEigenSolver<CMatrix> es(bracket, Eigen::EigenvaluesOnly);
    constexpr double kFloor = 1e-30;
    double sum = 0.0;
    bool any_above_floor = false;
    for (int i = 0; i < dim; ++i) {
        const double lambda = es.eigenvalues()(i);
        if (lambda >= kFloor) any_above_floor = true;
        sum += std::log(std::max(lambda, kFloor));
    }
    if (!any_above_floor)
        throw std::runtime_error("correction_function: degenerate input, all eigenvalues below floor");
    return sum;
}

SteeringUpdate steering_update(int n, int p, const std::vector<double>& new_estimates,
                               const std::vector<double>& initial_estimates,
                               const ArrayGeometry& geometry) {
    if (static_cast<int>(new_estimates.size()) != p ||
        static_cast<int>(initial_estimates.size()) != p)
        throw std::invalid_argument("steering_update: estimate lists must have length P");
    if (!std::is_sorted(new_estimates.begin(), new_estimates.end()) ||
        !std::is_sorted(initial_estimates.begin(), initial_estimates.end()))
        throw std::invalid_argument("steering_update: estimate lists must be ascending");
    if (n < 1) throw std::invalid_argument("steering_update: iteration index must be >= 1");

    const int head = std::min(n, p);
    std::vector<double> combined(p);
    for (int i = 0; i < head; ++i) combined[i] = new_estimates[i];
    for (int i = head; i < p; ++i) combined[i] = initial_estimates[i];

    // The union can disorder angles; re-sort and keep the permutation.
    SteeringUpdate out;
    out.permutation.resize(p);
    for (int i = 0; i < p; ++i) out.permutation[i] = i;
    std::stable_sort(out.permutation.begin(), out.permutation.end(),
                     [&](int a, int b) { return combined[a] < combined[b]; });
    out.angles.resize(p);
    for (int i = 0; i < p; ++i) out.angles[i] = combined[out.permutation[i]];
    out.a_hat = array_manifold(out.angles, geometry);
    return out;
}

namespace {

/// Second step shared by both variants: refine `base` against its own
/// unwanted-term estimate, rescore each mu candidate, and fold the winning
/// estimates back into the steering matrix.
KaiResult kai_refinement_loop(const CovarianceEstimate& base, int p,
                              const ArrayGeometry& geometry, const KaiConfig& kai) {
    kai.validate();
    if (p >= base.dim())
        throw std::invalid_argument("ms_kai_cg: model order must be below the covariance dimension");

    KaiResult result;
    const std::vector<double> first = cg_estimate(base, kai.grid, p, geometry);
    result.trace.first_step_angles = first;

    CMatrix a_hat = array_manifold(first, geometry);
    std::vector<double> current = first;
    const std::vector<double> mu_values = kai.mu_grid();

    for (int n = 1; n <= kai.iterations; ++n) {
        KaiIterationRecord record;
        const ProjectorPair pair = projectors(a_hat);
        if (pair.reduced_rank) result.trace.pseudo_inverse_used = true;
        const CMatrix v = unwanted_term(pair, base);

        double best_u = std::numeric_limits<double>::infinity();
        int best_index = -1;
        for (const double mu : mu_values) {
            MuCandidate candidate;
            candidate.mu = mu;
            try {
                const CovarianceEstimate refined = refine(base, v, mu, n);
                candidate.angles = cg_estimate(refined, kai.grid, p, geometry);
                const ProjectorPair q_b = projectors(array_manifold(candidate.angles, geometry));
                candidate.u = correction_function(q_b, base, p);
                if (!std::isfinite(candidate.u))
                    throw std::runtime_error("non-finite correction value");
            } catch (const std::exception&) {
                candidate.degenerate = true;
            }
            // Strict < keeps the smallest mu on ties.
            if (!candidate.degenerate && candidate.u < best_u) {
                best_u = candidate.u;
                best_index = static_cast<int>(record.candidates.size());
            }
            record.candidates.push_back(std::move(candidate));
        }
        if (best_index < 0)
            throw std::runtime_error("ms_kai_cg: every mu candidate degenerate");

        record.mu_opt = record.candidates[best_index].mu;
        current = record.candidates[best_index].angles;
        record.adopted_angles = current;

        const SteeringUpdate update = steering_update(n, p, current, first, geometry);
        a_hat = update.a_hat;
        record.steering_permutation = update.permutation;
        result.trace.iterations.push_back(std::move(record));
    }

    result.angles = current;
    std::sort(result.angles.begin(), result.angles.end());
    return result;
}

}  // namespace

KaiResult ms_kai_cg(const SnapshotMatrix& x, int p, const ArrayGeometry& geometry,
                    const KaiConfig& kai,
                    const std::optional<CovarianceEstimate>& base_override) {
    const CovarianceEstimate base = base_override ? *base_override : sample_covariance(x);
    return kai_refinement_loop(base, p, geometry, kai);
}

KaiResult ms_kai_cg_fb(const SnapshotMatrix& x, int p, const ArrayGeometry& geometry,
                       const SmoothingConfig& smoothing, const KaiConfig& kai,
                       const std::optional<CovarianceEstimate>& base_override) {
    const CovarianceEstimate r0 = base_override ? *base_override : sample_covariance(x);
    const CovarianceEstimate smoothed = fbss(r0, smoothing, p);
    const ArrayGeometry subarray_geometry{smoothing.subarray_length, geometry.d_over_lambda};
    return kai_refinement_loop(smoothed, p, subarray_geometry, kai);
}

}  // namespace kaicg
