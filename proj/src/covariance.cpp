#include "kaicg/covariance.hpp"

#include <stdexcept>

namespace kaicg {

std::string to_string(CovProvenance p) {
    switch (p) {
        case CovProvenance::sample: return "sample";
        case CovProvenance::fb_averaged: return "fb_averaged";
        case CovProvenance::fbss: return "fbss";
        case CovProvenance::refined: return "refined";
        case CovProvenance::exact: return "exact";
    }
    return "unknown";
}

void SmoothingConfig::validate(int m, int p) const {
    if (subarray_length <= p)
        throw std::invalid_argument("SmoothingConfig: subarray length must exceed source count");
    if (subarray_length > m)
        throw std::invalid_argument("SmoothingConfig: subarray length must not exceed sensor count");
}

namespace {

CMatrix symmetrized(const CMatrix& r) { return ((r + r.adjoint()) / 2.0).eval(); }

}  // namespace

CovarianceEstimate sample_covariance(const SnapshotMatrix& x) {
    if (x.data.cols() < 1 || x.data.rows() < 1)
        throw std::invalid_argument("sample_covariance: empty snapshot matrix");
    CMatrix r = x.data * x.data.adjoint() / static_cast<double>(x.data.cols());
    return {symmetrized(r), CovProvenance::sample};
}

std::pair<CMatrix, CMatrix> covariance_decomposition(const SnapshotMatrix& x,
                                                     const CMatrix& a_true,
                                                     const CMatrix& s_true,
                                                     const CMatrix& n_true) {
    const auto m = x.data.rows();
    const auto n = x.data.cols();
    if (a_true.rows() != m || s_true.rows() != a_true.cols() || s_true.cols() != n ||
        n_true.rows() != m || n_true.cols() != n)
        throw std::invalid_argument("covariance_decomposition: dimension mismatch");

    const double inv_n = 1.0 / static_cast<double>(n);
    const CMatrix s_cov = inv_n * (s_true * s_true.adjoint());
    const CMatrix n_cov = inv_n * (n_true * n_true.adjoint());
    const CMatrix cross = inv_n * (s_true * n_true.adjoint());  // (1/N) sum s n^H

    CMatrix wanted = a_true * s_cov * a_true.adjoint() + n_cov;
    CMatrix unwanted = a_true * cross + cross.adjoint() * a_true.adjoint();
    return {wanted, unwanted};
}

RMatrix exchange_matrix(int m) {
    if (m < 1) throw std::invalid_argument("exchange_matrix: dimension must be >= 1");
    RMatrix j = RMatrix::Zero(m, m);
    for (int i = 0; i < m; ++i) j(i, m - 1 - i) = 1.0;
    return j;
}

CovarianceEstimate fb_average(const CovarianceEstimate& r) {
    const int m = r.dim();
    const RMatrix j = exchange_matrix(m);
    CMatrix averaged = (r.matrix + j * r.matrix.conjugate() * j) / 2.0;
    return {symmetrized(averaged), CovProvenance::fb_averaged};
}

RMatrix selection_matrix(int k_index, int l, int m) {
    if (k_index < 1 || k_index > m - l + 1)
        throw std::invalid_argument("selection_matrix: subarray index out of range");
    RMatrix z = RMatrix::Zero(l, m);
    z.block(0, k_index - 1, l, l) = RMatrix::Identity(l, l);
    return z;
}

CovarianceEstimate fbss(const CovarianceEstimate& r0, const SmoothingConfig& cfg,
                        int model_order) {
    const int m = r0.dim();
    cfg.validate(m, model_order);
    const int l = cfg.subarray_length;
    const int k = cfg.subarray_count(m);

    const CMatrix averaged = fb_average(r0).matrix;
    CMatrix smoothed = CMatrix::Zero(l, l);
    for (int sub = 0; sub < k; ++sub)
        smoothed += averaged.block(sub, sub, l, l);
    smoothed /= static_cast<double>(k);
    return {symmetrized(smoothed), CovProvenance::fbss};
}

CovarianceEstimate refine(const CovarianceEstimate& base, const CMatrix& v, double mu,
                          int iteration) {
    if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("refine: mu must lie in [0, 1]");
    if (v.rows() != base.dim() || v.cols() != base.dim())
        throw std::invalid_argument("refine: dimension mismatch");
    CMatrix refined = base.matrix - mu * (v + v.adjoint());
    CovarianceEstimate out{symmetrized(refined), CovProvenance::refined};
    out.mu = mu;
    out.iteration = iteration;
    return out;
}

}  // namespace kaicg
