#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kaicg/covariance.hpp"
#include "kaicg/kai_engine.hpp"
#include "kaicg/types.hpp"

namespace kaicg {

enum class Algorithm { cg, cg_fb, music, esprit, ms_kai_cg, ms_kai_cg_fb };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

/// One trial of one algorithm at one SNR.
struct TrialRecord {
    Algorithm algorithm = Algorithm::cg;
    double snr_db = 0.0;
    int trial = 0;
    std::vector<double> true_angles;
    std::vector<double> estimates;
    bool resolved = false;
    double squared_error_sum = 0.0;
    bool failed = false;
    std::string failure_reason;
};

/// Per-(algorithm, SNR) aggregates.
struct TrialStats {
    Algorithm algorithm = Algorithm::cg;
    double snr_db = 0.0;
    int trials = 0;
    int failures = 0;
    double rmse_deg = 0.0;
    double rmse_db = 0.0;
    double pr = 0.0;            // NaN when the resolution criterion does not apply
    double crb_sqrt_deg = 0.0;
};

/// Inputs of one multiplication-count formula row.
struct ComplexityQuery {
    std::string algorithm;  // MS-KAI-CG, MS-KAI-CG-FB, MUSIC, Root-MUSIC, AVF, CG, ESPRIT, TS-ESPRIT
    int m = 1;
    int n = 1;
    int p = 1;
    double delta_deg = 0.2;
    int tau = 11;
};

/// Names accepted by multiplication_count, in output-column order.
const std::vector<std::string>& complexity_algorithms();

/// sqrt( (1/(S P)) sum_s sum_p (theta_p - theta_hat_p(s))^2 ); both the
/// truth and each estimate list are sorted ascending and paired by index.
double rmse(const std::vector<double>& true_angles,
            const std::vector<std::vector<double>>& estimates_per_trial);

/// 10 log10(rmse_deg / 1 degree); -inf for rmse_deg = 0.
double rmse_db(double rmse_deg);

/// Two sources are resolved when both estimates err by less than half the
/// true separation (strict).
bool resolved(const std::vector<double>& true_pair, const std::vector<double>& estimate_pair);

/// Square root of the mean diagonal of the deterministic (conditional) CRB
/// for the ULA model, in degrees.
double crb_sqrt(const ScenarioConfig& config);

/// Exact multiplication count of the named algorithm.
double multiplication_count(const ComplexityQuery& q);

struct RunOptions {
    std::vector<Algorithm> algorithms;
    std::vector<double> snr_sweep_db;
    int trials = 1;
    KaiConfig kai;
    SmoothingConfig smoothing;  // subarray_length 0 selects the M-P default
    std::uint64_t master_seed = 0;
    int workers = 1;
    bool exact_covariance = false;
};

struct RunResult {
    std::vector<TrialStats> stats;      // one row per (algorithm, snr)
    std::vector<TrialRecord> records;   // every trial, for audit output
};

/// Runs trials x SNRs x algorithms. Per-trial seeds derive from the master
/// seed and (snr, trial) indices, so every algorithm in a trial sees the
/// same snapshots and curves can be compared pairwise. Individual trial
/// failures are recorded and excluded from the aggregates.
RunResult monte_carlo_run(const ScenarioConfig& scenario, const RunOptions& options);

}  // namespace kaicg
