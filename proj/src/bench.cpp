#include "kaicg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "kaicg/baselines.hpp"
#include "kaicg/rng.hpp"

namespace kaicg {

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::cg: return "CG";
        case Algorithm::cg_fb: return "CG-FB";
        case Algorithm::music: return "MUSIC";
        case Algorithm::esprit: return "ESPRIT";
        case Algorithm::ms_kai_cg: return "MS-KAI-CG";
        case Algorithm::ms_kai_cg_fb: return "MS-KAI-CG-FB";
    }
    return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "CG") return Algorithm::cg;
    if (name == "CG-FB") return Algorithm::cg_fb;
    if (name == "MUSIC") return Algorithm::music;
    if (name == "ESPRIT") return Algorithm::esprit;
    if (name == "MS-KAI-CG") return Algorithm::ms_kai_cg;
    if (name == "MS-KAI-CG-FB") return Algorithm::ms_kai_cg_fb;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

double rmse(const std::vector<double>& true_angles,
            const std::vector<std::vector<double>>& estimates_per_trial) {
    const std::size_t p = true_angles.size();
    if (p == 0 || estimates_per_trial.empty())
        throw std::invalid_argument("rmse: empty input");
    std::vector<double> truth = true_angles;
    std::sort(truth.begin(), truth.end());

    double sum = 0.0;
    for (const auto& estimates : estimates_per_trial) {
        if (estimates.size() != p) throw std::invalid_argument("rmse: estimate length mismatch");
        std::vector<double> sorted = estimates;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < p; ++i) {
            const double err = truth[i] - sorted[i];
            sum += err * err;
        }
    }
    return std::sqrt(sum / (static_cast<double>(estimates_per_trial.size()) * p));
}

double rmse_db(double rmse_deg) {
    if (rmse_deg < 0.0) throw std::invalid_argument("rmse_db: negative RMSE");
    if (rmse_deg == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(rmse_deg);
}

bool resolved(const std::vector<double>& true_pair, const std::vector<double>& estimate_pair) {
    if (true_pair.size() != 2 || estimate_pair.size() != 2)
        throw std::invalid_argument("resolved: criterion is defined for source pairs only");
    std::vector<double> truth = true_pair;
    std::vector<double> est = estimate_pair;
    std::sort(truth.begin(), truth.end());
    std::sort(est.begin(), est.end());
    const double half_separation = std::abs(truth[0] - truth[1]) / 2.0;
    return std::abs(est[0] - truth[0]) < half_separation &&
           std::abs(est[1] - truth[1]) < half_separation;
}

double crb_sqrt(const ScenarioConfig& config) {
    config.validate();
    const int m = config.geometry.sensors;
    const int p = config.sources.count();
    const double sigma2 = config.noise_variance();

    const CMatrix a = array_manifold(config.sources.angles_deg, config.geometry);
    CMatrix d(m, p);
    for (int col = 0; col < p; ++col) {
        const double theta = deg_to_rad(config.sources.angles_deg[col]);
        const cxd slope(0.0, 2.0 * kPi * config.geometry.d_over_lambda * std::cos(theta));
        for (int k = 0; k < m; ++k) d(k, col) = a(k, col) * slope * static_cast<double>(k);
    }

    const CMatrix q_perp = projectors(a).q_perp;
    const CMatrix h = d.adjoint() * q_perp * d;
    const CMatrix r_ss = source_covariance(config.sources);
    const RMatrix fisher_core = (h.array() * r_ss.transpose().array()).real().matrix();

    Eigen::FullPivLU<RMatrix> lu(fisher_core);
    if (!lu.isInvertible())
        throw std::runtime_error("crb_sqrt: degenerate scenario, Fisher matrix singular");
    const RMatrix crb = (sigma2 / (2.0 * config.n_snapshots)) * lu.inverse();

    const double mean_var_rad2 = crb.diagonal().mean();
    if (!(mean_var_rad2 > 0.0))
        throw std::runtime_error("crb_sqrt: degenerate scenario, non-positive variance");
    return rad_to_deg(std::sqrt(mean_var_rad2));
}

const std::vector<std::string>& complexity_algorithms() {
    static const std::vector<std::string> names = {
        "MS-KAI-CG", "MS-KAI-CG-FB", "MUSIC", "Root-MUSIC", "AVF", "CG", "ESPRIT", "TS-ESPRIT"};
    return names;
}

double multiplication_count(const ComplexityQuery& q) {
    if (q.m < 1 || q.n < 1 || q.p < 1)
        throw std::invalid_argument("multiplication_count: m, n, p must be positive");
    const double m = q.m;
    const double n = q.n;
    const double p = q.p;
    const double m2 = m * m;
    const double m3 = m2 * m;
    const double p2 = p * p;
    const double n2 = n * n;

    auto grid_points = [&]() {
        if (!(q.delta_deg > 0.0))
            throw std::invalid_argument("multiplication_count: delta must be positive");
        return 180.0 / q.delta_deg;
    };
    auto tau = [&]() {
        if (q.tau < 2) throw std::invalid_argument("multiplication_count: tau must be >= 2");
        return static_cast<double>(q.tau);
    };

    // Shared grid-search block of the CG family.
    auto cg_sweep = [&](double g) { return g * (m2 * (p + 1.0) + m * (6.0 * p + 2.0) + p + 1.0); };

    if (q.algorithm == "MS-KAI-CG" || q.algorithm == "MS-KAI-CG-FB") {
        const double g = grid_points();
        const double per_mu = cg_sweep(g) + (10.0 / 3.0) * m3 + m2 * (n + p + 3.0) +
                              m * (1.5 * p2 + 0.5 * p) + p2 * (0.5 * p + 1.5);
        const double first_step = p * (2.0 * m3 + m2 * p + m * (0.5 * p) + p2 * (0.5 * p + 1.5));
        return p * tau() * per_mu + first_step + cg_sweep(g) + m2 * (n + 2.0) + m * p;
    }
    if (q.algorithm == "MUSIC")
        return grid_points() * (m2 + m * (2.0 - p) - p) + 8.0 * m * n2;
    if (q.algorithm == "Root-MUSIC")
        return 2.0 * m3 - m2 * p + 8.0 * m * n2;
    if (q.algorithm == "AVF")
        return grid_points() * (m2 * (3.0 * p + 1.0) + m * (4.0 * p - 2.0) + p + 2.0) + m2 * n;
    if (q.algorithm == "CG")
        return cg_sweep(grid_points()) + m2 * n;
    if (q.algorithm == "ESPRIT")
        return 2.0 * m2 * p + m * (p2 - 2.0 * p + 8.0 * n2) + 8.0 * p2 * p - p2;
    if (q.algorithm == "TS-ESPRIT") {
        const double shared = m * (2.5 * p2 - 1.5 * p + 8.0 * n2) + p2 * (8.5 * p + 0.5);
        return tau() * (3.0 * m3 + m2 * (3.0 * p + 2.0) + shared + 1.0) +
               (2.0 * m3 + m2 * (3.0 * p) + shared);
    }
    throw std::invalid_argument("multiplication_count: unknown algorithm '" + q.algorithm + "'");
}

namespace {

std::vector<double> run_estimator(Algorithm alg, const SnapshotMatrix& x, int p,
                                  const ArrayGeometry& geometry, const KaiConfig& kai,
                                  const SmoothingConfig& smoothing,
                                  const std::optional<CovarianceEstimate>& override_cov) {
    auto base = [&]() { return override_cov ? *override_cov : sample_covariance(x); };
    switch (alg) {
        case Algorithm::cg:
            return cg_estimate(base(), kai.grid, p, geometry);
        case Algorithm::music:
            return music_estimate(base(), kai.grid, p, geometry);
        case Algorithm::esprit:
            return esprit_estimate(base(), p, geometry);
        case Algorithm::cg_fb:
            return cg_fb_estimate(x, kai.grid, p, geometry, smoothing, override_cov);
        case Algorithm::ms_kai_cg:
            return ms_kai_cg(x, p, geometry, kai, override_cov).angles;
        case Algorithm::ms_kai_cg_fb:
            return ms_kai_cg_fb(x, p, geometry, smoothing, kai, override_cov).angles;
    }
    throw std::invalid_argument("run_estimator: unknown algorithm");
}

double squared_error_sum(const std::vector<double>& truth_sorted,
                         std::vector<double> estimates) {
    std::sort(estimates.begin(), estimates.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < truth_sorted.size(); ++i) {
        const double err = truth_sorted[i] - estimates[i];
        sum += err * err;
    }
    return sum;
}

}  // namespace

RunResult monte_carlo_run(const ScenarioConfig& scenario, const RunOptions& options) {
    if (options.algorithms.empty())
        throw std::invalid_argument("monte_carlo_run: no algorithms requested");
    if (options.snr_sweep_db.empty())
        throw std::invalid_argument("monte_carlo_run: empty SNR sweep");
    if (options.trials < 1)
        throw std::invalid_argument("monte_carlo_run: trials must be >= 1");
    options.kai.validate();

    ScenarioConfig base_scenario = scenario;
    base_scenario.snr_db = options.snr_sweep_db.front();
    base_scenario.validate();

    const int p = scenario.sources.count();
    SmoothingConfig smoothing = options.smoothing;
    if (smoothing.subarray_length == 0)
        smoothing.subarray_length = scenario.geometry.sensors - p;  // K = P + 1 subarrays
    const bool needs_smoothing =
        std::any_of(options.algorithms.begin(), options.algorithms.end(), [](Algorithm a) {
            return a == Algorithm::cg_fb || a == Algorithm::ms_kai_cg_fb;
        });
    if (needs_smoothing) smoothing.validate(scenario.geometry.sensors, p);

    std::vector<double> truth = scenario.sources.angles_deg;
    std::sort(truth.begin(), truth.end());

    const int n_snr = static_cast<int>(options.snr_sweep_db.size());
    const int n_alg = static_cast<int>(options.algorithms.size());
    const int n_tasks = n_snr * options.trials;

    RunResult result;
    result.records.resize(static_cast<std::size_t>(n_tasks) * n_alg);

    auto run_task = [&](int task) {
        const int snr_index = task / options.trials;
        const int trial = task % options.trials;

        ScenarioConfig trial_config = scenario;
        trial_config.snr_db = options.snr_sweep_db[snr_index];
        trial_config.seed = derive_seed(options.master_seed, snr_index, trial);

        SnapshotMatrix x;
        std::optional<CovarianceEstimate> override_cov;
        std::string generation_failure;
        try {
            x = generate_snapshots(trial_config);
            if (options.exact_covariance)
                override_cov = CovarianceEstimate{true_covariance(trial_config),
                                                  CovProvenance::exact};
        } catch (const std::exception& e) {
            generation_failure = e.what();
        }

        for (int a = 0; a < n_alg; ++a) {
            TrialRecord record;
            record.algorithm = options.algorithms[a];
            record.snr_db = trial_config.snr_db;
            record.trial = trial;
            record.true_angles = truth;
            if (generation_failure.empty()) {
                try {
                    record.estimates = run_estimator(record.algorithm, x, p, scenario.geometry,
                                                     options.kai, smoothing, override_cov);
                } catch (const std::exception& e) {
                    record.failed = true;
                    record.failure_reason = e.what();
                }
            } else {
                record.failed = true;
                record.failure_reason = generation_failure;
            }
            if (!record.failed && static_cast<int>(record.estimates.size()) == p) {
                record.squared_error_sum = squared_error_sum(truth, record.estimates);
                if (p == 2) record.resolved = resolved(truth, record.estimates);
            } else if (!record.failed) {
                record.failed = true;
                record.failure_reason = "estimator returned fewer than P angles";
            }
            result.records[static_cast<std::size_t>(task) * n_alg + a] = std::move(record);
        }
    };

    const int workers = std::max(1, options.workers);
    if (workers == 1 || n_tasks == 1) {
        for (int task = 0; task < n_tasks; ++task) run_task(task);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        const int thread_count = std::min(workers, n_tasks);
        pool.reserve(thread_count);
        for (int t = 0; t < thread_count; ++t)
            pool.emplace_back([&]() {
                for (int task = next.fetch_add(1); task < n_tasks; task = next.fetch_add(1))
                    run_task(task);
            });
        for (auto& thread : pool) thread.join();
    }

    // Deterministic reduction over the preallocated record slots.
    for (int s = 0; s < n_snr; ++s) {
        ScenarioConfig crb_config = scenario;
        crb_config.snr_db = options.snr_sweep_db[s];
        const double crb = crb_sqrt(crb_config);
        for (int a = 0; a < n_alg; ++a) {
            TrialStats stats;
            stats.algorithm = options.algorithms[a];
            stats.snr_db = options.snr_sweep_db[s];
            stats.trials = options.trials;
            stats.crb_sqrt_deg = crb;
            double error_sum = 0.0;
            int successes = 0;
            int resolved_count = 0;
            for (int trial = 0; trial < options.trials; ++trial) {
                const auto& record =
                    result.records[(static_cast<std::size_t>(s) * options.trials + trial) * n_alg + a];
                if (record.failed) {
                    ++stats.failures;
                    continue;
                }
                error_sum += record.squared_error_sum;
                ++successes;
                if (record.resolved) ++resolved_count;
            }
            stats.rmse_deg = successes > 0
                                 ? std::sqrt(error_sum / (static_cast<double>(successes) * p))
                                 : std::numeric_limits<double>::quiet_NaN();
            stats.rmse_db = successes > 0 ? rmse_db(stats.rmse_deg)
                                          : std::numeric_limits<double>::quiet_NaN();
            stats.pr = p == 2 ? static_cast<double>(resolved_count) / options.trials
                              : std::numeric_limits<double>::quiet_NaN();
            result.stats.push_back(stats);
        }
    }
    return result;
}

}  // namespace kaicg
