#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kaicg/baselines.hpp"
#include "kaicg/bench.hpp"
#include "kaicg/scenario_io.hpp"
#include "kaicg/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << body;
}

std::string format_value(double v, const char* fmt) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, int workers,
                 std::optional<long long> seed_override, bool exact_covariance) {
    kaicg::ExperimentSpec spec = kaicg::load_experiment_file(config_path);
    if (seed_override) {
        spec.scenario.seed = static_cast<std::uint64_t>(*seed_override);
        spec.options.master_seed = spec.scenario.seed;
        spec.raw_keys["seed"] = std::to_string(*seed_override);
    }
    if (workers > 0) spec.options.workers = workers;
    spec.options.exact_covariance = exact_covariance;

    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    const kaicg::RunResult result = kaicg::monte_carlo_run(spec.scenario, spec.options);

    std::ofstream stats(dir / "stats.csv", std::ios::binary);
    kaicg::write_stats_csv(stats, result.stats);
    std::ofstream trials(dir / "trials.csv", std::ios::binary);
    kaicg::write_trials_csv(trials, result.records, spec.scenario.sources.count());
    write_file(dir / "manifest.json",
               kaicg::make_manifest_json(spec, "simulate", utc_timestamp(),
                                         {"stats.csv", "trials.csv"}));

    int total_failures = 0;
    for (const auto& s : result.stats) total_failures += s.failures;
    std::cout << "wrote " << (dir / "stats.csv").string() << " (" << result.stats.size()
              << " rows), " << (dir / "trials.csv").string() << " (" << result.records.size()
              << " rows)";
    if (total_failures > 0) std::cout << ", " << total_failures << " failed trials";
    std::cout << "\n";
    return kExitOk;
}

int cmd_spectrum(const std::string& config_path, double snr_db,
                 std::optional<long long> seed_override, const std::string& out_path,
                 bool exact_covariance) {
    kaicg::ExperimentSpec spec = kaicg::load_experiment_file(config_path);
    kaicg::ScenarioConfig scenario = spec.scenario;
    scenario.snr_db = snr_db;
    if (seed_override) scenario.seed = static_cast<std::uint64_t>(*seed_override);
    scenario.validate();

    const int p = scenario.sources.count();
    const kaicg::AngleGrid& grid = spec.options.kai.grid;
    grid.validate();

    kaicg::SmoothingConfig smoothing = spec.options.smoothing;
    if (smoothing.subarray_length == 0)
        smoothing.subarray_length = scenario.geometry.sensors - p;

    const kaicg::SnapshotMatrix x = kaicg::generate_snapshots(scenario);
    const kaicg::CovarianceEstimate base =
        exact_covariance
            ? kaicg::CovarianceEstimate{kaicg::true_covariance(scenario),
                                        kaicg::CovProvenance::exact}
            : kaicg::sample_covariance(x);

    // Spectral algorithms requested by the config; CG when none qualify.
    std::vector<kaicg::Algorithm> spectral;
    for (auto a : spec.options.algorithms)
        if (a == kaicg::Algorithm::cg || a == kaicg::Algorithm::music ||
            a == kaicg::Algorithm::cg_fb)
            spectral.push_back(a);
    if (spectral.empty()) spectral.push_back(kaicg::Algorithm::cg);

    std::vector<kaicg::Spectrum> spectra;
    for (auto algorithm : spectral) {
        switch (algorithm) {
            case kaicg::Algorithm::cg:
                spectra.push_back(kaicg::cg_spectrum(base, grid, p, scenario.geometry));
                break;
            case kaicg::Algorithm::music:
                spectra.push_back(kaicg::music_spectrum(base, grid, p, scenario.geometry));
                break;
            case kaicg::Algorithm::cg_fb: {
                const kaicg::CovarianceEstimate smoothed = kaicg::fbss(base, smoothing, p);
                const kaicg::ArrayGeometry sub{smoothing.subarray_length,
                                               scenario.geometry.d_over_lambda};
                spectra.push_back(kaicg::cg_spectrum(smoothed, grid, p, sub));
                break;
            }
            default:
                break;
        }
    }

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << "angle_deg";
    for (auto algorithm : spectral) out << ',' << kaicg::to_string(algorithm);
    out << '\n';
    for (int i = 0; i < grid.size(); ++i) {
        out << format_value(grid.angle(i), "%.4f");
        for (const auto& spectrum : spectra) out << ',' << format_value(spectrum.values[i], "%.8g");
        out << '\n';
    }
    std::cout << "wrote " << out_path << " (" << grid.size() << " rows)\n";
    return kExitOk;
}

int cmd_complexity(int m_min, int m_max, int n, int p, double delta_deg, int tau,
                   const std::string& out_path) {
    if (m_min < 1 || m_max < m_min)
        throw std::invalid_argument("complexity: require 1 <= m_min <= m_max");

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << "m";
    for (const auto& name : kaicg::complexity_algorithms()) out << ',' << name;
    out << '\n';
    for (int m = m_min; m <= m_max; ++m) {
        out << m;
        for (const auto& name : kaicg::complexity_algorithms()) {
            kaicg::ComplexityQuery q{name, m, n, p, delta_deg, tau};
            out << ',' << format_value(std::log10(kaicg::multiplication_count(q)), "%.8g");
        }
        out << '\n';
    }
    std::cout << "wrote " << out_path << " (" << (m_max - m_min + 1) << " rows)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DoA estimation benchmark harness (knowledge-aided CG and baselines)"};
    app.set_version_flag("--version", std::string(kaicg::kToolVersion));
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment from a config file");
    std::string sim_config, sim_out;
    int sim_workers = 0;
    long long sim_seed = 0;
    bool sim_exact = false;
    simulate->add_option("--config", sim_config, "experiment config file")->required();
    simulate->add_option("--out", sim_out, "output directory")->required();
    simulate->add_option("--workers", sim_workers, "worker threads (0 = config/default)");
    auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "override the config seed");
    simulate->add_flag("--exact-covariance", sim_exact,
                       "substitute the exact covariance for the sample estimate");

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "Dump spectra for one realization");
    std::string spec_config, spec_out;
    double spec_snr = 0.0;
    long long spec_seed = 0;
    bool spec_exact = false;
    spectrum->add_option("--config", spec_config, "experiment config file")->required();
    spectrum->add_option("--snr", spec_snr, "SNR in dB")->required();
    auto* spec_seed_opt = spectrum->add_option("--seed", spec_seed, "override the config seed");
    spectrum->add_option("--out", spec_out, "output CSV path")->required();
    spectrum->add_flag("--exact-covariance", spec_exact,
                       "substitute the exact covariance for the sample estimate");

    // complexity
    auto* complexity = app.add_subcommand("complexity", "Tabulate multiplication counts");
    int cx_m_min = 5, cx_m_max = 100, cx_n = 100, cx_p = 4, cx_tau = 11;
    double cx_delta = 0.2;
    std::string cx_out;
    complexity->add_option("--m-min", cx_m_min, "smallest sensor count");
    complexity->add_option("--m-max", cx_m_max, "largest sensor count");
    complexity->add_option("--n", cx_n, "snapshot count");
    complexity->add_option("--p", cx_p, "source count");
    complexity->add_option("--delta", cx_delta, "search step in degrees");
    complexity->add_option("--tau", cx_tau, "mu grid size");
    complexity->add_option("--out", cx_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(sim_config, sim_out, sim_workers,
                                sim_seed_opt->count() ? std::optional<long long>(sim_seed)
                                                      : std::nullopt,
                                sim_exact);
        if (spectrum->parsed())
            return cmd_spectrum(spec_config, spec_snr,
                                spec_seed_opt->count() ? std::optional<long long>(spec_seed)
                                                       : std::nullopt,
                                spec_out, spec_exact);
        if (complexity->parsed())
            return cmd_complexity(cx_m_min, cx_m_max, cx_n, cx_p, cx_delta, cx_tau, cx_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
