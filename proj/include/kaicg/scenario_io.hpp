#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "kaicg/bench.hpp"
#include "kaicg/types.hpp"

namespace kaicg {

/// A parsed experiment file: the scenario template (SNR filled per sweep
/// point by the runner), the run options, and the raw key/value pairs for
/// the manifest.
struct ExperimentSpec {
    ScenarioConfig scenario;
    RunOptions options;
    std::map<std::string, std::string> raw_keys;
};

/// Parses the flat key = value experiment format. Messages carry the line
/// number and the offending or missing key name.
ExperimentSpec parse_experiment_text(const std::string& text);

/// parse_experiment_text over a file's contents.
ExperimentSpec load_experiment_file(const std::string& path);

/// stats.csv: algorithm,snr_db,trials,failures,rmse_deg,rmse_db,pr,crb_sqrt_deg
void write_stats_csv(std::ostream& out, const std::vector<TrialStats>& stats);

/// trials.csv: algorithm,snr_db,trial,theta_true_1..P,theta_est_1..P,resolved
/// Angles carry 4 decimal places; missing estimates are written as nan.
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records, int p);

/// The manifest body; `timestamp_utc` is injected by the caller so file
/// bodies under test can be made reproducible.
std::string make_manifest_json(const ExperimentSpec& spec, const std::string& command,
                               const std::string& timestamp_utc,
                               const std::vector<std::string>& output_files);

}  // namespace kaicg
