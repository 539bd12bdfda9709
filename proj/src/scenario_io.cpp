#include "kaicg/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kaicg/version.hpp"

namespace kaicg {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream stream(s);
    std::string item;
    while (std::getline(stream, item, sep)) parts.push_back(trim(item));
    return parts;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("key '" + key + "': expected a number, got '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("key '" + key + "': expected an integer, got '" + value + "'");
    }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& part : split(value, ','))
        if (!part.empty()) out.push_back(parse_double(key, part));
    if (out.empty()) throw std::invalid_argument("key '" + key + "': expected a list of numbers");
    return out;
}

const std::vector<std::string> kKnownKeys = {
    "m", "d_over_lambda", "p", "angles_deg", "powers", "rho", "correlation",
    "n_snapshots", "snr_db_list", "trials", "grid_step_deg", "iota",
    "iterations", "subarray_l", "seed", "algorithms", "workers"};

}  // namespace

ExperimentSpec parse_experiment_text(const std::string& text) {
    std::map<std::string, std::string> keys;
    std::map<std::string, int> key_lines;

    std::stringstream stream(text);
    std::string line;
    int line_number = 0;
    while (std::getline(stream, line)) {
        ++line_number;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(line_number) +
                                        ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
            throw std::invalid_argument("line " + std::to_string(line_number) +
                                        ": unknown key '" + key + "'");
        if (keys.count(key))
            throw std::invalid_argument("line " + std::to_string(line_number) +
                                        ": duplicate key '" + key + "'");
        keys[key] = value;
        key_lines[key] = line_number;
    }

    auto require = [&](const std::string& key) -> const std::string& {
        auto it = keys.find(key);
        if (it == keys.end())
            throw std::invalid_argument("missing required key '" + key + "'");
        return it->second;
    };
    auto optional = [&](const std::string& key, const std::string& fallback) -> std::string {
        auto it = keys.find(key);
        return it == keys.end() ? fallback : it->second;
    };

    ExperimentSpec spec;
    spec.raw_keys = keys;

    const int m = static_cast<int>(parse_int("m", require("m")));
    const int p = static_cast<int>(parse_int("p", require("p")));
    spec.scenario.geometry.sensors = m;
    spec.scenario.geometry.d_over_lambda =
        parse_double("d_over_lambda", optional("d_over_lambda", "0.5"));

    const std::vector<double> angles = parse_double_list("angles_deg", require("angles_deg"));
    if (static_cast<int>(angles.size()) != p)
        throw std::invalid_argument("key 'angles_deg': expected " + std::to_string(p) +
                                    " angles to match key 'p'");
    spec.scenario.sources = SourceSet::uncorrelated(angles);
    if (keys.count("powers")) {
        spec.scenario.sources.powers = parse_double_list("powers", keys["powers"]);
        if (static_cast<int>(spec.scenario.sources.powers.size()) != p)
            throw std::invalid_argument("key 'powers': expected " + std::to_string(p) + " entries");
    }
    if (keys.count("rho") && keys.count("correlation"))
        throw std::invalid_argument("keys 'rho' and 'correlation' are mutually exclusive");
    if (keys.count("rho")) {
        const double rho = parse_double("rho", keys["rho"]);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                if (i != j) spec.scenario.sources.correlation(i, j) = rho;
    } else if (keys.count("correlation")) {
        const std::vector<std::string> rows = split(keys["correlation"], ';');
        if (static_cast<int>(rows.size()) != p)
            throw std::invalid_argument("key 'correlation': expected " + std::to_string(p) + " rows");
        for (int i = 0; i < p; ++i) {
            const std::vector<double> row = parse_double_list("correlation", rows[i]);
            if (static_cast<int>(row.size()) != p)
                throw std::invalid_argument("key 'correlation': row " + std::to_string(i + 1) +
                                            " must have " + std::to_string(p) + " entries");
            for (int j = 0; j < p; ++j) spec.scenario.sources.correlation(i, j) = row[j];
        }
    }

    spec.scenario.n_snapshots = static_cast<int>(parse_int("n_snapshots", require("n_snapshots")));
    spec.scenario.seed = static_cast<std::uint64_t>(parse_int("seed", require("seed")));

    spec.options.master_seed = spec.scenario.seed;
    spec.options.snr_sweep_db = parse_double_list("snr_db_list", require("snr_db_list"));
    spec.options.trials = static_cast<int>(parse_int("trials", require("trials")));
    spec.options.kai.grid.step_deg = parse_double("grid_step_deg", optional("grid_step_deg", "0.2"));
    spec.options.kai.iota = parse_double("iota", optional("iota", "0.1"));
    spec.options.kai.iterations = static_cast<int>(parse_int("iterations", optional("iterations", "4")));
    spec.options.smoothing.subarray_length =
        static_cast<int>(parse_int("subarray_l", optional("subarray_l", "0")));
    spec.options.workers = static_cast<int>(parse_int("workers", optional("workers", "1")));

    for (const auto& name : split(require("algorithms"), ','))
        if (!name.empty()) spec.options.algorithms.push_back(algorithm_from_string(name));
    if (spec.options.algorithms.empty())
        throw std::invalid_argument("key 'algorithms': expected at least one algorithm");

    // Surface config mistakes here, with the key vocabulary of the file.
    spec.scenario.snr_db = spec.options.snr_sweep_db.front();
    spec.scenario.validate();
    spec.options.kai.validate();
    if (spec.options.trials < 1) throw std::invalid_argument("key 'trials': must be >= 1");
    return spec;
}

ExperimentSpec load_experiment_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_text(buffer.str());
}

namespace {

std::string format_double(double v, const char* fmt) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

}  // namespace

void write_stats_csv(std::ostream& out, const std::vector<TrialStats>& stats) {
    out << "algorithm,snr_db,trials,failures,rmse_deg,rmse_db,pr,crb_sqrt_deg\n";
    for (const auto& s : stats) {
        out << to_string(s.algorithm) << ',' << format_double(s.snr_db, "%g") << ',' << s.trials
            << ',' << s.failures << ',' << format_double(s.rmse_deg, "%.8g") << ','
            << format_double(s.rmse_db, "%.8g") << ',' << format_double(s.pr, "%.8g") << ','
            << format_double(s.crb_sqrt_deg, "%.8g") << '\n';
    }
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records, int p) {
    out << "algorithm,snr_db,trial";
    for (int i = 1; i <= p; ++i) out << ",theta_true_" << i;
    for (int i = 1; i <= p; ++i) out << ",theta_est_" << i;
    out << ",resolved\n";
    for (const auto& r : records) {
        out << to_string(r.algorithm) << ',' << format_double(r.snr_db, "%g") << ',' << r.trial;
        for (int i = 0; i < p; ++i) out << ',' << format_double(r.true_angles[i], "%.4f");
        for (int i = 0; i < p; ++i) {
            if (i < static_cast<int>(r.estimates.size()))
                out << ',' << format_double(r.estimates[i], "%.4f");
            else
                out << ",nan";
        }
        out << ',' << (r.resolved ? 1 : 0) << '\n';
    }
}

std::string make_manifest_json(const ExperimentSpec& spec, const std::string& command,
                               const std::string& timestamp_utc,
                               const std::vector<std::string>& output_files) {
    nlohmann::ordered_json manifest;
    manifest["tool"] = kToolName;
    manifest["version"] = kToolVersion;
    manifest["command"] = command;
    manifest["created_utc"] = timestamp_utc;
    manifest["master_seed"] = spec.options.master_seed;

    nlohmann::ordered_json config;
    for (const auto& [key, value] : spec.raw_keys) config[key] = value;
    manifest["config"] = config;

    const int m = spec.scenario.geometry.sensors;
    const int p = spec.scenario.sources.count();
    const int subarray_l = spec.options.smoothing.subarray_length > 0
                               ? spec.options.smoothing.subarray_length
                               : m - p;
    nlohmann::ordered_json effective;
    effective["m"] = m;
    effective["p"] = p;
    effective["d_over_lambda"] = spec.scenario.geometry.d_over_lambda;
    effective["n_snapshots"] = spec.scenario.n_snapshots;
    effective["trials"] = spec.options.trials;
    effective["grid_step_deg"] = spec.options.kai.grid.step_deg;
    effective["iota"] = spec.options.kai.iota;
    effective["tau"] = spec.options.kai.tau();
    effective["iterations"] = spec.options.kai.iterations;
    effective["subarray_l"] = subarray_l;
    effective["subarray_count"] = m - subarray_l + 1;
    effective["workers"] = spec.options.workers;
    effective["exact_covariance"] = spec.options.exact_covariance;
    nlohmann::ordered_json algs = nlohmann::ordered_json::array();
    for (auto a : spec.options.algorithms) algs.push_back(to_string(a));
    effective["algorithms"] = algs;
    manifest["effective"] = effective;

    nlohmann::ordered_json policies;
    policies["estimate_pairing"] = "ascending-sort";
    policies["crb_variant"] = "deterministic-conditional";
    policies["failed_trials"] = "unresolved, excluded from rmse, counted in failures";
    policies["mu_tie_break"] = "smallest-mu";
    policies["rng"] = "mt19937_64 + box-muller";
    manifest["policies"] = policies;

    manifest["outputs"] = output_files;
    return manifest.dump(2) + "\n";
}

}  // namespace kaicg
