#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CommandResult run_cli(const std::string& args, const fs::path& capture_dir) {
    const fs::path log = capture_dir / "out.log";
    const std::string command =
        std::string(KAICG_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(command.c_str());
    CommandResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream buffer;
    buffer << in.rdbuf();
    result.output = buffer.str();
    return result;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("kaicg_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_config(const fs::path& path, const std::string& extra = "") {
    std::ofstream out(path);
    out << "m = 12\n"
           "p = 2\n"
           "angles_deg = 15, 17\n"
           "n_snapshots = 50\n"
           "snr_db_list = 0, 10\n"
           "trials = 5\n"
           "seed = 777\n"
           "algorithms = CG, ESPRIT\n"
        << extra;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream stream(text);
    std::string line;
    while (std::getline(stream, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("simulate writes stats, trials, and a manifest") {
    const fs::path dir = fresh_dir("simulate");
    write_config(dir / "exp.cfg");
    const CommandResult result = run_cli(
        "simulate --config " + (dir / "exp.cfg").string() + " --out " + (dir / "run").string(),
        dir);
    CHECK(result.exit_code == 0);

    const std::string stats = read_file(dir / "run" / "stats.csv");
    const auto stats_lines = lines_of(stats);
    REQUIRE(stats_lines.size() == 1 + 2 * 2);  // header + algorithms x SNRs
    CHECK(stats_lines[0] == "algorithm,snr_db,trials,failures,rmse_deg,rmse_db,pr,crb_sqrt_deg");

    const auto trial_lines = lines_of(read_file(dir / "run" / "trials.csv"));
    CHECK(trial_lines.size() == 1 + 2 * 2 * 5);

    const std::string manifest = read_file(dir / "run" / "manifest.json");
    CHECK(manifest.find("\"master_seed\": 777") != std::string::npos);
    CHECK(manifest.find("\"command\": \"simulate\"") != std::string::npos);
}

TEST_CASE("repeated runs produce byte-identical csv bodies") {
    const fs::path dir = fresh_dir("determinism");
    write_config(dir / "exp.cfg");
    const std::string base =
        "simulate --config " + (dir / "exp.cfg").string() + " --out ";
    CHECK(run_cli(base + (dir / "a").string(), dir).exit_code == 0);
    CHECK(run_cli(base + (dir / "b").string() + " --workers 2", dir).exit_code == 0);

    CHECK(read_file(dir / "a" / "stats.csv") == read_file(dir / "b" / "stats.csv"));
    CHECK(read_file(dir / "a" / "trials.csv") == read_file(dir / "b" / "trials.csv"));
}

TEST_CASE("seed override changes the realization") {
    const fs::path dir = fresh_dir("seed");
    write_config(dir / "exp.cfg");
    const std::string base =
        "simulate --config " + (dir / "exp.cfg").string() + " --out ";
    CHECK(run_cli(base + (dir / "a").string(), dir).exit_code == 0);
    CHECK(run_cli(base + (dir / "b").string() + " --seed 12345", dir).exit_code == 0);
    CHECK(read_file(dir / "a" / "trials.csv") != read_file(dir / "b" / "trials.csv"));

    const std::string manifest = read_file(dir / "b" / "manifest.json");
    CHECK(manifest.find("\"master_seed\": 12345") != std::string::npos);
}

TEST_CASE("missing required key exits 2 and names the key") {
    const fs::path dir = fresh_dir("missing_key");
    std::ofstream(dir / "exp.cfg") << "m = 12\np = 2\nangles_deg = 15, 17\n";
    const CommandResult result = run_cli(
        "simulate --config " + (dir / "exp.cfg").string() + " --out " + (dir / "run").string(),
        dir);
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("'n_snapshots'") != std::string::npos);
}

TEST_CASE("spectrum peaks at the sources in exact-covariance mode") {
    const fs::path dir = fresh_dir("spectrum");
    write_config(dir / "exp.cfg");
    const std::string out_csv = (dir / "spectrum.csv").string();
    const CommandResult result =
        run_cli("spectrum --config " + (dir / "exp.cfg").string() +
                    " --snr 0 --seed 1 --exact-covariance --out " + out_csv,
                dir);
    CHECK(result.exit_code == 0);

    const auto lines = lines_of(read_file(out_csv));
    REQUIRE(lines.size() == 1 + 901);
    CHECK(lines[0] == "angle_deg,CG");

    // argmax pair of the CG column must sit on the grid points nearest 15/17.
    double best = -1.0, second = -1.0;
    double best_angle = 0.0, second_angle = 0.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto comma = lines[i].find(',');
        const double angle = std::stod(lines[i].substr(0, comma));
        const double value = std::stod(lines[i].substr(comma + 1));
        if (value > best) {
            second = best;
            second_angle = best_angle;
            best = value;
            best_angle = angle;
        } else if (value > second) {
            second = value;
            second_angle = angle;
        }
    }
    const double low = std::min(best_angle, second_angle);
    const double high = std::max(best_angle, second_angle);
    CHECK(low == doctest::Approx(15.0));
    CHECK(high == doctest::Approx(17.0));
    CHECK(best == doctest::Approx(1e20));
}

TEST_CASE("spectrum runs are reproducible and validate the grid") {
    const fs::path dir = fresh_dir("spectrum_repro");
    write_config(dir / "exp.cfg");
    const std::string args = "spectrum --config " + (dir / "exp.cfg").string() +
                             " --snr 5 --seed 42 --out ";
    CHECK(run_cli(args + (dir / "a.csv").string(), dir).exit_code == 0);
    CHECK(run_cli(args + (dir / "b.csv").string(), dir).exit_code == 0);
    CHECK(read_file(dir / "a.csv") == read_file(dir / "b.csv"));

    write_config(dir / "bad.cfg", "grid_step_deg = 0.7\n");
    const CommandResult bad = run_cli("spectrum --config " + (dir / "bad.cfg").string() +
                                          " --snr 5 --seed 42 --out " + (dir / "c.csv").string(),
                                      dir);
    CHECK(bad.exit_code == 2);
}

TEST_CASE("complexity emits log10 counts per algorithm") {
    const fs::path dir = fresh_dir("complexity");
    const std::string out_csv = (dir / "complexity.csv").string();
    const CommandResult result = run_cli(
        "complexity --m-min 12 --m-max 12 --n 100 --p 2 --delta 0.2 --tau 11 --out " + out_csv,
        dir);
    CHECK(result.exit_code == 0);

    const auto lines = lines_of(read_file(out_csv));
    REQUIRE(lines.size() == 2);  // header + one data row
    CHECK(lines[0] ==
          "m,MS-KAI-CG,MS-KAI-CG-FB,MUSIC,Root-MUSIC,AVF,CG,ESPRIT,TS-ESPRIT");

    std::stringstream row(lines[1]);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 9);
    CHECK(std::stod(cells[3]) == doctest::Approx(std::log10(1087800.0)).epsilon(1e-7));
    CHECK(cells[1] == cells[2]);  // merged knowledge-aided row
}

TEST_CASE("complexity range over sensors keeps the merged row merged") {
    const fs::path dir = fresh_dir("complexity_range");
    const std::string out_csv = (dir / "complexity.csv").string();
    CHECK(run_cli("complexity --m-min 5 --m-max 100 --n 100 --p 4 --out " + out_csv, dir)
              .exit_code == 0);
    const auto lines = lines_of(read_file(out_csv));
    REQUIRE(lines.size() == 97);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::stringstream row(lines[i]);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        CHECK(cells[1] == cells[2]);
    }

    CHECK(run_cli("complexity --m-min 10 --m-max 5 --out " + out_csv, dir).exit_code == 2);
}

TEST_CASE("bundled scenario files parse and drive a small run") {
    const fs::path dir = fresh_dir("bundled");
    // Trim the bundled scenario to a quick smoke run via seed/worker overrides.
    for (const char* name : {"uncorrelated.cfg", "correlated.cfg"}) {
        std::ifstream bundled(fs::path(KAICG_SCENARIO_DIR) / name);
        REQUIRE(bundled.good());
        std::stringstream buffer;
        buffer << bundled.rdbuf();
        std::string text = buffer.str();
        // shrink for test runtime: fewer trials and SNRs
        const auto trials_pos = text.find("trials = 150");
        REQUIRE(trials_pos != std::string::npos);
        text.replace(trials_pos, 12, "trials = 2  ");
        const auto snr_pos = text.find("snr_db_list");
        const auto snr_end = text.find('\n', snr_pos);
        text.replace(snr_pos, snr_end - snr_pos, "snr_db_list = 10");
        std::ofstream(dir / name) << text;

        const CommandResult result =
            run_cli("simulate --config " + (dir / name).string() + " --out " +
                        (dir / (std::string(name) + ".out")).string() + " --workers 2",
                    dir);
        CHECK(result.exit_code == 0);
        const auto stats_lines = lines_of(read_file(dir / (std::string(name) + ".out") / "stats.csv"));
        CHECK(stats_lines.size() >= 2);
    }
}
