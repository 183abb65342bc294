// End-to-end driver tests: subcommands, exit codes, overrides, output
// files, and batch mode, exercised through the installed binary.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / "hybridhj_cli_tests" / tag;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out_file = dir / "stdout.txt";
    const fs::path err_file = dir / "stderr.txt";
    const std::string cmd = std::string(CLI_BINARY_PATH) + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

double json_number(const std::string& text, const std::string& key) {
    const std::string needle = "\"" + key + "\":";
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    return std::strtod(text.c_str() + pos + needle.size(), nullptr);
}

} // namespace

TEST_CASE("list-scenarios names every registry entry") {
    const fs::path dir = scratch_dir("list");
    const RunResult r = run_cli("list-scenarios", dir);
    CHECK(r.code == 0);
    for (const auto& name :
         {"billiard", "rolling_disk", "rolling_disk_forced", "nh_particle", "rigid_body"}) {
        CHECK(r.out.find(name) != std::string::npos);
    }
}

TEST_CASE("simulate writes deterministic outputs") {
    const fs::path dir = scratch_dir("sim_det");
    const std::string base = "simulate --scenario billiard --out ";
    const RunResult a = run_cli(base + (dir / "a").string(), dir);
    const RunResult b = run_cli(base + (dir / "b").string(), dir);
    CHECK(a.code == 0);
    CHECK(b.code == 0);
    CHECK(a.out.find("impacts: 5") != std::string::npos);
    CHECK(a.out.find("termination: horizon_reached") != std::string::npos);
    CHECK(slurp(dir / "a" / "trajectory.csv") == slurp(dir / "b" / "trajectory.csv"));
    CHECK(slurp(dir / "a" / "events.json") == slurp(dir / "b" / "events.json"));
    // 17-significant-digit numbers in the trajectory table.
    CHECK(slurp(dir / "a" / "trajectory.csv").find("0.59999999999999998") != std::string::npos);
}

TEST_CASE("usage errors exit with the config code") {
    const fs::path dir = scratch_dir("usage");
    CHECK(run_cli("simulate --scenario not_a_scenario --out " + (dir / "x").string(), dir).code ==
          2);
    CHECK(run_cli("simulate --out " + (dir / "y").string(), dir).code == 2);
    // Options belong after the subcommand.
    CHECK(run_cli("--scenario billiard simulate", dir).code == 2);
    CHECK(run_cli("orbit --scenario billiard", dir).code == 2);
    CHECK(run_cli("simulate --scenario billiard --h 0 --out " + (dir / "z").string(), dir).code ==
          2);
}

TEST_CASE("repeated step flags warn and keep the last value") {
    const fs::path dir = scratch_dir("dup_h");
    const RunResult r = run_cli("simulate --scenario billiard --h 0.5 --h 0.001 --out " +
                                    (dir / "o").string(),
                                dir);
    CHECK(r.code == 0);
    CHECK(r.err.find("using the last value") != std::string::npos);
    const std::string csv = slurp(dir / "o" / "trajectory.csv");
    // The fine step produced thousands of rows, so the last flag won.
    CHECK(std::count(csv.begin(), csv.end(), '\n') > 5000);
}

TEST_CASE("zero horizon simulates a single state") {
    const fs::path dir = scratch_dir("zero_h");
    const RunResult r = run_cli("simulate --scenario billiard --horizon 0 --out " +
                                    (dir / "o").string(),
                                dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("impacts: 0") != std::string::npos);
}

TEST_CASE("chart singularities surface as runtime errors") {
    const fs::path dir = scratch_dir("chart");
    const RunResult r = run_cli(
        "simulate --scenario rigid_body --set run.x0=1.0,1.5697,0,0,1,-1.5 --out " +
            (dir / "o").string(),
        dir);
    CHECK(r.code == 3);
    CHECK(r.out.find("termination: error") != std::string::npos);
}

TEST_CASE("verify-hj passes the shipped families and flags defects") {
    const fs::path dir = scratch_dir("verify");
    SECTION("billiard family verifies clean") {
        const RunResult r =
            run_cli("verify-hj --scenario billiard --out " + (dir / "ok").string(), dir);
        CHECK(r.code == 0);
        CHECK(r.out.find("PASS") != std::string::npos);
        const std::string json = slurp(dir / "ok" / "residuals.json");
        CHECK(json.find("\"pass\":true") != std::string::npos);
    }
    SECTION("undefined transfer fails with the reason recorded") {
        const RunResult r = run_cli("verify-hj --scenario rigid_body --set mu3=2 --out " +
                                        (dir / "undef").string(),
                                    dir);
        CHECK(r.code == 1);
        CHECK(r.out.find("relatedness: undefined") != std::string::npos);
        const std::string json = slurp(dir / "undef" / "residuals.json");
        CHECK(json.find("\"defined\":false") != std::string::npos);
    }
    SECTION("a perturbed family slope fails the residual check") {
        const RunResult r =
            run_cli("verify-hj --scenario rolling_disk_forced --set family_slope=0.25 --out " +
                        (dir / "slope").string(),
                    dir);
        CHECK(r.code == 1);
        CHECK(r.out.find("FAIL") != std::string::npos);
    }
}

TEST_CASE("compare agrees across methods and decays with the step") {
    const fs::path dir = scratch_dir("compare");
    const RunResult ok =
        run_cli("compare --scenario nh_particle --out " + (dir / "nh").string(), dir);
    CHECK(ok.code == 0);
    CHECK(ok.out.find("PASS") != std::string::npos);
    CHECK(slurp(dir / "nh" / "comparison.json").find("sup_discrepancy") != std::string::npos);

    const RunResult coarse = run_cli("compare --scenario nh_particle --horizon 2.5 --h 0.02 "
                                     "--out " +
                                         (dir / "h1").string(),
                                     dir);
    const RunResult fine = run_cli("compare --scenario nh_particle --horizon 2.5 --h 0.01 "
                                   "--out " +
                                       (dir / "h2").string(),
                                   dir);
    CHECK(coarse.code == 0);
    CHECK(fine.code == 0);
    const double sup_coarse = json_number(slurp(dir / "h1" / "comparison.json"),
                                          "sup_discrepancy");
    const double sup_fine = json_number(slurp(dir / "h2" / "comparison.json"),
                                        "sup_discrepancy");
    if (sup_coarse > 1e-11) {
        CHECK(sup_coarse / sup_fine >= 8.0);
    } else {
        CHECK(sup_fine <= 1e-11);
    }
}

TEST_CASE("reconstruct writes the base and lifted outputs") {
    const fs::path dir = scratch_dir("recon");
    const RunResult r =
        run_cli("reconstruct --scenario nh_particle --out " + (dir / "o").string(), dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("termination: horizon_reached") != std::string::npos);
    CHECK(fs::exists(dir / "o" / "base_trajectory.csv"));
    CHECK(fs::exists(dir / "o" / "trajectory.csv"));
    CHECK(fs::exists(dir / "o" / "events.json"));
    CHECK(fs::exists(dir / "o" / "transfer_log.json"));

    const RunResult bad = run_cli("reconstruct --scenario billiard --set run.x0=3,0,1,0 --out " +
                                      (dir / "bad").string(),
                                  dir);
    CHECK(bad.code == 3);
    CHECK(bad.out.find("runtime error") != std::string::npos);
}

TEST_CASE("config files drive runs and flags override them") {
    const fs::path dir = scratch_dir("config");
    const fs::path cfg = dir / "run.cfg";
    {
        std::ofstream out(cfg);
        out << "[scenario]\nname = billiard\n\n[run]\nhorizon = 4\n\n[output]\ndir = "
            << (dir / "from_file").string() << "\n";
    }
    const RunResult r = run_cli("simulate --config " + cfg.string(), dir);
    CHECK(r.code == 0);
    CHECK(r.out.find("impacts: 2") != std::string::npos);
    CHECK(fs::exists(dir / "from_file" / "trajectory.csv"));

    const RunResult o = run_cli("simulate --config " + cfg.string() + " --out " +
                                    (dir / "flag_wins").string(),
                                dir);
    CHECK(o.code == 0);
    CHECK(fs::exists(dir / "flag_wins" / "trajectory.csv"));

    const fs::path bad = dir / "bad.cfg";
    {
        std::ofstream out(bad);
        out << "[run]\nh = -1\n";
    }
    CHECK(run_cli("simulate --config " + bad.string(), dir).code == 2);
}

TEST_CASE("batch mode reports the worst exit code") {
    const fs::path dir = scratch_dir("batch");
    const fs::path good = dir / "good.cfg";
    const fs::path bad = dir / "bad.cfg";
    {
        std::ofstream out(good);
        out << "[scenario]\nname = billiard\n\n[run]\nhorizon = 2\n\n[output]\ndir = "
            << (dir / "good_out").string() << "\n";
    }
    {
        std::ofstream out(bad);
        out << "[scenario]\nname = not_a_scenario\n\n[output]\ndir = "
            << (dir / "bad_out").string() << "\n";
    }
    const RunResult r = run_cli("simulate --config " + good.string() + " --config " +
                                    bad.string() + " --jobs 2",
                                dir);
    CHECK(r.code == 2);
    CHECK(r.out.find("== config " + good.string()) != std::string::npos);
    CHECK(r.out.find("== config " + bad.string()) != std::string::npos);
    CHECK(fs::exists(dir / "good_out" / "trajectory.csv"));
}
