// Drives the built executable end to end: outputs, files and exit codes.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kTmp = MONOTONE_LAB_TEST_TMP;

struct Run {
    int code = -1;
    std::string out;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Run run(const std::string& args) {
    fs::create_directories(kTmp);
    const auto out = kTmp / "stdout.txt";
    const std::string cmd = std::string("\"") + MONOTONE_LAB_CLI + "\" " + args + " > \"" + out.string() +
                            "\" 2> \"" + (kTmp / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

fs::path write_config(const std::string& name, const std::string& text) {
    fs::create_directories(kTmp);
    const auto p = kTmp / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

std::string cfg_arg(const fs::path& p) { return "--config \"" + p.string() + "\""; }

}  // namespace

TEST_CASE("curve: preset CSV and JSON") {
    const auto csv = run("curve --preset fig1a --n-end 3");
    REQUIRE(csv.code == 0);
    CHECK(csv.out.rfind("n,expected_risk,limit_risk\n1,", 0) == 0);
    CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 4);

    const auto js = run("curve --preset fig1b --n-start 2 --n-end 4 --format json");
    REQUIRE(js.code == 0);
    const auto j = json::parse(js.out);
    CHECK(j["entries"].size() == 3);
    CHECK(j["entries"][0]["n"] == 2);
    CHECK(j.contains("limit_risk"));

    const auto mc = run("curve --preset fig1b --n-end 2 --mc-replicates 2000 --seed 5");
    REQUIRE(mc.code == 0);
    CHECK(mc.out.rfind("n,expected_risk,limit_risk,mc_estimate,mc_stderr\n", 0) == 0);
    CHECK(run("curve --preset fig1b --n-end 2 --mc-replicates 2000 --seed 5").out == mc.out);
}

TEST_CASE("curve: single-point config gives an all-zero risk column") {
    const auto p = write_config("single.json", R"({"schema_version": 1,
      "distribution": {"points": [{"x": [2], "y": 3}], "probs": [1]},
      "learner": {"kind": "linear_squared"}, "n_range": {"start": 1, "end": 5}})");
    const auto r = run("curve " + cfg_arg(p) + " --out \"" + (kTmp / "single.csv").string() + "\"");
    REQUIRE(r.code == 0);
    const auto csv = slurp(kTmp / "single.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    int rows = 0;
    while (std::getline(lines, line)) {
        CHECK(line.substr(line.find(',') + 1) == "0,0");
        ++rows;
    }
    CHECK(rows == 5);
}

TEST_CASE("check: verdicts") {
    const auto b = run("check --preset fig1b --n-end 60");
    REQUIRE(b.code == 0);
    const auto jb = json::parse(b.out);
    CHECK(jb["verdict"] == "violations-found");
    CHECK(jb["tolerance"] == 1e-12);

    const auto memo = write_config("memo.json", R"({"schema_version": 1,
      "distribution": {"points": [{"x": [0], "y": 1}, {"x": [1], "y": -1}, {"x": [2], "y": 1}],
                       "probs": [0.5, 0.3, 0.2]},
      "learner": {"kind": "memorize"}, "n_range": {"start": 1, "end": 15}})");
    const auto m = run("check " + cfg_arg(memo));
    REQUIRE(m.code == 0);
    CHECK(json::parse(m.out)["verdict"] == "monotone-on-range");
    CHECK(json::parse(m.out)["verdict_text"] == "no violation found on tested range");

    const auto mean = write_config("mean.json", R"({"schema_version": 1,
      "distribution": {"points": [{"z": 0}, {"z": 1}, {"z": 3}], "probs": [0.3, 0.3, 0.4]},
      "learner": {"kind": "gaussian_mean_mle", "sigma": [[1]]}, "n_range": {"start": 1, "end": 20}})");
    const auto g = run("check " + cfg_arg(mean) + " --tol 0");
    REQUIRE(g.code == 0);
    CHECK(json::parse(g.out)["violations"].empty());
}

TEST_CASE("lemma and find-q") {
    const auto p = write_config("lemma.json", R"({"schema_version": 1,
      "distribution": {"points": [{"x": [1], "y": 1}, {"x": [0.01], "y": 1}], "probs": [0.5, 0.5]},
      "learner": {"kind": "linear_squared"},
      "lemma": {"a": {"x": [1], "y": 1}, "b": {"x": [0.01], "y": 1}, "n": 5}})");
    const auto r = run("lemma " + cfg_arg(p));
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["margin"].get<double>() == doctest::Approx(0.97814).epsilon(1e-5));
    CHECK(j["hypotheses"].size() == 3);
    CHECK_FALSE(j.contains("counterexample"));

    const auto q = run("lemma " + cfg_arg(p) + " --n 3 --find-q");
    REQUIRE(q.code == 0);
    const auto jq = json::parse(q.out);
    CHECK(jq["n"] == 3);
    CHECK(jq["counterexample"]["found"] == true);
    CHECK(jq["counterexample"]["delta"].get<double>() > 0.0);

    const auto f = run("find-q " + cfg_arg(p) + " --n-start 1 --n-end 3");
    REQUIRE(f.code == 0);
    const auto jf = json::parse(f.out);
    REQUIRE(jf.size() == 3);
    for (const auto& e : jf) CHECK(e["found"] == true);

    // No lemma block: a config error.
    const auto none = write_config("nolemma.json", R"({"schema_version": 1,
      "distribution": {"points": [{"x": [1], "y": 1}], "probs": [1]}, "learner": {"kind": "linear_squared"}})");
    CHECK(run("lemma " + cfg_arg(none)).code == 1);
}

TEST_CASE("reproduce writes per-curve CSVs and a summary, bitwise stable") {
    const auto dir1 = kTmp / "repro1";
    const auto dir2 = kTmp / "repro2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    REQUIRE(run("reproduce fig1c --out \"" + dir1.string() + "\"").code == 0);
    REQUIRE(run("reproduce fig1c --out \"" + dir2.string() + "\"").code == 0);
    for (const char* f : {"fig1c_plain.csv", "fig1c_ridge.csv", "fig1c_summary.json"}) {
        REQUIRE(fs::exists(dir1 / f));
        CHECK(slurp(dir1 / f) == slurp(dir2 / f));
    }
    const auto plain = slurp(dir1 / "fig1c_plain.csv");
    CHECK(std::count(plain.begin(), plain.end(), '\n') == 101);
    CHECK(plain.find("\n100,") != std::string::npos);
    const auto summary = json::parse(slurp(dir1 / "fig1c_summary.json"));
    REQUIRE(summary["curves"].size() == 2);
    CHECK(summary["curves"][0]["name"] == "fig1c_plain");
    CHECK(summary["curves"][0]["violation_count"] == 0);
    CHECK(summary["curves"][1]["violation_count"].get<int>() > 0);

    // The thread cap does not change any byte.
    const auto dir3 = kTmp / "repro3";
    fs::remove_all(dir3);
    REQUIRE(run("reproduce fig1c --out \"" + dir3.string() + "\"").code == 0);
    const std::string capped = std::string("MONOTONE_LAB_THREADS=1 \"") + MONOTONE_LAB_CLI + "\" reproduce fig1c --out \"" +
                               (kTmp / "repro4").string() + "\" > /dev/null";
    REQUIRE(std::system(capped.c_str()) == 0);
    CHECK(slurp(dir3 / "fig1c_ridge.csv") == slurp(kTmp / "repro4" / "fig1c_ridge.csv"));
}

TEST_CASE("exit codes") {
    CHECK(run("").code == 1);
    CHECK(run("curve --bogus-flag").code == 1);
    CHECK(run("curve --preset fig1a --format xml").code == 1);
    CHECK(run("curve --config /nonexistent.json").code == 1);
    CHECK(run("curve --preset nope").code == 1);
    CHECK(run("curve").code == 1);
    CHECK(run("curve --preset fig1a --n-start 5 --n-end 2").code == 1);
    CHECK(run("reproduce fig9").code == 1);
    CHECK(run("--help").code == 0);

    const auto bad = write_config("bad.json", "{\n  \"schema_version\": 1,\n  oops\n}");
    CHECK(run("curve " + cfg_arg(bad)).code == 1);

    // Learner and data variants that do not fit together.
    const auto mismatch = write_config("mismatch.json", R"({"schema_version": 1,
      "distribution": {"points": [{"z": 1}], "probs": [1]}, "learner": {"kind": "linear_absolute"}})");
    CHECK(run("check " + cfg_arg(mismatch)).code == 1);

    const auto cap = write_config("cap.json", R"({"schema_version": 1,
      "distribution": {"points": [{"z": 1}, {"z": 2}, {"z": 3}], "probs": [0.2, 0.3, 0.5]},
      "learner": {"kind": "gaussian_mean_mle", "sigma": [[1]]},
      "n_range": {"start": 50, "end": 50}, "engine": {"max_compositions": 100}})");
    CHECK(run("curve " + cfg_arg(cap)).code == 2);

    const auto fit = write_config("fit.json", R"({"schema_version": 1,
      "distribution": {"points": [{"z": 0}, {"z": 1}], "probs": [0.5, 0.5]},
      "learner": {"kind": "gaussian_variance_mle"}, "n_range": {"start": 1, "end": 3}})");
    CHECK(run("curve " + cfg_arg(fit)).code == 3);
}
