#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include <json.hpp>

#include "eps/scenario.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("eps_cli_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(EPSTOOL_PATH) + " " + args + " >" + log.string() +
                            " 2>" + log.string() + ".err";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

fs::path write_small_scenario(const fs::path& dir) {
    eps::Scenario s;
    s.n_devices = 3;
    s.separation_hz = 1000.0;
    s.seed = 11;
    s.domains = {{"wired", eps::DomainPreset::Wired, 720.0},
                 {"wireless-1m", eps::DomainPreset::Wireless1m, 720.0}};
    s.frames_per_device_per_domain = 4;
    s.k_folds = 2;
    s.eps.n_bins = 1024;
    const fs::path p = dir / "scenario.json";
    std::ofstream os(p);
    os << eps::scenario_to_json(s).dump(2) << "\n";
    return p;
}

} // namespace

TEST_CASE("no subcommand exits nonzero") {
    TempDir tmp;
    CHECK(run("", tmp.path / "log") != 0);
}

TEST_CASE("unknown subcommand exits nonzero") {
    TempDir tmp;
    CHECK(run("frobnicate", tmp.path / "log") != 0);
}

TEST_CASE("missing config file exits nonzero") {
    TempDir tmp;
    CHECK(run("simulate --config /nonexistent.json --out " + (tmp.path / "out").string(),
              tmp.path / "log") != 0);
}

TEST_CASE("malformed scenario JSON exits nonzero with an error message") {
    TempDir tmp;
    const fs::path bad = tmp.path / "bad.json";
    std::ofstream(bad) << "{ not json";
    CHECK(run("simulate --config " + bad.string() + " --out " + (tmp.path / "out").string(),
              tmp.path / "log") != 0);
    CHECK(slurp(tmp.path / "log.err").find("error") != std::string::npos);
}

TEST_CASE("--error-json emits machine-readable errors") {
    TempDir tmp;
    const fs::path bad = tmp.path / "bad.json";
    std::ofstream(bad) << "{}";
    CHECK(run("--error-json simulate --config " + bad.string() + " --out " +
                  (tmp.path / "out").string(),
              tmp.path / "log") != 0);
    const nlohmann::json err = nlohmann::json::parse(slurp(tmp.path / "log.err"));
    CHECK(err.contains("error"));
}

TEST_CASE("simulate -> extract -> evaluate -> report full pipeline") {
    TempDir tmp;
    const fs::path scenario = write_small_scenario(tmp.path);
    const fs::path data = tmp.path / "data";
    const fs::path feat = tmp.path / "feat";
    const fs::path rep = tmp.path / "rep";

    CHECK(run("simulate --config " + scenario.string() + " --out " + data.string() +
                  " --threads 2",
              tmp.path / "sim.log") == 0);
    CHECK(fs::exists(data / "manifest.json"));

    CHECK(run("extract --config " + scenario.string() + " --dataset " + data.string() +
                  " --out " + feat.string(),
              tmp.path / "ext.log") == 0);
    const fs::path train = feat / "wired.eps.features";
    const fs::path test = feat / "wireless-1m.eps.features";
    CHECK(fs::exists(train));
    CHECK(fs::exists(test));

    CHECK(run("evaluate --config " + scenario.string() + " --train " + train.string() +
                  " --test " + train.string() + " --test " + test.string() + " --out " +
                  rep.string(),
              tmp.path / "eval.log") == 0);
    std::size_t n_reports = 0;
    fs::path one_report;
    for (const auto& e : fs::directory_iterator(rep))
        if (e.path().extension() == ".json" &&
            e.path().filename().string().rfind("report_", 0) == 0) {
            one_report = e.path();
            ++n_reports;
        }
    CHECK(n_reports == 2);

    CHECK(run("report --reports " + one_report.string() + " --out " +
                  (tmp.path / "summary").string(),
              tmp.path / "rep.log") == 0);
    CHECK(fs::exists(tmp.path / "summary" / "summary.json"));
    CHECK(fs::exists(tmp.path / "summary" / "summary.csv"));
}

TEST_CASE("--seed overrides the scenario seed") {
    TempDir tmp;
    const fs::path scenario = write_small_scenario(tmp.path);
    CHECK(run("simulate --config " + scenario.string() + " --out " + (tmp.path / "a").string(),
              tmp.path / "l1") == 0);
    CHECK(run("simulate --config " + scenario.string() + " --out " + (tmp.path / "b").string() +
                  " --seed 999",
              tmp.path / "l2") == 0);
    // different seed -> different recordings
    const nlohmann::json manifest = nlohmann::json::parse(slurp(tmp.path / "a" / "manifest.json"));
    const std::string rel = manifest.at("recordings")[0].at("path").get<std::string>();
    std::ifstream fa(tmp.path / "a" / rel, std::ios::binary);
    std::ifstream fb(tmp.path / "b" / rel, std::ios::binary);
    std::string da((std::istreambuf_iterator<char>(fa)), {});
    std::string db((std::istreambuf_iterator<char>(fb)), {});
    CHECK(da != db);
}

TEST_CASE("raw-iq extraction via the CLI") {
    TempDir tmp;
    const fs::path scenario = write_small_scenario(tmp.path);
    const fs::path data = tmp.path / "data";
    CHECK(run("simulate --config " + scenario.string() + " --out " + data.string(),
              tmp.path / "l1") == 0);
    CHECK(run("extract --config " + scenario.string() + " --dataset " + data.string() +
                  " --representation raw-iq --out " + (tmp.path / "feat").string(),
              tmp.path / "l2") == 0);
    CHECK(fs::exists(tmp.path / "feat" / "wired.raw-iq.features"));
}
