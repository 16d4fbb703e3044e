#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mwalk/experiments.hpp"

using namespace mwalk;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string error_message(const std::string& text) {
    try {
        (void)parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path fresh_dir(const std::string& stem) {
    const fs::path dir = fs::temp_directory_path() / ("mwalk_test_" + stem);
    fs::remove_all(dir);
    return dir;
}

const char* kLyapunovConfig = R"({
  "experiment": "lyapunov",
  "measure": {"kind": "point-mass", "matrix": [[2, 0], [0, 1]]},
  "n": 1000,
  "replicas": 4,
  "seed": 7
})";

}  // namespace

TEST_CASE("experiment kind names round trip") {
    for (ExperimentKind kind :
         {ExperimentKind::Lyapunov, ExperimentKind::Sigma2, ExperimentKind::Contraction,
          ExperimentKind::CouplingDecay, ExperimentKind::CltRate, ExperimentKind::MzRate,
          ExperimentKind::Lil, ExperimentKind::FunctionalSup, ExperimentKind::Vbe,
          ExperimentKind::NormGap}) {
        CHECK(experiment_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(experiment_kind_from_string("frobnicate"), ConfigError);
}

TEST_CASE("minimal config parses with defaults") {
    const auto config = parse_config_text(kLyapunovConfig);
    CHECK(config.kind == ExperimentKind::Lyapunov);
    CHECK(config.seed == 7);
    CHECK(config.workers == 0);
    CHECK(config.label == "lyapunov");
    CHECK(config.n == 1000);
    CHECK(config.replicas == 4);
    REQUIRE(config.measure.has_value());
    CHECK(config.measure->kind == MeasureKind::PointMass);
    CHECK(config.measure->dim == 2);
    CHECK(config.config_digest != 0);
    CHECK_NOTHROW(validate_semantics(config));
}

TEST_CASE("unknown keys are rejected by name at every level") {
    const std::string top = error_message(R"({
      "experiment": "lyapunov",
      "measure": {"kind": "point-mass", "matrix": [[2, 0], [0, 1]]},
      "n": 10, "replicas": 2, "bogusKnob": 1
    })");
    CHECK(top.find("unknown key 'bogusKnob'") != std::string::npos);

    const std::string inner = error_message(R"({
      "experiment": "lyapunov",
      "measure": {"kind": "point-mass", "matrix": [[2, 0], [0, 1]], "spin": 3},
      "n": 10, "replicas": 2
    })");
    CHECK(inner.find("measure: unknown key 'spin'") != std::string::npos);

    const std::string atom = error_message(R"({
      "experiment": "lyapunov",
      "measure": {"kind": "finite-support",
                  "atoms": [{"matrix": [[2, 0], [0, 1]], "prob": 1.0, "weight": 2}]},
      "n": 10, "replicas": 2
    })");
    CHECK(atom.find("measure.atoms[0]: unknown key 'weight'") != std::string::npos);
}

TEST_CASE("a bad probability vector names the atoms field") {
    const std::string msg = error_message(R"({
      "experiment": "lyapunov",
      "measure": {"kind": "finite-support", "atoms": [
        {"matrix": [[2, 0], [0, 1]], "prob": 0.4},
        {"matrix": [[1, 0], [0, 2]], "prob": 0.5}
      ]},
      "n": 10, "replicas": 2
    })");
    CHECK(msg.find("atoms") != std::string::npos);
    CHECK(msg.find("sum") != std::string::npos);
}

TEST_CASE("measure schema errors") {
    CHECK(error_message(R"({"experiment": "lyapunov", "n": 1, "replicas": 1})") ==
          "measure: missing");
    CHECK(error_message(R"({
      "experiment": "lyapunov", "n": 1, "replicas": 1,
      "measure": {"kind": "teleport"}
    })").find("unknown kind 'teleport'") != std::string::npos);
    CHECK(error_message(R"({
      "experiment": "lyapunov", "n": 1, "replicas": 1,
      "measure": {"kind": "point-mass", "matrix": [[2, 0], [0, 1]], "dim": 3}
    })").find("measure.dim") != std::string::npos);
    CHECK(error_message(R"({
      "experiment": "lyapunov", "n": 1, "replicas": 1,
      "measure": {"kind": "point-mass", "matrix": [[2, 0], [0, 1, 5]]}
    })").find("square") != std::string::npos);
}

TEST_CASE("semantic validation failures") {
    auto parsed = [](const std::string& text) {
        const auto config = parse_config_text(text);
        validate_semantics(config);
    };
    CHECK_THROWS_WITH_AS(parsed(R"({
      "experiment": "lil", "nMax": 20000, "replicas": 10, "stride": 2,
      "measure": {"kind": "bernoulli-reduction"}
    })"), "stride: lil checkpoints require stride 1", ConfigError);
    CHECK_THROWS_WITH_AS(parsed(R"({
      "experiment": "functional-sup", "n": 100, "replicas": 10, "stride": 4,
      "measure": {"kind": "bernoulli-reduction"}
    })"), "stride: the polygonal process requires stride 1", ConfigError);
    CHECK_THROWS_WITH_AS(parsed(R"({
      "experiment": "clt-rate", "nGrid": [64, 4096], "replicas": 10,
      "measure": {"kind": "bernoulli-reduction"}
    })"), "nGrid: needs at least 3 points", ConfigError);
    CHECK_THROWS_WITH_AS(parsed(R"({
      "experiment": "mz-rate", "nGrid": [64, 512, 4096], "replicas": 10, "p": 2.5,
      "measure": {"kind": "heavy-log-tail", "dim": 2, "tailIndex": 3.0}
    })"), "p: must lie in (1,2)", ConfigError);
    CHECK_THROWS_WITH_AS(parsed(R"({
      "experiment": "vbe", "replicas": 10, "steps": 5, "r": 1.0
    })"), "r: must lie in (1, 2]", ConfigError);
    CHECK_THROWS_WITH_AS(parsed(R"({
      "experiment": "lil", "nMax": 500, "replicas": 10,
      "measure": {"kind": "bernoulli-reduction"}
    })"), "nMax: must be >= 10000", ConfigError);
}

TEST_CASE("describe is a dry run with a plan") {
    const auto config = parse_config_text(kLyapunovConfig);
    const std::string plan = describe(config);
    CHECK(plan.find("experiment: lyapunov") != std::string::npos);
    CHECK(plan.find("stages:") != std::string::npos);
    CHECK(plan.find("4 replicas x 1000 steps") != std::string::npos);
    CHECK(plan.find("no sampling performed (dry run)") != std::string::npos);
}

TEST_CASE("martingale difference increment corpora") {
    const auto a = make_md_increments("rademacher", 5, 20, 42);
    const auto b = make_md_increments("rademacher", 5, 20, 42);
    CHECK(a == b);
    for (const auto& row : a) {
        for (double z : row) CHECK(std::abs(z) == 1.0);
    }
    const auto u = make_md_increments("uniform", 5, 200, 43);
    for (const auto& row : u) {
        for (double z : row) {
            CHECK(z >= -1.0);
            CHECK(z <= 1.0);
        }
    }
    // Modulated steps have magnitude in [1, 1.5): bounded but path dependent.
    const auto m = make_md_increments("modulated", 5, 200, 44);
    for (const auto& row : m) {
        for (double z : row) {
            CHECK(std::abs(z) >= 1.0);
            CHECK(std::abs(z) < 1.5);
        }
    }
    CHECK_THROWS_AS(make_md_increments("levy", 2, 2, 1), ConfigError);
    CHECK_THROWS_AS(make_md_increments("normal", 0, 2, 1), ConfigError);
}

TEST_CASE("run_experiment writes a table and a manifest") {
    const fs::path dir = fresh_dir("lyapunov");
    const auto config = parse_config_text(kLyapunovConfig);
    const auto artifacts = run_experiment(config, dir.string(), "csv");

    REQUIRE(artifacts.files.size() == 1);
    CHECK(artifacts.files[0] == "lyapunov.csv");
    const std::string table = slurp(dir / "lyapunov.csv");
    CHECK(table.rfind("quantity,value\n", 0) == 0);
    CHECK(table.find("lambdaHat,") != std::string::npos);

    const auto manifest = nlohmann::json::parse(slurp(artifacts.manifest_path));
    CHECK(manifest.at("experiment") == "lyapunov");
    CHECK(manifest.at("seed") == 7);
    CHECK(manifest.at("configDigest").get<std::uint64_t>() == config.config_digest);
    CHECK(manifest.at("versions").at("mwalk") == kVersion);
    CHECK(manifest.at("wallTimeSeconds").get<double>() >= 0.0);
    CHECK(manifest.contains("measureDigest"));
    const double lambda = manifest.at("results").at("lambdaHat").get<double>();
    CHECK(lambda == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    fs::remove_all(dir);
}

TEST_CASE("json table format produces parseable records") {
    const fs::path dir = fresh_dir("json_table");
    auto config = parse_config_text(kLyapunovConfig);
    config.label = "out";
    const auto artifacts = run_experiment(config, dir.string(), "json");
    CHECK(artifacts.files[0] == "out.json");
    const auto rows = nlohmann::json::parse(slurp(dir / "out.json"));
    REQUIRE(rows.is_array());
    CHECK(rows.size() == 5);
    CHECK(rows[0].at("quantity") == "lambdaHat");
    fs::remove_all(dir);
}

TEST_CASE("table bytes are identical across worker counts") {
    const std::string text = R"({
      "experiment": "clt-rate",
      "measure": {"kind": "bernoulli-reduction"},
      "nGrid": [8, 64, 512],
      "replicas": 500,
      "r": 1.0,
      "seed": 11
    })";
    auto config = parse_config_text(text);
    const fs::path dir1 = fresh_dir("workers1");
    const fs::path dir8 = fresh_dir("workers8");
    config.workers = 1;
    run_experiment(config, dir1.string(), "csv");
    config.workers = 8;
    run_experiment(config, dir8.string(), "csv");
    CHECK(slurp(dir1 / "clt-rate.csv") == slurp(dir8 / "clt-rate.csv"));
    fs::remove_all(dir1);
    fs::remove_all(dir8);
}

TEST_CASE("vbe experiment runs without a measure") {
    const fs::path dir = fresh_dir("vbe");
    const auto config = parse_config_text(R"({
      "experiment": "vbe", "replicas": 2000, "steps": 30, "r": 1.5,
      "increments": "modulated", "seed": 3
    })");
    const auto artifacts = run_experiment(config, dir.string(), "csv");
    const auto manifest = nlohmann::json::parse(slurp(artifacts.manifest_path));
    CHECK_FALSE(manifest.contains("measureDigest"));
    CHECK(manifest.at("results").at("holds").get<bool>());
    fs::remove_all(dir);
}

TEST_CASE("run_experiment validates the output format") {
    const auto config = parse_config_text(kLyapunovConfig);
    CHECK_THROWS_AS(run_experiment(config, fs::temp_directory_path().string(), "xml"),
                    ConfigError);
}

TEST_CASE("config file loader reports missing files") {
    CHECK_THROWS_AS(parse_config_file("/nonexistent/config.json"), ConfigError);
}
