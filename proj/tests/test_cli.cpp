#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

// Compile definition pointing at the built binary.
#ifndef SRR_CLI_PATH
#error "SRR_CLI_PATH must be defined"
#endif

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    std::string command = std::string(SRR_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buffer[512];
    while (std::fgets(buffer, sizeof(buffer), pipe) != nullptr) {
        result.output += buffer;
    }
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}   // namespace

TEST_CASE("cli version and bad invocations") {
    CliResult version = run_cli("--version");
    CHECK(version.exit_code == 0);
    CHECK(version.output.find("0.1.0") != std::string::npos);

    CHECK(run_cli("").exit_code != 0);            // subcommand required
    CHECK(run_cli("index").exit_code != 0);       // missing --corpus/--out
    CHECK(run_cli("eval --traj /nope --dataset /nope").exit_code != 0);
    CHECK(run_cli("frobnicate").exit_code != 0);  // unknown subcommand
}

TEST_CASE("cli pipeline: synth, index, rollout, score, eval, grpo-check") {
    TempDir dir("srr_cli_pipeline");

    CliResult synth = run_cli("synth --hops 2 --entities 4 --distractors 10"
                              " --padding 10 --seed 7 --out " + dir.path.string());
    REQUIRE(synth.exit_code == 0);
    CHECK(synth.output.find("wrote 1 episode(s)") != std::string::npos);
    REQUIRE(fs::exists(dir.file("corpus.jsonl")));

    CliResult index = run_cli("index --corpus " + dir.file("corpus.jsonl") +
                              " --out " + dir.file("idx"));
    REQUIRE(index.exit_code == 0);
    CHECK(index.output.find("indexed 12 documents") != std::string::npos);
    REQUIRE(fs::exists(dir.file("idx") + "/index.json"));

    CliResult rollout = run_cli(
        "rollout --dataset " + dir.file("dataset.jsonl") + " --index " +
        dir.file("idx") + " --policy scripted:oracle --episodes " +
        dir.file("episodes.jsonl") + " --out " + dir.file("traj.jsonl"));
    REQUIRE(rollout.exit_code == 0);
    auto manifest = nlohmann::json::parse(rollout.output);
    CHECK(manifest.at("n") == 1);
    CHECK(manifest.at("reward_mean").get<double>() ==
          doctest::Approx(1.8).epsilon(1e-12));
    REQUIRE(fs::exists(dir.file("traj.jsonl")));

    CliResult score = run_cli("score --traj " + dir.file("traj.jsonl") +
                              " --dataset " + dir.file("dataset.jsonl"));
    REQUIRE(score.exit_code == 0);
    auto row = nlohmann::json::parse(score.output.substr(0, score.output.find('\n')));
    CHECK(row.at("f_indicator") == 1);
    CHECK(row.at("total").get<double>() == doctest::Approx(1.8).epsilon(1e-12));

    // Raising c_start to 3 keeps the full efficiency bonus at 2 retrievals.
    CliResult relaxed = run_cli("score --traj " + dir.file("traj.jsonl") +
                                " --dataset " + dir.file("dataset.jsonl") +
                                " --c-start 3");
    REQUIRE(relaxed.exit_code == 0);
    auto relaxed_row =
        nlohmann::json::parse(relaxed.output.substr(0, relaxed.output.find('\n')));
    CHECK(relaxed_row.at("r_count").get<double>() == 0.2);

    CliResult table = run_cli("eval --traj " + dir.file("traj.jsonl") +
                              " --dataset " + dir.file("dataset.jsonl") +
                              " --format table");
    REQUIRE(table.exit_code == 0);
    CHECK(table.output.find("Metric Value\n") == 0);
    CHECK(table.output.find("EM 100.00") != std::string::npos);
    CHECK(table.output.find("AvgReward 1.8000") != std::string::npos);

    CliResult json_eval = run_cli("eval --traj " + dir.file("traj.jsonl") +
                                  " --dataset " + dir.file("dataset.jsonl") +
                                  " --format json");
    REQUIRE(json_eval.exit_code == 0);
    auto report = nlohmann::json::parse(json_eval.output);
    CHECK(report.at("em_mean") == 1.0);

    std::string batch = dir.file("batch.jsonl");
    {
        std::ofstream f(batch);
        f << R"({"logp_new":[-0.1],"logp_old":[-0.1],"logp_ref":[-0.1],"mask":[1],"advantage":1.0})"
          << "\n"
          << R"({"logp_new":[-0.2],"logp_old":[-0.2],"logp_ref":[-0.2],"mask":[1],"advantage":-1.0})"
          << "\n";
    }
    CliResult grpo = run_cli("grpo-check --batch " + batch);
    REQUIRE(grpo.exit_code == 0);
    auto check = nlohmann::json::parse(grpo.output);
    CHECK(check.at("sequences") == 2);
    CHECK(check.at("objective_per_token").get<double>() == 0.0);
}
