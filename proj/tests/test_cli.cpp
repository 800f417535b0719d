#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "psrdet/bytes.hpp"
#include "psrdet/dataset.hpp"
#include "psrdet/model.hpp"
#include "test_support.hpp"

using namespace psrdet;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    test::TempDir scratch("cli_out");
    const fs::path out_file = scratch.path / "stdout.txt";
    const std::string cmd =
        std::string(PSRDET_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

// Short scenarios keep CLI runs fast; mirrors test_support's tiny_config.
std::string tiny_overrides() {
    return " --set duration_s=160 --set attack_duration_max_s=160 --set attack_shift_max_m=420";
}

std::string default_config_path() {
    return std::string(PSRDET_CONFIG_DIR) + "/default.cfg";
}

int count_lines(const fs::path& p, bool skip_comments = true) {
    std::ifstream in(p);
    int n = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (skip_comments && (line.empty() || line[0] == '#')) continue;
        ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("help output enumerates the documented flags") {
    const CliResult help = run_cli("--help");
    CHECK(help.exit_code == 0);
    for (const char* sub :
         {"generate", "pretrain-quantizer", "train", "evaluate", "sweep", "export-plot-data"})
        CHECK(help.output.find(sub) != std::string::npos);
    const CliResult gen_help = run_cli("generate --help");
    for (const char* flag : {"--config", "--out", "--seed", "--threads", "--train", "--test"})
        CHECK(gen_help.output.find(flag) != std::string::npos);
    const CliResult sweep_help = run_cli("sweep --help");
    for (const char* flag : {"--variants", "--layers"})
        CHECK(sweep_help.output.find(flag) != std::string::npos);
    const CliResult eval_help = run_cli("evaluate --help");
    CHECK(eval_help.output.find("--threshold") != std::string::npos);
}

TEST_CASE("unknown flags and bad configs are usage errors (exit 1)") {
    CHECK(run_cli("generate --frobnicate").exit_code == 1);
    CHECK(run_cli("bogus-subcommand").exit_code == 1);
    test::TempDir dir("badcfg");
    const CliResult missing =
        run_cli("generate --config /nonexistent.cfg --out " + (dir.path / "x").string());
    CHECK(missing.exit_code == 1);

    std::ofstream bad(dir.path / "bad.cfg");
    bad << "unknown_key = 5\n";
    bad.close();
    const CliResult unknown = run_cli("generate --config " + (dir.path / "bad.cfg").string() +
                                      " --out " + (dir.path / "x").string());
    CHECK(unknown.exit_code == 1);
    CHECK(unknown.output.find("unknown config key") != std::string::npos);
}

TEST_CASE("generate is deterministic per seed and writes a consistent manifest") {
    test::TempDir dir("cli_gen");
    const std::string base = "generate --config " + default_config_path() + tiny_overrides() +
                             " --train 4 --test 3 --seed 7 --threads 2 --out ";
    CHECK(run_cli(base + (dir.path / "a").string()).exit_code == 0);
    CHECK(run_cli(base + (dir.path / "b").string()).exit_code == 0);
    CHECK(hash_file((dir.path / "a" / "manifest.txt").string()) ==
          hash_file((dir.path / "b" / "manifest.txt").string()));
    const CorpusManifest manifest = read_manifest(dir.path / "a" / "manifest.txt");
    CHECK(manifest.train_count == 4);
    CHECK(manifest.test_count == 3);

    // A different seed produces different data.
    const std::string reseeded = "generate --config " + default_config_path() + tiny_overrides() +
                                 " --train 4 --test 3 --seed 8 --threads 2 --out " +
                                 (dir.path / "c").string();
    CHECK(run_cli(reseeded).exit_code == 0);
    CHECK(hash_file((dir.path / "a" / "manifest.txt").string()) !=
          hash_file((dir.path / "c" / "manifest.txt").string()));
}

TEST_CASE("full pipeline: quantizer, train, evaluate, sweep, export") {
    test::TempDir dir("cli_pipe");
    const std::string cfg = default_config_path();
    const std::string small_model =
        " --set quantizer_levels=16 --set model_d_model=16 --set model_ffn_hidden=32"
        " --set model_heads=2 --set model_blocks=1";
    const std::string corpus = (dir.path / "corpus").string();

    REQUIRE(run_cli("generate --config " + cfg + tiny_overrides() +
                    " --train 4 --test 3 --seed 5 --threads 2 --out " + corpus)
                .exit_code == 0);

    const std::string quantizer = (dir.path / "q.qntz").string();
    REQUIRE(run_cli("pretrain-quantizer --config " + cfg + tiny_overrides() + small_model +
                    " --corpus " + corpus + " --seed 5 --threads 2 --out " + quantizer)
                .exit_code == 0);

    const std::string run_dir = (dir.path / "run").string();
    REQUIRE(run_cli("train --config " + cfg + tiny_overrides() + small_model +
                    " --set max_steps=2 --set pair_batch_size=2 --corpus " + corpus +
                    " --quantizer " + quantizer + " --seed 5 --threads 2 --out " + run_dir)
                .exit_code == 0);
    CHECK(fs::exists(fs::path(run_dir) / "final.psrd"));
    CHECK(count_lines(fs::path(run_dir) / "loss_curve.csv") == 3);  // header + 2 steps

    const std::string metrics = (dir.path / "metrics.csv").string();
    const CliResult eval = run_cli("evaluate --config " + cfg + tiny_overrides() + small_model +
                                   " --corpus " + corpus + " --quantizer " + quantizer +
                                   " --checkpoint " + run_dir + "/final.psrd --threads 2 --out " +
                                   metrics);
    CHECK(eval.exit_code == 0);
    CHECK(eval.output.find("total") != std::string::npos);
    {
        std::ifstream in(metrics);
        std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        CHECK(all.find("subset,err,fa,md,positives,negatives") != std::string::npos);
        CHECK(all.find("config_hash") != std::string::npos);
    }

    // Sweep over 2 variants x 3 depths -> 6 rows after the header.
    const std::string sweep_csv = (dir.path / "sweep.csv").string();
    REQUIRE(run_cli("sweep --config " + cfg + tiny_overrides() + small_model +
                    " --set max_steps=1 --set pair_batch_size=1 --corpus " + corpus +
                    " --quantizer " + quantizer +
                    " --variants mha-early,lstm-early --layers 1..3 --seed 5 --threads 2 --out " +
                    sweep_csv)
                .exit_code == 0);
    CHECK(count_lines(sweep_csv) == 7);  // column header + 6 cells

    const std::string plots = (dir.path / "plots").string();
    REQUIRE(run_cli("export-plot-data --config " + cfg + tiny_overrides() + small_model +
                    " --corpus " + corpus + " --quantizer " + quantizer + " --checkpoint " +
                    run_dir + "/final.psrd --count 2 --threads 2 --out " + plots)
                .exit_code == 0);
    CHECK(fs::exists(fs::path(plots) / "series_000.csv"));
    CHECK(fs::exists(fs::path(plots) / "scores_000.csv"));
    CHECK(fs::exists(fs::path(plots) / "series_001.csv"));

    // Evaluating against a drifted generator config is a data error (exit 2).
    const CliResult drift = run_cli("evaluate --config " + cfg + tiny_overrides() + small_model +
                                    " --set white_sigma_zenith_m=0.9 --corpus " + corpus +
                                    " --quantizer " + quantizer + " --checkpoint " + run_dir +
                                    "/final.psrd --threads 2 --out " + metrics);
    CHECK(drift.exit_code == 2);
}

TEST_CASE("a constant-zero detector scores md=100%, fa=0% via the cli") {
    test::TempDir dir("cli_const0");
    const std::string cfg = default_config_path();
    const std::string small_model =
        " --set quantizer_levels=16 --set model_d_model=16 --set model_ffn_hidden=32"
        " --set model_heads=2 --set model_blocks=1";
    const std::string corpus = (dir.path / "corpus").string();
    REQUIRE(run_cli("generate --config " + cfg + tiny_overrides() +
                    " --train 4 --test 6 --seed 9 --threads 2 --out " + corpus)
                .exit_code == 0);
    const std::string quantizer = (dir.path / "q.qntz").string();
    REQUIRE(run_cli("pretrain-quantizer --config " + cfg + tiny_overrides() + small_model +
                    " --corpus " + corpus + " --seed 9 --threads 2 --out " + quantizer)
                .exit_code == 0);

    // Build a checkpoint whose output head is pinned to huge negative-class
    // logits: score == 0 for every epoch.
    SimConfig sim = SimConfig::from_file(cfg);
    sim.apply_override("duration_s", "160");
    sim.apply_override("attack_duration_max_s", "160");
    sim.apply_override("attack_shift_max_m", "420");
    sim.apply_override("quantizer_levels", "16");
    sim.apply_override("model_d_model", "16");
    sim.apply_override("model_ffn_hidden", "32");
    sim.apply_override("model_heads", "2");
    sim.apply_override("model_blocks", "1");
    DetectorModel model = DetectorModel::create(sim.model_config(), 1);
    model.config_hash = sim.generator_hash();
    const int w = model.params.find("head.W");
    const int b = model.params.find("head.b");
    REQUIRE(w >= 0);
    model.params.value(w).setZero();
    model.params.value(b).setZero();
    model.params.value(b)(0, 0) = -50.0;
    model.params.value(b)(0, 1) = 50.0;
    const std::string ckpt = (dir.path / "const0.psrd").string();
    model.save(ckpt);

    const std::string metrics = (dir.path / "metrics.csv").string();
    const CliResult eval = run_cli("evaluate --config " + cfg + tiny_overrides() + small_model +
                                   " --corpus " + corpus + " --quantizer " + quantizer +
                                   " --checkpoint " + ckpt + " --threads 2 --out " + metrics);
    CHECK(eval.exit_code == 0);
    std::ifstream in(metrics);
    std::string line;
    bool saw_total = false;
    while (std::getline(in, line)) {
        if (line.rfind("total,", 0) != 0) continue;
        saw_total = true;
        // subset,err,fa,md,...
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');  // subset
        std::getline(ss, field, ',');  // err
        std::getline(ss, field, ',');  // fa
        CHECK(std::stod(field) == 0.0);
        std::getline(ss, field, ',');  // md
        CHECK(std::stod(field) == 1.0);
    }
    CHECK(saw_total);
}
