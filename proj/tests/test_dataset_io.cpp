#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "psrdet/bytes.hpp"
#include "psrdet/dataset.hpp"
#include "test_support.hpp"

using namespace psrdet;
namespace fs = std::filesystem;

namespace {

bool pairs_identical(const ScenarioPair& a, const ScenarioPair& b) {
    return a.clean.psr_m == b.clean.psr_m && a.spoofed.psr_m == b.spoofed.psr_m &&
           a.clean.present == b.clean.present && a.spoofed.present == b.spoofed.present &&
           a.spoofed.labels == b.spoofed.labels && a.clean.seed == b.clean.seed &&
           a.attack.start_epoch == b.attack.start_epoch && a.attack.kind == b.attack.kind &&
           a.attack.duration_s == b.attack.duration_s && a.attack.shift_m == b.attack.shift_m &&
           a.attack.rotation_deg == b.attack.rotation_deg &&
           a.attack.bearing_rad == b.attack.bearing_rad &&
           a.attack.spoofer_position == b.attack.spoofer_position;
}

}  // namespace

TEST_CASE("pair files round-trip bit-exactly across random scenarios") {
    const SimConfig cfg = test::tiny_config();
    test::TempDir dir("roundtrip");
    for (int i = 0; i < 20; ++i) {
        const AttackKind kind = i % 2 == 0 ? AttackKind::Targeted : AttackKind::Regional;
        const ScenarioPair pair = generate_scenario_pair(cfg, kind, derive_seed(1, 1, i));
        const fs::path path = dir.path / ("p" + std::to_string(i) + ".psrs");
        write_pair(pair, path);
        const ScenarioPair back = read_pair(path);
        CHECK(pairs_identical(pair, back));
    }
}

TEST_CASE("file size follows the documented formula") {
    const SimConfig cfg = test::tiny_config();
    test::TempDir dir("size");
    const ScenarioPair pair = generate_scenario_pair(cfg, AttackKind::Regional, 5);
    const fs::path path = dir.path / "p.psrs";
    write_pair(pair, path);
    CHECK(fs::file_size(path) == pair_file_bytes(pair.clean.epochs, pair.clean.satellites));
}

TEST_CASE("truncated and mangled files are rejected with data errors") {
    const SimConfig cfg = test::tiny_config();
    test::TempDir dir("corrupt");
    const ScenarioPair pair = generate_scenario_pair(cfg, AttackKind::Targeted, 9);
    const fs::path path = dir.path / "p.psrs";
    write_pair(pair, path);

    SUBCASE("truncation") {
        fs::resize_file(path, fs::file_size(path) / 2);
        CHECK_THROWS_AS(read_pair(path), DataError);
    }
    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("NOPE", 4);
        f.close();
        CHECK_THROWS_AS(read_pair(path), DataError);
    }
    SUBCASE("trailing junk") {
        std::ofstream f(path, std::ios::app | std::ios::binary);
        f.write("x", 1);
        f.close();
        CHECK_THROWS_AS(read_pair(path), DataError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(read_pair(dir.path / "absent.psrs"), DataError); }
}

TEST_CASE("corpus balance: 10 training pairs split 5 targeted / 5 regional") {
    const SimConfig cfg = test::tiny_config();
    test::TempDir dir("balance");
    CorpusOptions opts;
    opts.train_count = 10;
    opts.test_count = 3;
    opts.master_seed = 7;
    opts.threads = 2;
    const CorpusManifest manifest = generate_corpus(cfg, opts, dir.path);
    int targeted = 0, regional = 0;
    for (const auto& e : manifest.entries) {
        if (e.split != "train") continue;
        (e.kind == AttackKind::Targeted ? targeted : regional)++;
    }
    CHECK(targeted == 5);
    CHECK(regional == 5);
    CHECK(manifest.entries.size() == 13);

    // Seeds are unique across the corpus.
    std::set<std::uint64_t> seeds;
    for (const auto& e : manifest.entries) seeds.insert(e.seed);
    CHECK(seeds.size() == manifest.entries.size());
}

TEST_CASE("same master seed reproduces manifests and files byte-for-byte") {
    const SimConfig cfg = test::tiny_config();
    test::TempDir a("cor_a"), b("cor_b");
    CorpusOptions opts;
    opts.train_count = 4;
    opts.test_count = 3;
    opts.master_seed = 99;
    opts.threads = 2;
    generate_corpus(cfg, opts, a.path);
    generate_corpus(cfg, opts, b.path);
    CHECK(hash_file((a.path / "manifest.txt").string()) ==
          hash_file((b.path / "manifest.txt").string()));
    for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), a.path);
        CHECK(hash_file(entry.path().string()) == hash_file((b.path / rel).string()));
    }
}

TEST_CASE("manifest round-trips and the hash detects generator drift") {
    const SimConfig cfg = test::tiny_config();
    test::TempDir dir("manifest");
    CorpusOptions opts;
    opts.train_count = 2;
    opts.test_count = 3;
    opts.master_seed = 3;
    opts.threads = 2;
    const CorpusManifest manifest = generate_corpus(cfg, opts, dir.path);
    const CorpusManifest back = read_manifest(dir.path / "manifest.txt");
    CHECK(back.config_hash == manifest.config_hash);
    CHECK(back.train_count == manifest.train_count);
    CHECK(back.test_count == manifest.test_count);
    CHECK(back.test_spoofed_epochs == manifest.test_spoofed_epochs);
    CHECK(back.entries.size() == manifest.entries.size());
    for (std::size_t i = 0; i < back.entries.size(); ++i) {
        CHECK(back.entries[i].file == manifest.entries[i].file);
        CHECK(back.entries[i].seed == manifest.entries[i].seed);
    }

    // Any generator-relevant key changes the hash; training knobs do not.
    SimConfig drifted = cfg;
    drifted.white_sigma_zenith_m += 0.1;
    CHECK(drifted.generator_hash() != cfg.generator_hash());
    SimConfig retuned = cfg;
    retuned.learning_rate *= 2.0;
    CHECK(retuned.generator_hash() == cfg.generator_hash());
    SimConfig moved = cfg;
    moved.attack_shift_min_m += 1.0;
    CHECK(moved.generator_hash() != cfg.generator_hash());
}

TEST_CASE("test split loads the designated member with intact labels") {
    const SimConfig cfg = test::tiny_config();
    test::TempDir dir("split");
    CorpusOptions opts;
    opts.train_count = 2;
    opts.test_count = 6;
    opts.master_seed = 11;
    opts.threads = 2;
    const CorpusManifest manifest = generate_corpus(cfg, opts, dir.path);
    const TestSet test = load_test_set(manifest, dir.path, 2);
    REQUIRE(test.size() == 6);
    long long spoofed_epochs = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        long long labels = 0;
        for (int k = 0; k < test[i].epochs; ++k) labels += test[i].label(k) ? 1 : 0;
        if (i % 3 == 0) {
            CHECK(test[i].attack.has_value());
            CHECK(labels > 0);
        } else {
            CHECK(!test[i].attack.has_value());
            CHECK(labels == 0);
        }
        spoofed_epochs += labels;
    }
    CHECK(spoofed_epochs == manifest.test_spoofed_epochs);

    const auto pairs = load_train_pairs(manifest, dir.path, 2);
    CHECK(pairs.size() == 2);
}

TEST_CASE("default-scale test generation lands the spoofed fraction in [0.18, 0.26]") {
    const SimConfig cfg = test::default_config();
    test::TempDir dir("fraction");
    CorpusOptions opts;
    opts.train_count = 1;
    opts.test_count = 60;
    opts.master_seed = 2024;
    opts.threads = 2;
    const CorpusManifest manifest = generate_corpus(cfg, opts, dir.path);
    CHECK(manifest.test_spoofed_fraction() >= 0.18);
    CHECK(manifest.test_spoofed_fraction() <= 0.26);
}
