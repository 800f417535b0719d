#pragma once

#include <filesystem>

#include "psrdet/config.hpp"

namespace psrdet {

// Scenario-pair record, magic "PSRS". Fixed 93-byte header (magic, version,
// K, L, epoch interval, seed, attack spec), then clean and spoofed PSR as
// row-major float64, two presence bitmaps and the label bitmap, all
// little-endian with no padding:
//   size = 93 + 16*K*L + 2*ceil(K*L/8) + ceil(K/8) bytes.
constexpr std::size_t kPairHeaderBytes = 93;
std::size_t pair_file_bytes(int epochs, int satellites);

void write_pair(const ScenarioPair& pair, const std::filesystem::path& path);
ScenarioPair read_pair(const std::filesystem::path& path);

struct ManifestEntry {
    std::string split;   // "train" | "test"
    int index = 0;
    AttackKind kind = AttackKind::Targeted;
    std::string use;     // "pair" for training, "clean"/"spoofed" for test entries
    std::uint64_t seed = 0;
    int start_epoch = 0;
    double duration_s = 0.0;
    double shift_m = 0.0;
    double rotation_deg = 0.0;
    std::string file;    // relative to the corpus directory
};

struct CorpusManifest {
    int format_version = 1;
    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;
    int train_count = 0;
    int test_count = 0;
    long long test_spoofed_epochs = 0;
    long long test_total_epochs = 0;
    std::vector<ManifestEntry> entries;

    double test_spoofed_fraction() const {
        return test_total_epochs == 0 ? 0.0
                                      : static_cast<double>(test_spoofed_epochs) / test_total_epochs;
    }
};

void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest read_manifest(const std::filesystem::path& path);

struct CorpusOptions {
    int train_count = 0;
    int test_count = 0;
    std::uint64_t master_seed = 1;
    int threads = 0;
};

// Generates train pairs (alternating attack kinds) and test sequences (every
// third one uses the spoofed member, the rest the clean member, which lands
// the spoofed-epoch fraction near the low twenties of a percent). Scenario
// seeds derive from the master seed; degenerate scenarios are resampled
// deterministically. Files land under out_dir/train and out_dir/test with the
// manifest written last.
CorpusManifest generate_corpus(const SimConfig& cfg, const CorpusOptions& opts,
                               const std::filesystem::path& out_dir);

// One scenario end to end: trajectory, nominal realization, sampled attack,
// applied attack. Retries internally on degenerate geometry.
ScenarioPair generate_scenario_pair(const SimConfig& cfg, AttackKind kind, std::uint64_t seed);

std::vector<ScenarioPair> load_train_pairs(const CorpusManifest& manifest,
                                           const std::filesystem::path& corpus_dir, int threads = 0);
TestSet load_test_set(const CorpusManifest& manifest, const std::filesystem::path& corpus_dir,
                      int threads = 0);

}  // namespace psrdet
