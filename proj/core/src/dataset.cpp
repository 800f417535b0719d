#include "psrdet/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "psrdet/bytes.hpp"
#include "psrdet/parallel.hpp"

namespace psrdet {

namespace fs = std::filesystem;

std::size_t pair_file_bytes(int epochs, int satellites) {
    const std::size_t kl = static_cast<std::size_t>(epochs) * satellites;
    return kPairHeaderBytes + 16 * kl + 2 * ((kl + 7) / 8) + (static_cast<std::size_t>(epochs) + 7) / 8;
}

namespace {

constexpr char kPairMagic[4] = {'P', 'S', 'R', 'S'};
constexpr std::uint32_t kPairVersion = 1;

std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& flags) {
    std::vector<std::uint8_t> out((flags.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < flags.size(); ++i)
        if (flags[i]) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return out;
}

std::vector<std::uint8_t> unpack_bits(const std::vector<std::uint8_t>& bytes, std::size_t count) {
    std::vector<std::uint8_t> out(count, 0);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = (bytes[i / 8] >> (i % 8)) & 1u;
    return out;
}

void write_psr_row_major(ByteWriter& w, const Eigen::MatrixXd& m) {
    for (Eigen::Index k = 0; k < m.rows(); ++k)
        for (Eigen::Index l = 0; l < m.cols(); ++l) w.f64(m(k, l));
}

void read_psr_row_major(ByteReader& r, Eigen::MatrixXd& m) {
    for (Eigen::Index k = 0; k < m.rows(); ++k)
        for (Eigen::Index l = 0; l < m.cols(); ++l) m(k, l) = r.f64();
}

}  // namespace

void write_pair(const ScenarioPair& pair, const fs::path& path) {
    const PsrSequence& c = pair.clean;
    const PsrSequence& s = pair.spoofed;
    if (c.epochs != s.epochs || c.satellites != s.satellites)
        throw DataError("pair members disagree on shape");
    ByteWriter w(path.string());
    w.magic(kPairMagic);
    w.u32(kPairVersion);
    w.u32(static_cast<std::uint32_t>(c.epochs));
    w.u32(static_cast<std::uint32_t>(c.satellites));
    w.f64(c.epoch_interval_s);
    w.u64(c.seed);
    const AttackSpec& a = pair.attack;
    w.u8(a.kind == AttackKind::Targeted ? 0 : 1);
    w.u32(static_cast<std::uint32_t>(a.start_epoch));
    w.f64(a.duration_s);
    w.f64(a.shift_m);
    w.f64(a.rotation_deg);
    w.f64(a.bearing_rad);
    w.f64(a.spoofer_position.x());
    w.f64(a.spoofer_position.y());
    w.f64(a.spoofer_position.z());
    write_psr_row_major(w, c.psr_m);
    write_psr_row_major(w, s.psr_m);
    w.bytes(pack_bits(c.present));
    w.bytes(pack_bits(s.present));
    w.bytes(pack_bits(s.labels));
    w.close();
}

ScenarioPair read_pair(const fs::path& path) {
    ByteReader r(path.string());
    r.expect_magic(kPairMagic);
    if (r.u32() != kPairVersion) throw DataError("unsupported pair version in " + path.string());
    const int K = static_cast<int>(r.u32());
    const int L = static_cast<int>(r.u32());
    if (K < 3 || L < 1 || K > 1000000 || L > 10000)
        throw DataError("implausible dimensions in " + path.string());
    const double epoch_interval_s = r.f64();
    const std::uint64_t seed = r.u64();
    AttackSpec a;
    a.kind = r.u8() == 0 ? AttackKind::Targeted : AttackKind::Regional;
    a.start_epoch = static_cast<int>(r.u32());
    a.duration_s = r.f64();
    a.shift_m = r.f64();
    a.rotation_deg = r.f64();
    a.bearing_rad = r.f64();
    a.spoofer_position.x() = r.f64();
    a.spoofer_position.y() = r.f64();
    a.spoofer_position.z() = r.f64();

    ScenarioPair pair;
    pair.attack = a;
    const std::size_t kl = static_cast<std::size_t>(K) * L;
    for (PsrSequence* seq : {&pair.clean, &pair.spoofed}) {
        seq->epochs = K;
        seq->satellites = L;
        seq->epoch_interval_s = epoch_interval_s;
        seq->seed = seed;
        seq->psr_m.setZero(K, L);
    }
    read_psr_row_major(r, pair.clean.psr_m);
    read_psr_row_major(r, pair.spoofed.psr_m);
    pair.clean.present = unpack_bits(r.bytes((kl + 7) / 8), kl);
    pair.spoofed.present = unpack_bits(r.bytes((kl + 7) / 8), kl);
    pair.clean.labels.assign(K, 0);
    pair.spoofed.labels = unpack_bits(r.bytes((static_cast<std::size_t>(K) + 7) / 8), K);
    pair.spoofed.attack = a;
    if (!r.at_eof()) throw DataError("trailing bytes in " + path.string());
    return pair;
}

void write_manifest(const CorpusManifest& m, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    out << "# psrdet corpus manifest\n";
    out << "format_version = " << m.format_version << '\n';
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(m.config_hash));
    out << "config_hash = " << hex << '\n';
    out << "master_seed = " << m.master_seed << '\n';
    out << "train_count = " << m.train_count << '\n';
    out << "test_count = " << m.test_count << '\n';
    out << "test_spoofed_epochs = " << m.test_spoofed_epochs << '\n';
    out << "test_total_epochs = " << m.test_total_epochs << '\n';
    char frac[32];
    std::snprintf(frac, sizeof frac, "%.6f", m.test_spoofed_fraction());
    out << "test_spoofed_fraction = " << frac << '\n';
    out << "columns: split index kind use seed start_epoch duration_s shift_m rotation_deg file\n";
    for (const auto& e : m.entries) {
        char row[512];
        std::snprintf(row, sizeof row, "%s %d %s %s %llu %d %.3f %.6f %.6f %s\n", e.split.c_str(),
                      e.index, to_string(e.kind), e.use.c_str(),
                      static_cast<unsigned long long>(e.seed), e.start_epoch, e.duration_s, e.shift_m,
                      e.rotation_deg, e.file.c_str());
        out << row;
    }
    if (!out) throw DataError("manifest write failed: " + path.string());
}

CorpusManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read manifest: " + path.string());
    CorpusManifest m;
    std::string line;
    bool in_entries = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("columns:", 0) == 0) {
            in_entries = true;
            continue;
        }
        if (!in_entries) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw DataError("malformed manifest header: " + line);
            std::string key = line.substr(0, eq);
            std::string value = line.substr(eq + 1);
            const auto strip = [](std::string& s) {
                while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
                while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
            };
            strip(key);
            strip(value);
            if (key == "format_version") m.format_version = std::stoi(value);
            else if (key == "config_hash") m.config_hash = std::stoull(value, nullptr, 16);
            else if (key == "master_seed") m.master_seed = std::stoull(value);
            else if (key == "train_count") m.train_count = std::stoi(value);
            else if (key == "test_count") m.test_count = std::stoi(value);
            else if (key == "test_spoofed_epochs") m.test_spoofed_epochs = std::stoll(value);
            else if (key == "test_total_epochs") m.test_total_epochs = std::stoll(value);
            else if (key == "test_spoofed_fraction") { /* derived, ignored on read */ }
            else throw DataError("unknown manifest key: " + key);
            continue;
        }
        std::istringstream row(line);
        ManifestEntry e;
        std::string kind;
        if (!(row >> e.split >> e.index >> kind >> e.use >> e.seed >> e.start_epoch >> e.duration_s >>
              e.shift_m >> e.rotation_deg >> e.file))
            throw DataError("malformed manifest row: " + line);
        e.kind = attack_kind_from_string(kind);
        m.entries.push_back(std::move(e));
    }
    return m;
}

ScenarioPair generate_scenario_pair(const SimConfig& cfg, AttackKind kind, std::uint64_t seed) {
    const auto constellation_cfg = cfg.constellation();
    const auto elements = build_constellation(constellation_cfg);
    const auto signal = cfg.signal_params();
    const auto ranges = cfg.attack_ranges();
    const auto estimation = cfg.estimation_params();

    std::uint64_t attempt_seed = seed;
    for (int attempt = 0; attempt < 64; ++attempt) {
        try {
            const Trajectory traj = sample_landing_trajectory(cfg.trajectory_params(), attempt_seed,
                                                              cfg.duration_s, cfg.epoch_interval_s);
            const NominalRealization nominal =
                generate_nominal_full(traj, elements, constellation_cfg, signal, attempt_seed);
            const AttackSpec spec = sample_attack_spec(kind, ranges, traj, attempt_seed);
            return apply_attack(nominal, traj, spec, estimation);
        } catch (const DegenerateScenario&) {
            attempt_seed = splitmix64(attempt_seed ^ 0x7265747279ULL);
        }
    }
    throw DataError("could not draw a usable scenario after 64 attempts");
}

CorpusManifest generate_corpus(const SimConfig& cfg, const CorpusOptions& opts,
                               const fs::path& out_dir) {
    if (opts.train_count < 1 || opts.test_count < 1)
        throw UsageError("corpus generation needs train and test counts >= 1");
    fs::create_directories(out_dir / "train");
    fs::create_directories(out_dir / "test");

    CorpusManifest manifest;
    manifest.config_hash = cfg.generator_hash();
    manifest.master_seed = opts.master_seed;
    manifest.train_count = opts.train_count;
    manifest.test_count = opts.test_count;
    manifest.entries.resize(static_cast<std::size_t>(opts.train_count) + opts.test_count);

    std::vector<long long> spoofed_epochs(opts.test_count, 0);
    std::vector<long long> total_epochs(opts.test_count, 0);

    const int total = opts.train_count + opts.test_count;
    parallel_for(
        static_cast<std::size_t>(total),
        [&](std::size_t idx) {
            const bool is_train = static_cast<int>(idx) < opts.train_count;
            const int i = is_train ? static_cast<int>(idx) : static_cast<int>(idx) - opts.train_count;
            const std::uint64_t seed = derive_seed(opts.master_seed, stream::kScenario, idx);
            AttackKind kind;
            std::string use = "pair";
            if (is_train) {
                kind = i % 2 == 0 ? AttackKind::Targeted : AttackKind::Regional;
            } else {
                // Every third test sequence is the spoofed member; kinds
                // alternate within the spoofed ones, then within the clean.
                const bool spoofed_use = i % 3 == 0;
                use = spoofed_use ? "spoofed" : "clean";
                const int rank = spoofed_use ? i / 3 : i - i / 3 - 1;
                kind = rank % 2 == 0 ? AttackKind::Targeted : AttackKind::Regional;
            }
            const ScenarioPair pair = generate_scenario_pair(cfg, kind, seed);
            char name[64];
            std::snprintf(name, sizeof name, "pair_%06d.psrs", i);
            const std::string rel = std::string(is_train ? "train/" : "test/") + name;
            write_pair(pair, out_dir / rel);

            ManifestEntry e;
            e.split = is_train ? "train" : "test";
            e.index = i;
            e.kind = pair.attack.kind;
            e.use = use;
            e.seed = pair.clean.seed;
            e.start_epoch = pair.attack.start_epoch;
            e.duration_s = pair.attack.duration_s;
            e.shift_m = pair.attack.shift_m;
            e.rotation_deg = pair.attack.rotation_deg;
            e.file = rel;
            manifest.entries[idx] = std::move(e);
            if (!is_train) {
                total_epochs[i] = pair.spoofed.epochs;
                if (use == "spoofed") {
                    long long n = 0;
                    for (const auto v : pair.spoofed.labels) n += v ? 1 : 0;
                    spoofed_epochs[i] = n;
                }
            }
        },
        opts.threads);

    for (int i = 0; i < opts.test_count; ++i) {
        manifest.test_spoofed_epochs += spoofed_epochs[i];
        manifest.test_total_epochs += total_epochs[i];
    }
    write_manifest(manifest, out_dir / "manifest.txt");
    return manifest;
}

std::vector<ScenarioPair> load_train_pairs(const CorpusManifest& manifest, const fs::path& corpus_dir,
                                           int threads) {
    std::vector<const ManifestEntry*> train;
    for (const auto& e : manifest.entries)
        if (e.split == "train") train.push_back(&e);
    std::vector<ScenarioPair> pairs(train.size());
    parallel_for(
        train.size(), [&](std::size_t i) { pairs[i] = read_pair(corpus_dir / train[i]->file); },
        threads);
    return pairs;
}

TestSet load_test_set(const CorpusManifest& manifest, const fs::path& corpus_dir, int threads) {
    std::vector<const ManifestEntry*> test;
    for (const auto& e : manifest.entries)
        if (e.split == "test") test.push_back(&e);
    TestSet out(test.size());
    parallel_for(
        test.size(),
        [&](std::size_t i) {
            ScenarioPair pair = read_pair(corpus_dir / test[i]->file);
            if (test[i]->use == "spoofed") {
                out[i] = std::move(pair.spoofed);
            } else if (test[i]->use == "clean") {
                out[i] = std::move(pair.clean);
            } else {
                throw DataError("test entry with unexpected use: " + test[i]->use);
            }
        },
        threads);
    return out;
}

}  // namespace psrdet
