// psrdet: generate PSR spoofing corpora, pretrain the feature quantizer,
// train/evaluate detectors, sweep encoder depths, and export plot data.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "psrdet/bytes.hpp"
#include "psrdet/config.hpp"
#include "psrdet/dataset.hpp"
#include "psrdet/parallel.hpp"

namespace fs = std::filesystem;
using namespace psrdet;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out;
    std::uint64_t seed = 1;
    int threads = 0;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required = true) {
    cmd->add_option("--config", args.config_path, "key = value config file")->required();
    auto* out = cmd->add_option("--out", args.out, "output file or directory");
    if (out_required) out->required();
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_option("--threads", args.threads, "worker cap (0 = all cores)");
    cmd->add_option("--set", args.overrides, "config override key=value (repeatable)");
}

SimConfig load_config(const CommonArgs& args) {
    SimConfig cfg = SimConfig::from_file(args.config_path);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got: " + kv);
        auto trim = [](std::string s) {
            while (!s.empty() && s.front() == ' ') s.erase(s.begin());
            while (!s.empty() && s.back() == ' ') s.pop_back();
            return s;
        };
        cfg.apply_override(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

void check_hash(std::uint64_t artifact, std::uint64_t config, const std::string& what) {
    if (artifact != 0 && config != 0 && artifact != config)
        throw DataError(what + " was produced with a different generator config (hash mismatch)");
}

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_metrics_csv(const MetricsReport& r, std::uint64_t config_hash, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write metrics: " + path);
    out << "# config_hash = " << hash_hex(config_hash) << "\n";
    out << "# threshold = " << r.threshold << "\n";
    out << "subset,err,fa,md,positives,negatives\n";
    char row[256];
    const auto emit = [&](const char* name, const SubsetCounts& c) {
        std::snprintf(row, sizeof row, "%s,%.8f,%.8f,%.8f,%lld,%lld\n", name, c.err(), c.fa(), c.md(),
                      c.positives(), c.negatives());
        out << row;
    };
    if (r.targeted) emit("targeted", *r.targeted);
    if (r.regional) emit("regional", *r.regional);
    emit("total", r.total);
}

void print_metrics(const MetricsReport& r) {
    const auto line = [](const char* name, const SubsetCounts& c) {
        std::printf("  %-9s err = %6.3f %%   fa = %6.3f %%   md = %6.3f %%   (pos %lld, neg %lld)\n",
                    name, 100.0 * c.err(), 100.0 * c.fa(), 100.0 * c.md(), c.positives(),
                    c.negatives());
    };
    std::printf("metrics at threshold %.3f\n", r.threshold);
    if (r.targeted) line("targeted", *r.targeted);
    if (r.regional) line("regional", *r.regional);
    line("total", r.total);
}

std::vector<int> parse_layers(const std::string& text) {
    std::vector<int> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const int lo = std::stoi(text.substr(0, dots));
        const int hi = std::stoi(text.substr(dots + 2));
        if (lo < 1 || hi < lo) throw UsageError("bad layer range: " + text);
        for (int n = lo; n <= hi; ++n) out.push_back(n);
        return out;
    }
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(std::stoi(text.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    if (out.empty()) throw UsageError("no layer counts given");
    return out;
}

std::vector<std::string> parse_variants(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(text.substr(pos, comma - pos));
        pos = comma + 1;
    }
    if (out.empty()) throw UsageError("no variants given");
    return out;
}

// Pools compressed second differences from both members of the train pairs.
std::vector<double> quantizer_corpus(const CorpusManifest& manifest, const fs::path& corpus_dir,
                                     int max_pairs, std::size_t cap, int threads) {
    std::vector<const ManifestEntry*> train;
    for (const auto& e : manifest.entries)
        if (e.split == "train") train.push_back(&e);
    if (train.empty()) throw DataError("corpus has no training pairs");
    const std::size_t use = std::min<std::size_t>(train.size(), static_cast<std::size_t>(max_pairs));
    std::vector<std::vector<double>> per_pair(use);
    parallel_for(
        use,
        [&](std::size_t i) {
            const ScenarioPair pair = read_pair(corpus_dir / train[i]->file);
            auto& sink = per_pair[i];
            for (const PsrSequence* seq : {&pair.clean, &pair.spoofed}) {
                std::vector<double> series(seq->epochs);
                std::vector<std::uint8_t> present(seq->epochs);
                for (int l = 0; l < seq->satellites; ++l) {
                    for (int k = 0; k < seq->epochs; ++k) {
                        series[k] = seq->psr_m(k, l);
                        present[k] = seq->is_present(k, l) ? 1 : 0;
                    }
                    const SecondDifference d2 = second_difference(series, present);
                    for (int k = 0; k < seq->epochs; ++k)
                        if (d2.defined[k]) sink.push_back(compress(d2.value[k]));
                }
            }
        },
        threads);
    std::vector<double> samples;
    for (const auto& chunk : per_pair) samples.insert(samples.end(), chunk.begin(), chunk.end());
    if (samples.size() > cap) {
        const std::size_t stride = samples.size() / cap + 1;
        std::vector<double> thin;
        thin.reserve(samples.size() / stride + 1);
        for (std::size_t i = 0; i < samples.size(); i += stride) thin.push_back(samples[i]);
        samples.swap(thin);
    }
    return samples;
}

int run_generate(const CommonArgs& args, int train_count, int test_count) {
    const SimConfig cfg = load_config(args);
    CorpusOptions opts;
    opts.train_count = train_count;
    opts.test_count = test_count;
    opts.master_seed = args.seed;
    opts.threads = args.threads;
    const CorpusManifest manifest = generate_corpus(cfg, opts, args.out);
    std::printf("wrote %d train pairs and %d test sequences to %s\n", manifest.train_count,
                manifest.test_count, args.out.c_str());
    std::printf("test spoofed-epoch fraction: %.4f\n", manifest.test_spoofed_fraction());
    return 0;
}

int run_pretrain_quantizer(const CommonArgs& args, const std::string& corpus_dir) {
    const SimConfig cfg = load_config(args);
    const CorpusManifest manifest = read_manifest(fs::path(corpus_dir) / "manifest.txt");
    check_hash(manifest.config_hash, cfg.generator_hash(), "corpus");
    const std::vector<double> samples =
        quantizer_corpus(manifest, corpus_dir, 64, 2000000, args.threads);
    PretrainedQuantizer q = pretrain_quantizer(samples, cfg.quantizer_levels, args.seed);
    q.config_hash = cfg.generator_hash();
    save_quantizer(q, args.out);
    std::printf("quantizer with %d levels trained on %zu samples, rmse %.5f -> %s\n",
                cfg.quantizer_levels, samples.size(), q.train_rmse, args.out.c_str());
    return 0;
}

int run_train(const CommonArgs& args, const std::string& corpus_dir, const std::string& quantizer_path) {
    const SimConfig cfg = load_config(args);
    const CorpusManifest manifest = read_manifest(fs::path(corpus_dir) / "manifest.txt");
    check_hash(manifest.config_hash, cfg.generator_hash(), "corpus");

    const PretrainedQuantizer quantizer =
        cfg.feature_mode == "raw" ? PretrainedQuantizer{} : load_quantizer(quantizer_path);
    if (cfg.feature_mode != "raw") {
        check_hash(quantizer.config_hash, cfg.generator_hash(), "quantizer");
        if (quantizer.params.n() != cfg.quantizer_levels)
            throw DataError("quantizer level count does not match config quantizer_levels");
    }

    const std::vector<ScenarioPair> pairs = load_train_pairs(manifest, corpus_dir, args.threads);
    DetectorModel model = DetectorModel::create(cfg.model_config(), args.seed);
    model.config_hash = cfg.generator_hash();

    fs::create_directories(args.out);
    const TrainConfig tcfg = cfg.train_config(args.seed, args.threads);
    const TrainResult result = train(model, pairs, cfg.feature_mode == "raw" ? nullptr : &quantizer.params,
                                     tcfg, args.out);
    model.save((fs::path(args.out) / "final.psrd").string());

    std::ofstream curve(fs::path(args.out) / "loss_curve.csv");
    curve << "# config_hash = " << hash_hex(cfg.generator_hash()) << "\n";
    curve << "step,loss\n";
    for (const auto& [step, loss] : result.loss_curve) curve << step << ',' << loss << '\n';
    std::printf("trained %s for %d steps; final loss %.5f -> %s/final.psrd\n",
                cfg.model_variant.c_str(), tcfg.max_steps,
                result.loss_curve.empty() ? 0.0 : result.loss_curve.back().second, args.out.c_str());
    return 0;
}

int run_evaluate(const CommonArgs& args, const std::string& corpus_dir,
                 const std::string& quantizer_path, const std::string& checkpoint, double threshold) {
    const SimConfig cfg = load_config(args);
    const CorpusManifest manifest = read_manifest(fs::path(corpus_dir) / "manifest.txt");
    check_hash(manifest.config_hash, cfg.generator_hash(), "corpus");
    DetectorModel model = DetectorModel::load(checkpoint);
    check_hash(model.config_hash, cfg.generator_hash(), "checkpoint");

    PretrainedQuantizer quantizer;
    const bool raw = model.config.feature_channels == 2;
    if (!raw) {
        quantizer = load_quantizer(quantizer_path);
        check_hash(quantizer.config_hash, cfg.generator_hash(), "quantizer");
    }
    const TestSet test = load_test_set(manifest, corpus_dir, args.threads);
    const MetricsReport report =
        evaluate(model, test, raw ? nullptr : &quantizer.params, threshold, args.threads);
    print_metrics(report);
    write_metrics_csv(report, cfg.generator_hash(), args.out);
    return 0;
}

int run_sweep(const CommonArgs& args, const std::string& corpus_dir, const std::string& quantizer_path,
              const std::string& variants_text, const std::string& layers_text) {
    const SimConfig cfg = load_config(args);
    const CorpusManifest manifest = read_manifest(fs::path(corpus_dir) / "manifest.txt");
    check_hash(manifest.config_hash, cfg.generator_hash(), "corpus");
    PretrainedQuantizer quantizer;
    const bool raw = cfg.feature_mode == "raw";
    if (!raw) {
        quantizer = load_quantizer(quantizer_path);
        check_hash(quantizer.config_hash, cfg.generator_hash(), "quantizer");
    }
    const std::vector<ScenarioPair> pairs = load_train_pairs(manifest, corpus_dir, args.threads);
    const TestSet test = load_test_set(manifest, corpus_dir, args.threads);

    const std::vector<SweepCell> cells =
        layer_sweep(pairs, test, raw ? nullptr : &quantizer.params, cfg.model_config(),
                    cfg.train_config(args.seed, args.threads), parse_variants(variants_text),
                    parse_layers(layers_text));

    std::ofstream out(args.out);
    if (!out) throw DataError("cannot write sweep table: " + args.out);
    out << "# config_hash = " << hash_hex(cfg.generator_hash()) << "\n";
    out << "variant,layers,err,fa,md\n";
    for (const auto& c : cells) {
        char row[256];
        std::snprintf(row, sizeof row, "%s,%d,%.8f,%.8f,%.8f\n", c.variant.c_str(), c.layers,
                      c.metrics.total.err(), c.metrics.total.fa(), c.metrics.total.md());
        out << row;
        std::printf("%-12s N=%d  err = %6.3f %%\n", c.variant.c_str(), c.layers,
                    100.0 * c.metrics.total.err());
    }
    return 0;
}

int run_export_plot_data(const CommonArgs& args, const std::string& corpus_dir,
                         const std::string& quantizer_path, const std::string& checkpoint, int count) {
    const SimConfig cfg = load_config(args);
    const CorpusManifest manifest = read_manifest(fs::path(corpus_dir) / "manifest.txt");
    check_hash(manifest.config_hash, cfg.generator_hash(), "corpus");
    const TestSet test = load_test_set(manifest, corpus_dir, args.threads);
    if (test.empty()) throw DataError("corpus has no test sequences");
    fs::create_directories(args.out);

    std::optional<DetectorModel> model;
    PretrainedQuantizer quantizer;
    if (!checkpoint.empty()) {
        model = DetectorModel::load(checkpoint);
        check_hash(model->config_hash, cfg.generator_hash(), "checkpoint");
        if (model->config.feature_channels != 2) {
            if (quantizer_path.empty())
                throw UsageError("--quantizer is required to score with this checkpoint");
            quantizer = load_quantizer(quantizer_path);
            check_hash(quantizer.config_hash, cfg.generator_hash(), "quantizer");
        }
    }

    const int n = std::min<int>(count, static_cast<int>(test.size()));
    for (int i = 0; i < n; ++i) {
        const PsrSequence& seq = test[i];
        char name[64];
        std::snprintf(name, sizeof name, "series_%03d.csv", i);
        std::ofstream series(fs::path(args.out) / name);
        series << "# config_hash = " << hash_hex(cfg.generator_hash()) << "\n";
        series << "epoch,satellite,present,psr_m,d1_m,d2_m,label\n";
        std::vector<double> s(seq.epochs);
        std::vector<std::uint8_t> p(seq.epochs);
        for (int l = 0; l < seq.satellites; ++l) {
            for (int k = 0; k < seq.epochs; ++k) {
                s[k] = seq.psr_m(k, l);
                p[k] = seq.is_present(k, l) ? 1 : 0;
            }
            const SecondDifference d2 = second_difference(s, p);
            for (int k = 0; k < seq.epochs; ++k) {
                const bool d1_ok = k >= 1 && p[k] && p[k - 1];
                char row[256];
                std::snprintf(row, sizeof row, "%d,%d,%d,%.6f,%.6f,%.6f,%d\n", k, l, p[k] ? 1 : 0,
                              s[k], d1_ok ? s[k] - s[k - 1] : 0.0, d2.defined[k] ? d2.value[k] : 0.0,
                              seq.label(k) ? 1 : 0);
                series << row;
            }
        }
        if (model) {
            const FeatureTensor f = build_features_for_model(
                seq, model->config, model->config.feature_channels == 2 ? nullptr : &quantizer.params);
            const DetectionOutput out = model->forward(f);
            std::snprintf(name, sizeof name, "scores_%03d.csv", i);
            std::ofstream scores(fs::path(args.out) / name);
            scores << "# config_hash = " << hash_hex(cfg.generator_hash()) << "\n";
            scores << "epoch,score,informative,label\n";
            for (int k = 0; k < seq.epochs; ++k) {
                char row[128];
                std::snprintf(row, sizeof row, "%d,%.8f,%d,%d\n", k, out.scores[k],
                              out.informative[k] ? 1 : 0, seq.label(k) ? 1 : 0);
                scores << row;
            }
        }
    }
    std::printf("exported %d sequence(s) to %s\n", n, args.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PSR spoofing simulation and sequence-detector toolkit"};
    app.require_subcommand(1);

    CommonArgs gen_args, quant_args, train_args, eval_args, sweep_args, export_args;
    int train_count = 1000, test_count = 200;
    std::string quant_corpus, train_corpus, train_quantizer, eval_corpus, eval_quantizer,
        eval_checkpoint, sweep_corpus, sweep_quantizer, sweep_variants = "mha-early",
        sweep_layers = "1..2", export_corpus, export_quantizer, export_checkpoint;
    double threshold = 0.5;
    int export_count = 4;

    auto* generate = app.add_subcommand("generate", "generate a scenario-pair corpus");
    add_common(generate, gen_args);
    generate->add_option("--train", train_count, "training pair count");
    generate->add_option("--test", test_count, "test sequence count");

    auto* pretrain = app.add_subcommand("pretrain-quantizer", "fit the feature quantizer");
    add_common(pretrain, quant_args);
    pretrain->add_option("--corpus", quant_corpus, "corpus directory")->required();

    auto* train_cmd = app.add_subcommand("train", "train a detector");
    add_common(train_cmd, train_args);
    train_cmd->add_option("--corpus", train_corpus, "corpus directory")->required();
    train_cmd->add_option("--quantizer", train_quantizer, "pretrained quantizer file");

    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
    add_common(eval_cmd, eval_args);
    eval_cmd->add_option("--corpus", eval_corpus, "corpus directory")->required();
    eval_cmd->add_option("--quantizer", eval_quantizer, "pretrained quantizer file");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
    eval_cmd->add_option("--threshold", threshold, "decision threshold");

    auto* sweep_cmd = app.add_subcommand("sweep", "train/evaluate a grid of variants and depths");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--corpus", sweep_corpus, "corpus directory")->required();
    sweep_cmd->add_option("--quantizer", sweep_quantizer, "pretrained quantizer file");
    sweep_cmd->add_option("--variants", sweep_variants, "comma list, e.g. mha-early,lstm-late");
    sweep_cmd->add_option("--layers", sweep_layers, "range a..b or comma list");

    auto* export_cmd = app.add_subcommand("export-plot-data", "emit per-epoch series and score CSVs");
    add_common(export_cmd, export_args);
    export_cmd->add_option("--corpus", export_corpus, "corpus directory")->required();
    export_cmd->add_option("--quantizer", export_quantizer, "pretrained quantizer file");
    export_cmd->add_option("--checkpoint", export_checkpoint, "model checkpoint (optional)");
    export_cmd->add_option("--count", export_count, "number of test sequences to export");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (generate->parsed()) return run_generate(gen_args, train_count, test_count);
        if (pretrain->parsed()) return run_pretrain_quantizer(quant_args, quant_corpus);
        if (train_cmd->parsed()) return run_train(train_args, train_corpus, train_quantizer);
        if (eval_cmd->parsed())
            return run_evaluate(eval_args, eval_corpus, eval_quantizer, eval_checkpoint, threshold);
        if (sweep_cmd->parsed())
            return run_sweep(sweep_args, sweep_corpus, sweep_quantizer, sweep_variants, sweep_layers);
        if (export_cmd->parsed())
            return run_export_plot_data(export_args, export_corpus, export_quantizer,
                                        export_checkpoint, export_count);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
