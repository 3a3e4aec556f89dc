// Command-line front end: generate, split, train, eval, ablate, report.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "CLI11.hpp"
#include "fusu/dataset.hpp"
#include "fusu/harness/ablation.hpp"
#include "fusu/harness/dataset_tools.hpp"
#include "fusu/harness/evaluator.hpp"
#include "fusu/harness/report.hpp"
#include "fusu/harness/run_config.hpp"
#include "fusu/harness/trainer.hpp"

namespace fs = std::filesystem;
using namespace fusu;
using namespace fusu::harness;

namespace {

struct RunFlags {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string task;
    std::string root;
    std::string split;
    std::string run_dir;
    std::optional<int> k;
    std::optional<long long> steps;
    std::optional<int> batch;
    std::optional<long long> seed;
    bool paper_scale = false;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config_file, "key=value config file");
        app->add_option("--set", overrides, "Override a config key (key=value), repeatable");
        app->add_option("--task", task, "segmentation | scd | bcd");
        app->add_option("--root", root, "Dataset root (default: $FUSU_DATA_ROOT, else ./data)");
        app->add_option("--split", split, "Split manifest name");
        app->add_option("--run-dir", run_dir, "Output directory");
        app->add_option("-k,--time-series-count", k, "Leading months fed to the series branch (0 removes it)");
        app->add_option("--steps", steps, "Training steps");
        app->add_option("--batch", batch, "Batch size");
        app->add_option("--seed", seed, "Seed for initialization and batch order");
        app->add_flag("--paper-scale", paper_scale, "Batch 8 and 80k iterations / 200 epochs");
    }

    RunConfig build() const {
        KeyValueText kv = config_file.empty() ? KeyValueText{} : KeyValueText::load(config_file);
        if (!task.empty()) kv.set("task", task);
        if (paper_scale) kv.set("paper_scale", true);
        if (!root.empty()) kv.set("data_root", root);
        if (!split.empty()) kv.set("split", split);
        if (!run_dir.empty()) kv.set("run_dir", run_dir);
        if (k) kv.set("time_series_count", *k);
        if (steps) kv.set("max_steps", *steps);
        if (batch) kv.set("batch_size", *batch);
        if (seed) kv.set("seed", *seed);
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("--set expects key=value, got '" + o + "'");
            }
            kv.set(o.substr(0, eq), o.substr(eq + 1));
        }
        auto config = RunConfig::read(kv);
        if (steps) config.max_epochs = 0;
        config.data_root = resolve_data_root(config.data_root).string();
        return config;
    }
};

void print_report(const EvalReport& r) {
    std::cout << report_summary(r);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fusu: bi-temporal land-use segmentation and change detection with time-series fusion"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "Intra-op CPU threads (1 keeps runs bit-reproducible)");

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset");
    std::string gen_root;
    int gen_count = 256;
    long long gen_seed = 0;
    bool gen_full = false;
    GeneratorConfig gcfg;
    gen->add_option("--root", gen_root, "Dataset root (default: $FUSU_DATA_ROOT, else ./data)");
    gen->add_option("-n,--count", gen_count, "Number of patches");
    gen->add_option("--seed", gen_seed, "Dataset seed");
    gen->add_flag("--full-geometry", gen_full, "512 px / 128 px patches instead of 128 / 32");
    gen->add_option("--change-fraction", gcfg.change_fraction, "Fraction of changed high-res pixels");
    gen->add_option("--snr", gcfg.signal_to_noise, "Class-signal to noise ratio");
    gen->add_option("--polygons", gcfg.polygons_per_patch, "Mean polygons per high-res footprint");

    // split
    auto* spl = app.add_subcommand("split", "Write a split manifest");
    std::string spl_root, spl_name = "default", spl_region;
    SplitRatios ratios;
    bool spl_changed = false;
    long long spl_seed = 0;
    spl->add_option("--root", spl_root, "Dataset root");
    spl->add_option("--name", spl_name, "Manifest name");
    spl->add_option("--train", ratios.train, "Train fraction");
    spl->add_option("--val", ratios.val, "Validation fraction");
    spl->add_option("--test", ratios.test, "Test fraction");
    spl->add_flag("--changed-only", spl_changed, "Keep only patches with changed pixels");
    spl->add_option("--region", spl_region, "Restrict to region A or B");
    spl->add_option("--seed", spl_seed, "Shuffle seed");

    // train
    auto* trn = app.add_subcommand("train", "Train a model");
    RunFlags trn_flags;
    trn_flags.attach(trn);
    std::string resume;
    int log_every = 50;
    trn->add_option("--resume", resume, "Checkpoint to resume from");
    trn->add_option("--log-every", log_every, "Progress line interval (0 = quiet)");

    // eval
    auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
    std::string evl_run, evl_ckpt, evl_root, evl_split = "default", evl_out;
    EvalOptions eopts;
    evl->add_option("--run-dir", evl_run, "Run directory (uses ckpt_best.bin, else ckpt_final.bin)");
    evl->add_option("--checkpoint", evl_ckpt, "Explicit checkpoint file");
    evl->add_option("--root", evl_root, "Dataset root");
    evl->add_option("--split", evl_split, "Split manifest name");
    evl->add_option("--part", eopts.part, "train | val | test");
    evl->add_flag("--changed-pixels-only", eopts.changed_pixels_only, "Score SCD on changed pixels only");
    evl->add_option("--threshold", eopts.change_threshold, "Change probability threshold");
    evl->add_option("--out", evl_out, "Report directory (default <run-dir>/eval_<split>_<part>)");

    // ablate
    auto* abl = app.add_subcommand("ablate", "Time-series count ablation");
    RunFlags abl_flags;
    abl_flags.attach(abl);
    std::vector<int> counts = {0, 9, 18, 25};
    std::string abl_part = "test";
    abl->add_option("--counts", counts, "Time-series counts")->delimiter(',');
    abl->add_option("--part", abl_part, "Split part to score");

    // report
    auto* rep = app.add_subcommand("report", "Regenerate report files from saved predictions");
    std::string rep_dir;
    rep->add_option("dir", rep_dir, "Evaluation directory")->required();

    CLI11_PARSE(app, argc, argv);
    torch::set_num_threads(threads);

    try {
        if (*gen) {
            const auto root = resolve_data_root(gen_root);
            GeneratorConfig c = gen_full ? GeneratorConfig::full_geometry() : GeneratorConfig{};
            c.change_fraction = gcfg.change_fraction;
            c.signal_to_noise = gcfg.signal_to_noise;
            c.polygons_per_patch = gcfg.polygons_per_patch;
            generate_dataset(root, gen_count, static_cast<std::uint64_t>(gen_seed), c);
            std::cout << "wrote " << gen_count << " patches to " << root.string() << "\n";
        } else if (*spl) {
            const auto root = resolve_data_root(spl_root);
            std::vector<SampleSummary> summaries;
            for (const auto& id : list_patches(root)) {
                summaries.push_back(read_summary(root, id));
            }
            std::optional<Region> region;
            if (!spl_region.empty()) {
                region = parse_region(spl_region);
            }
            const auto m = build_splits(summaries, ratios, spl_changed, spl_name,
                                        static_cast<std::uint64_t>(spl_seed), region);
            write_manifest(m, root);
            std::cout << "split " << spl_name << ": " << m.train.size() << " train, " << m.val.size() << " val, "
                      << m.test.size() << " test\n";
        } else if (*trn) {
            TrainOptions to;
            to.resume = resume;
            to.log = &std::cout;
            to.log_every = log_every;
            const auto result = train(trn_flags.build(), to);
            std::cout << "final checkpoint: " << result.final_checkpoint.string() << "\n";
            if (!result.best_checkpoint.empty()) {
                std::cout << "best checkpoint: " << result.best_checkpoint.string() << " (step " << result.best_step
                          << ", val " << result.best_val_metric << ")\n";
            }
        } else if (*evl) {
            if (evl_ckpt.empty() && evl_run.empty()) {
                throw std::invalid_argument("eval: give --run-dir or --checkpoint");
            }
            const fs::path ckpt = evl_ckpt.empty() ? default_checkpoint(evl_run) : fs::path(evl_ckpt);
            const auto root = resolve_data_root(evl_root);
            const fs::path base = evl_run.empty() ? ckpt.parent_path() : fs::path(evl_run);
            const fs::path out = evl_out.empty() ? base / ("eval_" + evl_split + "_" + eopts.part) : fs::path(evl_out);
            const auto run = evaluate_checkpoint(ckpt, root, evl_split, eopts);
            const int classes = config_from_checkpoint(load_checkpoint(ckpt)).model.num_classes;
            save_predictions(run, out, root, classes, eopts);
            write_report(run.report, out);
            print_report(run.report);
            std::cout << "report written to " << out.string() << "\n";
        } else if (*abl) {
            AblationOptions ao;
            ao.part = abl_part;
            ao.log = &std::cout;
            const auto result = ablate(abl_flags.build(), counts, ao);
            std::cout << ablation_table(result);
        } else if (*rep) {
            print_report(regenerate_report(rep_dir));
        }
    } catch (const std::exception& e) {
        std::cerr << "fusu: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
