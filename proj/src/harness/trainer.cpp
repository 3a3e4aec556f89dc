#include "fusu/harness/trainer.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fusu/harness/batching.hpp"
#include "fusu/harness/checkpoint.hpp"
#include "fusu/harness/evaluator.hpp"
#include "fusu/harness/optimizer.hpp"
#include "fusu/harness/schedule.hpp"
#include "fusu/supervision.hpp"

namespace fusu::harness {

namespace fs = std::filesystem;

namespace {

constexpr const char* kLossHeader = "step,lr,l1_seg,l2_seg,lT_seg,l_change,total";

std::string ckpt_name(long long step) { return "ckpt_" + std::to_string(step) + ".bin"; }

double metric_of(const EvalReport& r, Task task) {
    switch (task) {
        case Task::segmentation: return r.miou_seg();
        case Task::scd: return r.miou_scd();
        case Task::bcd: return r.iou_bcd();
    }
    return r.miou_seg();
}

/// Keeps the header and the rows for steps below `step`.
void truncate_losses(const fs::path& path, long long step) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("resume: " + path.string() + " not found");
    }
    std::string line;
    std::string kept;
    std::getline(in, line);
    kept += line + "\n";
    long long expected = 0;
    while (std::getline(in, line) && expected < step) {
        kept += line + "\n";
        ++expected;
    }
    if (expected != step) {
        throw std::runtime_error("resume: losses.csv has fewer than " + std::to_string(step) + " rows");
    }
    in.close();
    std::ofstream(path, std::ios::trunc) << kept;
}

}  // namespace

std::string selection_metric(Task task) {
    switch (task) {
        case Task::segmentation: return "mIoU_seg";
        case Task::scd: return "mIoU_scd";
        case Task::bcd: return "IoU_bcd";
    }
    return "mIoU_seg";
}

long long resolve_max_steps(const RunConfig& config, std::size_t train_size) {
    if (config.max_epochs > 0) {
        const auto per_epoch = (static_cast<long long>(train_size) + config.batch_size - 1) / config.batch_size;
        return per_epoch * config.max_epochs;
    }
    return config.max_steps;
}

fs::path default_checkpoint(const fs::path& run_dir) {
    if (fs::exists(run_dir / "ckpt_best.bin")) {
        return run_dir / "ckpt_best.bin";
    }
    return run_dir / "ckpt_final.bin";
}

TrainResult train(const RunConfig& config_in, const TrainOptions& options) {
    RunConfig config = config_in;
    config.validate();
    const fs::path root = resolve_data_root(config.data_root);
    config.data_root = root.string();
    if (!fs::is_directory(root)) {
        throw std::runtime_error("train: dataset root " + root.string() + " not found");
    }
    const auto manifest = read_manifest(root, config.split);
    if (manifest.train.empty()) {
        throw std::invalid_argument("train: split '" + config.split + "' has no training samples");
    }
    const auto probe = read_patch(root, manifest.train.front());
    if (config.time_series_count > probe.series.frames) {
        throw std::invalid_argument("train: time_series_count " + std::to_string(config.time_series_count) +
                                    " exceeds the " + std::to_string(probe.series.frames) + " frames in the dataset");
    }
    const long long max_steps = resolve_max_steps(config, manifest.train.size());
    config.max_steps = max_steps;
    config.max_epochs = 0;

    const fs::path run_dir = config.run_dir;
    fs::create_directories(run_dir);
    KeyValueText snapshot;
    config.write(snapshot);
    snapshot.save(run_dir / "config.snapshot");

    torch::manual_seed(config.seed);
    FusuNet model(config.model);
    Optimizer optimizer(config.optimizer, trainable_parameters(*model));
    const BatchOrder order(manifest.train, config.seed);

    TrainResult result;
    result.best_val_metric = -1.0;
    long long start = 0;
    const auto losses_path = run_dir / "losses.csv";
    if (!options.resume.empty()) {
        const auto ckpt = load_checkpoint(options.resume);
        start = ckpt.header.get_int("step");
        load_state(*model, ckpt.with_prefix("model/"));
        optimizer.load_state(ckpt.with_prefix("optim/"), start);
        if (const auto best = ckpt.header.find("best_val_metric")) {
            result.best_val_metric = parse_double(*best, "best_val_metric");
            result.best_step = ckpt.header.get_int("best_step");
            if (fs::exists(run_dir / "ckpt_best.bin")) {
                result.best_checkpoint = run_dir / "ckpt_best.bin";
            }
        }
        truncate_losses(losses_path, start);
    } else {
        std::ofstream(losses_path, std::ios::trunc) << kLossHeader << '\n';
    }
    std::ofstream losses(losses_path, std::ios::app);
    if (!losses) {
        throw std::runtime_error("train: cannot write " + losses_path.string());
    }

    auto make_checkpoint = [&](long long step) {
        Checkpoint ckpt;
        for (const auto& key : snapshot.keys()) {
            ckpt.header.set("config." + key, snapshot.get(key));
        }
        ckpt.header.set("step", step);
        ckpt.header.set("train_split", config.split);
        ckpt.header.set("train_region", manifest.region_filter);
        if (result.best_val_metric >= 0.0) {
            ckpt.header.set("best_val_metric", result.best_val_metric);
            ckpt.header.set("best_step", result.best_step);
        }
        for (const auto& [name, t] : state_of(*model)) {
            ckpt.tensors["model/" + name] = t;
        }
        for (const auto& [name, t] : optimizer.state()) {
            ckpt.tensors["optim/" + name] = t;
        }
        return ckpt;
    };

    std::vector<fs::path> periodic;
    for (long long step = start; step < max_steps; ++step) {
        const double lr = learning_rate(config.schedule, config.optimizer.lr, step, max_steps);
        auto batch = load_batch(root, order.batch(step, config.batch_size), config.time_series_count);
        auto out = model->forward(batch.inputs);
        auto lb = supervision::total_loss(out, batch.y1, batch.y2, batch.inputs.alignment, config.loss);

        const double l1 = lb.l1_seg.item<double>();
        const double l2 = lb.l2_seg.item<double>();
        const double lt = lb.lT_seg.item<double>();
        const double lc = lb.l_change.item<double>();
        const double total = lb.total.item<double>();
        if (!std::isfinite(total)) {
            std::ostringstream msg;
            msg << "train: non-finite loss at step " << step << " (l1_seg=" << l1 << " l2_seg=" << l2
                << " lT_seg=" << lt << " l_change=" << lc << " total=" << total << ", lr=" << lr << ")";
            throw std::runtime_error(msg.str());
        }
        optimizer.zero_grad();
        lb.total.backward();
        optimizer.step(lr);

        losses << step << ',' << format_double(lr) << ',' << format_double(l1) << ',' << format_double(l2) << ','
               << format_double(lt) << ',' << format_double(lc) << ',' << format_double(total) << '\n';
        if (options.log && options.log_every > 0 && (step % options.log_every == 0 || step + 1 == max_steps)) {
            *options.log << "step " << step << "/" << max_steps << " lr " << lr << " loss " << total << " (seg "
                         << l1 << "/" << l2 << ", series " << lt << ", change " << lc << ")" << std::endl;
        }

        const long long done = step + 1;
        if (done % config.checkpoint_every == 0 || done == max_steps) {
            losses.flush();
            if (config.validate_checkpoints && !manifest.val.empty()) {
                EvalOptions eo;
                eo.part = "val";
                eo.batch_size = config.batch_size;
                std::vector<PatchSample> truth;
                for (const auto& id : manifest.val) {
                    truth.push_back(read_patch(root, id));
                }
                const auto preds = predict(model, root, manifest.val, config.time_series_count, eo);
                const double metric = metric_of(score(preds, truth, config.model.num_classes, eo), config.task);
                if (options.log) {
                    *options.log << "val " << selection_metric(config.task) << " at step " << done << ": " << metric
                                 << std::endl;
                }
                if (std::isfinite(metric) && metric > result.best_val_metric) {
                    result.best_val_metric = metric;
                    result.best_step = done;
                    save_checkpoint(make_checkpoint(done), run_dir / "ckpt_best.bin");
                    result.best_checkpoint = run_dir / "ckpt_best.bin";
                }
            }
            const auto ckpt = make_checkpoint(done);
            if (done == max_steps) {
                save_checkpoint(ckpt, run_dir / "ckpt_final.bin");
            } else {
                const auto path = run_dir / ckpt_name(done);
                save_checkpoint(ckpt, path);
                periodic.push_back(path);
                while (options.keep_checkpoints >= 0 &&
                       static_cast<int>(periodic.size()) > options.keep_checkpoints) {
                    fs::remove(periodic.front());
                    periodic.erase(periodic.begin());
                }
            }
        }
    }
    losses.flush();
    result.steps = max_steps;
    result.final_checkpoint = run_dir / "ckpt_final.bin";
    if (start >= max_steps && !fs::exists(result.final_checkpoint)) {
        save_checkpoint(make_checkpoint(max_steps), result.final_checkpoint);
    }
    return result;
}

}  // namespace fusu::harness
