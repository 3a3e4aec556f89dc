#include "fusu/harness/ablation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fusu/harness/batching.hpp"
#include "fusu/harness/checkpoint.hpp"
#include "fusu/harness/evaluator.hpp"
#include "fusu/harness/report.hpp"
#include "fusu/harness/trainer.hpp"
#include "fusu/tensor_ops.hpp"

namespace fusu::harness {

namespace fs = std::filesystem;

namespace {

std::string cell(double v) {
    if (std::isnan(v)) {
        return "undefined";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

bool same_outputs(const ModelOutputs& a, const ModelOutputs& b) {
    return torch::equal(a.seg_t1, b.seg_t1) && torch::equal(a.seg_t2, b.seg_t2) && torch::equal(a.change, b.change);
}

}  // namespace

bool check_series_invariance(const fs::path& checkpoint, const fs::path& root, const std::string& split,
                             const std::string& part) {
    const auto ckpt = load_checkpoint(checkpoint);
    auto model = model_from_checkpoint(ckpt);
    check(!model->config().use_series, "series invariance: the checkpoint has a series branch");
    const auto manifest = read_manifest(root, split);
    const auto& ids = manifest.part(part);
    check(!ids.empty(), "series invariance: split part is empty");
    const std::vector<std::string> chunk(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(2, ids.size())));

    torch::NoGradGuard no_grad;
    model->eval();
    auto batch = load_batch(root, chunk, -1);
    auto reference = model->forward(batch.inputs);

    auto noisy = batch.inputs;
    auto gen = torch::make_generator<at::CPUGeneratorImpl>(1234);
    noisy.series = torch::randn(batch.inputs.series.sizes(), gen) * 5.0;
    noisy.months = torch::flip(batch.inputs.months, {1});
    auto perturbed = model->forward(noisy);

    auto absent = batch.inputs;
    absent.series = torch::Tensor();
    absent.months = torch::Tensor();
    auto without = model->forward(absent);
    return same_outputs(reference, perturbed) && same_outputs(reference, without);
}

std::string ablation_table(const AblationResult& result) {
    std::ostringstream out;
    out << "  k | mIoU_seg | IoU_bcd  | mIoU_scd\n";
    out << "----+----------+----------+---------\n";
    for (const auto& r : result.rows) {
        char k[8];
        std::snprintf(k, sizeof k, "%3d", r.k);
        out << k << " | " << cell(r.miou_seg) << "   | " << cell(r.iou_bcd) << "   | " << cell(r.miou_scd) << '\n';
    }
    if (result.k0_checked) {
        out << "k=0 series invariance: " << (result.k0_invariant ? "bit-exact" : "VIOLATED") << '\n';
    }
    return out.str();
}

AblationResult ablate(const RunConfig& base, const std::vector<int>& counts, const AblationOptions& options) {
    check(!counts.empty(), "ablate: no time-series counts given");
    for (const int k : counts) {
        check(k >= 0 && k <= 25, "ablate: count " + std::to_string(k) + " outside 0..25");
    }
    const fs::path root = resolve_data_root(base.data_root);
    const fs::path out_dir = base.run_dir;
    fs::create_directories(out_dir);

    AblationResult result;
    for (const int k : counts) {
        RunConfig c = base;
        c.data_root = root.string();
        c.time_series_count = k;
        c.model.use_series = k > 0;
        c.run_dir = (out_dir / ("k" + std::to_string(k))).string();
        if (options.log) {
            *options.log << "ablate: training k=" << k << " into " << c.run_dir << std::endl;
        }
        TrainOptions to;
        to.log = options.log;
        to.log_every = 100;
        train(c, to);

        EvalOptions eo;
        eo.part = options.part;
        eo.batch_size = c.batch_size;
        const auto ckpt = default_checkpoint(c.run_dir);
        const auto run = evaluate_checkpoint(ckpt, root, c.split, eo);
        save_predictions(run, fs::path(c.run_dir) / "eval", root, c.model.num_classes, eo);
        write_report(run.report, fs::path(c.run_dir) / "eval");
        result.rows.push_back({k, run.report.miou_seg(), run.report.iou_bcd(), run.report.miou_scd()});

        if (k == 0) {
            result.k0_checked = true;
            result.k0_invariant = check_series_invariance(ckpt, root, c.split, options.part);
        }
    }

    std::ofstream csv(out_dir / "ablation.csv", std::ios::trunc);
    csv << "k,mIoU_seg,IoU_bcd,mIoU_scd\n";
    for (const auto& r : result.rows) {
        csv << r.k << ',' << format_double(r.miou_seg) << ',' << format_double(r.iou_bcd) << ','
            << format_double(r.miou_scd) << '\n';
    }
    std::ofstream(out_dir / "ablation.txt", std::ios::trunc) << ablation_table(result);
    return result;
}

}  // namespace fusu::harness
