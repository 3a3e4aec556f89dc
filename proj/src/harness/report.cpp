#include "fusu/harness/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fusu/kv_text.hpp"
#include "fusu/tensor_ops.hpp"

namespace fusu::harness {

namespace fs = std::filesystem;

namespace {

std::string format_metric(double v) { return std::isnan(v) ? "undefined" : format_double(v); }

std::string undefined_list(const metrics::ConfusionMatrix& cm) {
    const auto ious = metrics::iou_per_class(cm);
    const auto labels = metrics::evaluated_labels(cm);
    std::string out;
    for (std::size_t i = 0; i < ious.size(); ++i) {
        if (!ious[i]) {
            out += (out.empty() ? "" : ",") + std::to_string(labels[i]);
        }
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("report: cannot write " + path.string());
    }
    out << text;
}

}  // namespace

std::string report_summary(const EvalReport& r) {
    KeyValueText kv;
    kv.set("split", r.split);
    kv.set("part", r.part);
    kv.set("protocol", r.protocol);
    kv.set("train_region", r.train_region.empty() ? std::string("all") : r.train_region);
    kv.set("eval_region", r.eval_region.empty() ? std::string("all") : r.eval_region);
    kv.set("samples", static_cast<long long>(r.samples));
    kv.set("changed_pixels_only", r.changed_pixels_only);
    kv.set("change_threshold", r.change_threshold);
    kv.set("mIoU_seg", format_metric(r.miou_seg()));
    kv.set("IoU_bcd", format_metric(r.iou_bcd()));
    kv.set("mIoU_scd", format_metric(r.miou_scd()));
    kv.set("undefined_classes_seg", undefined_list(r.seg));
    kv.set("undefined_classes_scd", undefined_list(r.scd));
    kv.set("evaluated_pixels_seg", static_cast<long long>(r.seg.total()));
    kv.set("evaluated_pixels_scd", static_cast<long long>(r.scd.total()));
    return kv.str();
}

std::string report_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "label,name,iou_seg,iou_scd\n";
    const auto seg = metrics::iou_per_class(r.seg);
    const auto scd = metrics::iou_per_class(r.scd);
    const auto labels = metrics::evaluated_labels(r.seg);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << labels[i] << ',' << class_info(labels[i]).name << ','
            << (seg[i] ? format_double(*seg[i]) : "undefined") << ','
            << (scd[i] ? format_double(*scd[i]) : "undefined") << '\n';
    }
    return out.str();
}

void write_report(const EvalReport& report, const fs::path& dir) {
    fs::create_directories(dir);
    write_text(dir / "report.csv", report_csv(report));
    write_text(dir / "report.txt", report_summary(report));
}

void save_predictions(const EvalRun& run, const fs::path& dir, const fs::path& data_root, int num_classes,
                      const EvalOptions& options) {
    const auto pred_dir = dir / "predictions";
    fs::create_directories(pred_dir);
    std::string index;
    for (const auto& p : run.predictions) {
        std::ofstream out(pred_dir / (p.id + ".pred"), std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("report: cannot write predictions for " + p.id);
        }
        out << "FUSU-PRED 1 " << p.seg_t1.height << ' ' << p.seg_t1.width << '\n';
        for (const auto* grid : {&p.seg_t1.values, &p.seg_t2.values, &p.change.values}) {
            out.write(reinterpret_cast<const char*>(grid->data()), static_cast<std::streamsize>(grid->size()));
        }
        index += p.id + "\n";
    }
    write_text(pred_dir / "index.txt", index);

    KeyValueText info;
    info.set("data_root", fs::absolute(data_root).string());
    info.set("split", run.report.split);
    info.set("part", options.part);
    info.set("num_classes", num_classes);
    info.set("changed_pixels_only", options.changed_pixels_only);
    info.set("change_threshold", options.change_threshold);
    info.set("train_region", run.report.train_region);
    info.set("eval_region", run.report.eval_region);
    info.save(dir / "eval.info");
}

std::vector<Prediction> load_predictions(const fs::path& dir) {
    const auto pred_dir = dir / "predictions";
    std::ifstream index(pred_dir / "index.txt");
    if (!index) {
        throw std::runtime_error("report: no saved predictions under " + dir.string());
    }
    std::vector<Prediction> out;
    std::string id;
    while (std::getline(index, id)) {
        if (id.empty()) {
            continue;
        }
        const auto path = pred_dir / (id + ".pred");
        std::ifstream in(path, std::ios::binary);
        std::string magic, version;
        int h = 0, w = 0;
        in >> magic >> version >> h >> w;
        in.get();
        if (!in || magic != "FUSU-PRED" || h <= 0 || w <= 0) {
            throw std::runtime_error("report: bad prediction file " + path.string());
        }
        Prediction p;
        p.id = id;
        p.seg_t1 = LabelMap(h, w);
        p.seg_t2 = LabelMap(h, w);
        p.change = ChangeLabel(h, w);
        for (auto* grid : {&p.seg_t1.values, &p.seg_t2.values, &p.change.values}) {
            in.read(reinterpret_cast<char*>(grid->data()), static_cast<std::streamsize>(grid->size()));
        }
        if (!in) {
            throw std::runtime_error("report: truncated prediction file " + path.string());
        }
        out.push_back(std::move(p));
    }
    return out;
}

EvalReport regenerate_report(const fs::path& dir) {
    const auto info = KeyValueText::load(dir / "eval.info");
    EvalOptions options;
    options.part = info.get("part");
    options.changed_pixels_only = info.get_bool("changed_pixels_only");
    options.change_threshold = info.get_double("change_threshold");
    const fs::path root = info.get("data_root");

    const auto predictions = load_predictions(dir);
    std::vector<PatchSample> truth;
    for (const auto& p : predictions) {
        truth.push_back(read_patch(root, p.id));
    }
    auto report = score(predictions, truth, static_cast<int>(info.get_int("num_classes")), options);
    report.split = info.get("split");
    report.train_region = info.get("train_region");
    report.eval_region = info.get("eval_region");
    report.protocol = protocol_tag(report.train_region, report.eval_region);
    write_report(report, dir);
    return report;
}

}  // namespace fusu::harness
