#include "fusu/harness/run_config.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <stdexcept>

#include "fusu/tensor_ops.hpp"

namespace fusu::harness {

std::string to_string(Task task) {
    switch (task) {
        case Task::segmentation: return "segmentation";
        case Task::scd: return "scd";
        case Task::bcd: return "bcd";
    }
    return "segmentation";
}

Task parse_task(const std::string& text) {
    if (text == "segmentation" || text == "seg") {
        return Task::segmentation;
    }
    if (text == "scd") {
        return Task::scd;
    }
    if (text == "bcd") {
        return Task::bcd;
    }
    throw std::invalid_argument("unknown task '" + text + "' (expected segmentation, scd or bcd)");
}

RunConfig RunConfig::defaults(Task task, bool paper_scale) {
    RunConfig c;
    c.task = task;
    if (task == Task::segmentation) {
        c.optimizer = {"sgd", 0.01, 0.9, 1e-4, 0.9, 0.999, 1e-8};
        c.schedule = {"poly", 0.9};
    } else {
        // AdamW with beta1 0.5; weight decay 0.01 is the common AdamW default.
        c.optimizer = {"adamw", task == Task::bcd ? 1e-3 : 3e-4, 0.0, 0.01, 0.5, 0.999, 1e-8};
        c.schedule = {"linear", 1.0};
    }
    c.batch_size = 4;
    c.max_steps = 2000;
    if (paper_scale) {
        c.batch_size = 8;
        if (task == Task::segmentation) {
            c.max_steps = 80000;
        } else {
            c.max_epochs = 200;
        }
        c.checkpoint_every = 5000;
    }
    return c;
}

void RunConfig::validate() const {
    check(optimizer.kind == "sgd" || optimizer.kind == "adamw", "config: optimizer must be sgd or adamw");
    check(schedule.kind == "poly" || schedule.kind == "linear" || schedule.kind == "constant",
          "config: schedule must be poly, linear or constant");
    check(optimizer.lr > 0.0, "config: learning rate must be positive");
    check(optimizer.weight_decay >= 0.0, "config: weight decay must be non-negative");
    check(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0,
          "config: betas must lie in [0, 1)");
    check(batch_size >= 1, "config: batch size must be at least 1");
    check(max_steps >= 1 || max_epochs >= 1, "config: need a positive step or epoch budget");
    check(checkpoint_every >= 1, "config: checkpoint interval must be positive");
    check(time_series_count >= 0 && time_series_count <= 25, "config: time_series_count must lie in 0..25, got " +
                                                                  std::to_string(time_series_count));
    check(model.use_series == (time_series_count > 0),
          "config: model.use_series must be false exactly when time_series_count is 0");
    model.validate();
}

void RunConfig::write(KeyValueText& kv) const {
    kv.set("task", to_string(task));
    kv.set("optimizer", optimizer.kind);
    kv.set("lr", optimizer.lr);
    kv.set("momentum", optimizer.momentum);
    kv.set("weight_decay", optimizer.weight_decay);
    kv.set("beta1", optimizer.beta1);
    kv.set("beta2", optimizer.beta2);
    kv.set("eps", optimizer.eps);
    kv.set("schedule", schedule.kind);
    kv.set("schedule_power", schedule.power);
    kv.set("batch_size", batch_size);
    kv.set("max_steps", max_steps);
    kv.set("max_epochs", max_epochs);
    kv.set("data_root", data_root);
    kv.set("split", split);
    kv.set("time_series_count", time_series_count);
    kv.set("seed", static_cast<long long>(seed));
    kv.set("run_dir", run_dir);
    kv.set("checkpoint_every", checkpoint_every);
    kv.set("validate_checkpoints", validate_checkpoints);
    kv.set("loss.w1", loss.weights.seg_t1);
    kv.set("loss.w2", loss.weights.seg_t2);
    kv.set("loss.wT", loss.weights.seg_series);
    kv.set("loss.wc", loss.weights.change);
    kv.set("loss.class_weights", loss.class_weights);
    kv.set("loss.change_ignore_background", loss.change_ignore_background);
    model.write(kv, "model.");
}

RunConfig RunConfig::read(const KeyValueText& kv) {
    const Task task = kv.contains("task") ? parse_task(kv.get("task")) : Task::segmentation;
    const bool paper = kv.contains("paper_scale") && kv.get_bool("paper_scale");
    RunConfig c = defaults(task, paper);

    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"task", [](const std::string&) {}},
        {"paper_scale", [](const std::string&) {}},
        {"optimizer", [&](const std::string& k) { c.optimizer.kind = kv.get(k); }},
        {"lr", [&](const std::string& k) { c.optimizer.lr = kv.get_double(k); }},
        {"momentum", [&](const std::string& k) { c.optimizer.momentum = kv.get_double(k); }},
        {"weight_decay", [&](const std::string& k) { c.optimizer.weight_decay = kv.get_double(k); }},
        {"beta1", [&](const std::string& k) { c.optimizer.beta1 = kv.get_double(k); }},
        {"beta2", [&](const std::string& k) { c.optimizer.beta2 = kv.get_double(k); }},
        {"eps", [&](const std::string& k) { c.optimizer.eps = kv.get_double(k); }},
        {"schedule", [&](const std::string& k) { c.schedule.kind = kv.get(k); }},
        {"schedule_power", [&](const std::string& k) { c.schedule.power = kv.get_double(k); }},
        {"batch_size", [&](const std::string& k) { c.batch_size = static_cast<int>(kv.get_int(k)); }},
        {"max_steps", [&](const std::string& k) { c.max_steps = kv.get_int(k); }},
        {"max_epochs", [&](const std::string& k) { c.max_epochs = static_cast<int>(kv.get_int(k)); }},
        {"data_root", [&](const std::string& k) { c.data_root = kv.get(k); }},
        {"split", [&](const std::string& k) { c.split = kv.get(k); }},
        {"time_series_count", [&](const std::string& k) { c.time_series_count = static_cast<int>(kv.get_int(k)); }},
        {"seed", [&](const std::string& k) { c.seed = static_cast<std::uint64_t>(kv.get_int(k)); }},
        {"run_dir", [&](const std::string& k) { c.run_dir = kv.get(k); }},
        {"checkpoint_every", [&](const std::string& k) { c.checkpoint_every = kv.get_int(k); }},
        {"validate_checkpoints", [&](const std::string& k) { c.validate_checkpoints = kv.get_bool(k); }},
        {"loss.w1", [&](const std::string& k) { c.loss.weights.seg_t1 = kv.get_double(k); }},
        {"loss.w2", [&](const std::string& k) { c.loss.weights.seg_t2 = kv.get_double(k); }},
        {"loss.wT", [&](const std::string& k) { c.loss.weights.seg_series = kv.get_double(k); }},
        {"loss.wc", [&](const std::string& k) { c.loss.weights.change = kv.get_double(k); }},
        {"loss.class_weights", [&](const std::string& k) { c.loss.class_weights = kv.get_double_list(k); }},
        {"loss.change_ignore_background",
         [&](const std::string& k) { c.loss.change_ignore_background = kv.get_bool(k); }},
    };

    KeyValueText model_keys;
    FusuNetConfig{}.write(model_keys, "model.");
    for (const auto& key : kv.keys()) {
        if (const auto it = setters.find(key); it != setters.end()) {
            it->second(key);
        } else if (!model_keys.contains(key)) {
            throw std::invalid_argument("config " + kv.source() + ": unknown key '" + key + "'");
        }
    }
    c.model = FusuNetConfig::read(kv, "model.");
    // k = 0 removes the series branch unless the file says otherwise explicitly.
    if (!kv.contains("model.use_series")) {
        c.model.use_series = c.time_series_count > 0;
    }
    return c;
}

std::filesystem::path resolve_data_root(const std::string& explicit_root) {
    if (!explicit_root.empty()) {
        return explicit_root;
    }
    if (const char* env = std::getenv("FUSU_DATA_ROOT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "data";
}

}  // namespace fusu::harness
