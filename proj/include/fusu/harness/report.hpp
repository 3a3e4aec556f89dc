#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fusu/harness/evaluator.hpp"

namespace fusu::harness {

/// Writes report.csv (per-class IoU with class names) and report.txt (summary) into dir.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

/// Saves predictions to <dir>/predictions/<id>.pred plus the context needed to rescore them
/// (<dir>/eval.info).
void save_predictions(const EvalRun& run, const std::filesystem::path& dir, const std::filesystem::path& data_root,
                      int num_classes, const EvalOptions& options);

std::vector<Prediction> load_predictions(const std::filesystem::path& dir);

/// Rescores saved predictions against the dataset and rewrites the report files.
EvalReport regenerate_report(const std::filesystem::path& dir);

std::string report_summary(const EvalReport& report);
std::string report_csv(const EvalReport& report);

}  // namespace fusu::harness
