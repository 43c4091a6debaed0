#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace poregrad {

/// Renders CSV tables and SVG charts for each report into `out_dir`:
///  - metrics_report with "roc"      -> <stem>_roc.csv/.svg
///  - metrics_report / metrics_set   -> <stem>_table.csv
///  - local_gridsearch               -> <stem>_f1_surface.csv/.svg
///  - attadj_calibration             -> <stem>_calibration.csv/.svg
///  - iteration_trace                -> <stem>_iterations.csv/.svg
///  - pore_radii                     -> <stem>_radii.csv/.svg (violins)
///  - bench CSV (n,wall_seconds,...) -> <stem>_timing.csv/.svg
/// Returns the written paths in order. Throws DataError naming the file for a
/// malformed or unrecognised report.
std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& reports,
                                              const std::filesystem::path& out_dir);

/// ROC rows (fpr, tpr) with the (0,0) and (1,1) endpoints added when absent.
std::vector<std::pair<double, double>> roc_rows(const std::vector<double>& fpr,
                                                const std::vector<double>& tpr);

}  // namespace poregrad
