#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hot/executor.hpp"

namespace hot {

/// Writes report.json, trajectory.tsv, one cost-field heatmap per plan and, when the run
/// captured a time-lapse, timelapse_NN.png plus timelapse_strip.png. Returns the files written.
std::vector<std::filesystem::path> write_report(const Executor& ex, const std::filesystem::path& dir);

/// Phase masks and far fields for vortex charges {1, 5, 15}, a line trap and a point trap,
/// as 16-bit PNGs. Returns the files written.
std::vector<std::filesystem::path> export_optics_figures(const std::filesystem::path& dir);

}  // namespace hot
