#ifndef OPGAME_PLOTS_HPP
#define OPGAME_PLOTS_HPP

#include "opgame/experiment.hpp"

#include <string>
#include <vector>

namespace opgame {

// Render a run: one initial-vs-final opinion scatter plus one
// per-dimension macro-time trajectory panel (all individuals, with the
// population mean overlaid). Returns the written file paths.
std::vector<std::string> emit_plots(const Trace& tr, const std::string& out_dir);

// Same, from persisted opinion snapshots (the opinions.csv format).
std::vector<std::string> emit_plots(const std::vector<Mat>& snapshots,
                                    const std::string& out_dir);

// Render a sweep: one metric-vs-sigma panel per Figure-2 metric, with
// per-seed points and the per-sigma median curve.
std::vector<std::string> emit_plots(const std::vector<MetricsRecord>& table,
                                    const std::string& out_dir);

} // namespace opgame

#endif
