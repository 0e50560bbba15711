#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "susmap/epimodel.hpp"
#include "susmap/evaluate.hpp"
#include "susmap/modelchoice.hpp"
#include "susmap/spatial.hpp"

namespace susmap {

// All artifacts are plain comma-separated UTF-8 with '.' decimal point.
// Doubles are written with "%.17g" so rereads are bit-exact.

std::string format_double(double v);

SpatialUnits read_locations(const std::filesystem::path& path);
void write_locations(const std::filesystem::path& path, const SpatialUnits& units);

// Long format `id,t,y`, t = 1..T, every (id,t) pair exactly once. Rows are
// returned in the unit order of `units`; ids must match exactly.
OutbreakPanel read_panel(const std::filesystem::path& path, const SpatialUnits& units);
void write_panel(const std::filesystem::path& path, const SpatialUnits& units,
                 const OutbreakPanel& panel);

Eigen::VectorXd read_field(const std::filesystem::path& path, const SpatialUnits& units,
                           const std::string& value_column);
void write_field(const std::filesystem::path& path, const SpatialUnits& units,
                 const Eigen::VectorXd& values, const std::string& value_column);

void write_posterior_summary(const std::filesystem::path& path, const SpatialUnits& units,
                             const PosteriorSummary& summary);
void write_hyper_summary(const std::filesystem::path& path, const PosteriorSummary& summary);
void write_chain(const std::filesystem::path& path, const Chain& chain,
                 const SpatialUnits& units);
void write_correlogram(const std::filesystem::path& path, const Correlogram& c);
void write_benchmark(const std::filesystem::path& path, const std::vector<EvalReport>& cells);

}  // namespace susmap
