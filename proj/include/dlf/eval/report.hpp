#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dlf/eval/bd_rate.hpp"

namespace dlf::eval {

// CSV columns: label,bpp,<metric...>; one row per point. Metric columns are
// the union over all curves, sorted by name.
std::string rd_curves_to_csv(const std::vector<RDCurve>& curves);
std::vector<RDCurve> rd_curves_from_csv(const std::string& text);

void write_rd_csv(const std::filesystem::path& path, const std::vector<RDCurve>& curves);
std::vector<RDCurve> read_rd_csv(const std::filesystem::path& path);

// Markdown table of BD-rate (percent) of every curve against `anchor`, one
// column per metric. Cells that cannot be computed (no overlap, too few
// points) read "n/a".
std::string bd_rate_table(const RDCurve& anchor, const std::vector<RDCurve>& curves,
                          const std::vector<std::string>& metrics);

}  // namespace dlf::eval
