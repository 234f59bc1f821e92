#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gif/metrics.hpp"

namespace gif {

/// Self-contained scatter plot (no external fonts, scripts or images).
void write_scatter_svg(std::ostream& os, const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, const std::vector<double>& xs,
                       const std::vector<double>& ys, const std::optional<FitReport>& fit);

}  // namespace gif
