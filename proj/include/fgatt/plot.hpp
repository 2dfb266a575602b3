#pragma once

#include "fgatt/metrics.hpp"

#include <iosfwd>
#include <string>

namespace fgatt::plot {

/// Line chart of `metric` (seed mean) against missing rate, one series per model, as SVG.
void write_metric_svg(const metrics::MetricsReport& report, const std::string& metric, const std::string& title,
                      std::ostream& out);

}  // namespace fgatt::plot
