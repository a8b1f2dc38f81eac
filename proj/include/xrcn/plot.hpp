#pragma once

#include <string>
#include <vector>

#include "xrcn/train.hpp"

namespace xrcn {

/// Standalone SVG with two line charts side by side: accuracy (train and
/// validation) and loss (train and validation), each with axis labels, tick
/// labels and a legend. Output is a pure function of `history`.
std::string render_curves_svg(const std::vector<EpochMetrics>& history);

}  // namespace xrcn
