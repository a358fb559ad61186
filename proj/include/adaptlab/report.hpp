#pragma once

#include <string>
#include <vector>

#include "adaptlab/results.hpp"

namespace adaptlab::harness {

// Averages rows over seeds per protocol and renders one Markdown table per
// protocol group (base, augmented, hardness-promoting), columns in the order
// mCA, RMSE, AUROC, ID Acc., OOD Acc. Per column the best mean is bold and
// the second best underlined; RMSE ranks low-to-high and is marked with a
// down arrow. Ties share the marker.
std::string generate_markdown_report(const std::vector<ResultRow>& rows);

}  // namespace adaptlab::harness
