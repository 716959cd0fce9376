/********************************************************************************
* Copyright 2026 The detkit Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*    http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
********************************************************************************/

#pragma once

#include <string>
#include <vector>

namespace detkit::svg {

/// One polyline in a LineChart; coordinates are data-space.
struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal line chart over [0,1] x [0,1] data space (axes clamp to the
/// data range when it exceeds the unit square). CSV stays the canonical
/// artifact; this is presentation only.
std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label,
                       const std::vector<Series>& series,
                       const std::string& annotation = "");

/// Blue-intensity heatmap with per-cell value text.
std::string heatmap(const std::string& title,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels,
                    const std::vector<std::vector<double>>& values);

}  // namespace detkit::svg
