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

#include <cmath>
#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "detkit/geometry.hpp"
#include "detkit/image.hpp"
#include "detkit/rng.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = fs::temp_directory_path() /
                ("detkit_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline detkit::ImageBuffer make_image(
    int w, int h, const std::function<std::uint8_t(int, int, int)>& fn) {
    detkit::ImageBuffer img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(x, y, c) = fn(x, y, c);
            }
        }
    }
    return img;
}

inline detkit::ImageBuffer random_image(int w, int h, std::uint64_t seed) {
    detkit::Rng rng(seed);
    return make_image(w, h, [&rng](int, int, int) {
        return static_cast<std::uint8_t>(rng.uniform_below(256));
    });
}

/// Smooth test pattern; bilinear resampling reproduces it with small error.
inline detkit::ImageBuffer smooth_image(int w, int h) {
    return make_image(w, h, [&](int x, int y, int c) {
        const double v = 128.0 +
                         50.0 * std::sin(2.0 * M_PI * x / 31.0) *
                             std::cos(2.0 * M_PI * y / 29.0) +
                         20.0 * std::sin(2.0 * M_PI * (x + y) / 53.0) + 8.0 * c;
        return detkit::quantize_sample(v);
    });
}

// ---------------------------------------------------------------------------
// Rasterization oracle for box transforms: rasterize the box, move the
// raster through the exact index remap of the op, and refit a hull.
// ---------------------------------------------------------------------------

using Grid = std::vector<std::vector<bool>>;

inline Grid rasterize_box(const detkit::augment::NormalizedBox& box, int n) {
    Grid grid(n, std::vector<bool>(n, false));
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double px = (x + 0.5) / n;
            const double py = (y + 0.5) / n;
            grid[y][x] = px >= box.cx - box.w / 2 && px <= box.cx + box.w / 2 &&
                         py >= box.cy - box.h / 2 && py <= box.cy + box.h / 2;
        }
    }
    return grid;
}

inline long long grid_count(const Grid& grid) {
    long long count = 0;
    for (const auto& row : grid) {
        for (const bool v : row) count += v;
    }
    return count;
}

/// Hull refit from surviving pixels; drops the box when fewer than
/// `min_residual` of `original_count` pixels survive. Returned box is
/// normalized to the grid's own size.
inline std::optional<detkit::augment::NormalizedBox> refit_hull(
    const Grid& grid, long long original_count, double min_residual) {
    const int rows = static_cast<int>(grid.size());
    const int cols = rows > 0 ? static_cast<int>(grid[0].size()) : 0;
    int min_x = cols, max_x = -1, min_y = rows, max_y = -1;
    long long survivors = 0;
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            if (!grid[y][x]) continue;
            survivors++;
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
        }
    }
    if (survivors == 0 ||
        static_cast<double>(survivors) <
            min_residual * static_cast<double>(original_count)) {
        return std::nullopt;
    }
    detkit::augment::NormalizedBox out;
    out.cx = (min_x + max_x + 1) / 2.0 / cols;
    out.cy = (min_y + max_y + 1) / 2.0 / rows;
    out.w = (max_x - min_x + 1) / static_cast<double>(cols);
    out.h = (max_y - min_y + 1) / static_cast<double>(rows);
    return out;
}

inline Grid grid_hflip(const Grid& g) {
    const int n = static_cast<int>(g.size());
    Grid out(n, std::vector<bool>(n, false));
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) out[y][x] = g[y][n - 1 - x];
    }
    return out;
}

/// Clockwise quarter turn: out(x,y) = in(y, n-1-x).
inline Grid grid_rot90_cw(const Grid& g) {
    const int n = static_cast<int>(g.size());
    Grid out(n, std::vector<bool>(n, false));
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) out[y][x] = g[n - 1 - x][y];
    }
    return out;
}

inline Grid grid_crop(const Grid& g, int off, int size) {
    Grid out(size, std::vector<bool>(size, false));
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) out[y][x] = g[y + off][x + off];
    }
    return out;
}

}  // namespace testsupport
