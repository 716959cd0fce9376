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

#include <array>
#include <vector>

namespace detkit::augment {

/// YOLO-style box: class id plus center/size as fractions of the image.
struct NormalizedBox {
    int class_id = 0;
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const noexcept { return w * h; }
    bool operator==(const NormalizedBox&) const = default;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// 3x3 affine transform in pixel coordinates, mapping source pixels to
/// destination pixels, together with the destination raster size.
///
/// Image warping samples through the inverse; box transforms map corners
/// forward. Composition is `a.then(b)`, meaning apply `a` first.
class GeometricTransform {
public:
    GeometricTransform() = default;

    static GeometricTransform identity(int w, int h);

    /// out(x,y) = in(W-1-x, y)
    static GeometricTransform horizontal_flip(int w, int h);

    /// out(x,y) = in(x, H-1-y)
    static GeometricTransform vertical_flip(int w, int h);

    /// Rotation about the pixel-grid center ((W-1)/2, (H-1)/2). Positive
    /// angles turn the content clockwise in the usual y-down raster view,
    /// so 90 degrees on a square grid is an exact index permutation.
    static GeometricTransform rotation(double theta_deg, int w, int h);

    /// Window copy: destination (0,0) is source (left, top).
    static GeometricTransform crop(int left, int top, int new_w, int new_h);

    /// Horizontal shear anchored at (W/2, H/2):
    /// destination x = x + (y - H/2) * tan(deg).
    static GeometricTransform horizontal_shear(double deg, int w, int h);

    /// Vertical analogue: destination y = y + (x - W/2) * tan(deg).
    static GeometricTransform vertical_shear(double deg, int w, int h);

    /// Composite transform applying *this first, then `next`.
    GeometricTransform then(const GeometricTransform& next) const;

    GeometricTransform inverse() const;

    Point2 apply(double x, double y) const;

    int out_width() const noexcept { return out_w_; }
    int out_height() const noexcept { return out_h_; }
    double determinant() const noexcept;

    const std::array<double, 9>& matrix() const noexcept { return m_; }

private:
    GeometricTransform(const std::array<double, 9>& m, int out_w, int out_h)
        : m_(m), out_w_(out_w), out_h_(out_h) {}

    // Row-major; last row fixed at (0, 0, 1).
    std::array<double, 9> m_{1, 0, 0, 0, 1, 0, 0, 0, 1};
    int out_w_ = 0;
    int out_h_ = 0;
};

/// Maps each box's corners through `t`, refits an axis-aligned hull in the
/// destination frame, clamps to [0,1], and drops boxes whose clamped area
/// falls below `min_residual` of the pre-clamp hull area.
std::vector<NormalizedBox> transform_boxes(const std::vector<NormalizedBox>& boxes,
                                           const GeometricTransform& t,
                                           int src_width, int src_height,
                                           double min_residual = 0.10);

}  // namespace detkit::augment
