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

#include "detkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace detkit::augment {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::array<double, 9> matmul(const std::array<double, 9>& a,
                             const std::array<double, 9>& b) {
    std::array<double, 9> r{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) {
                s += a[i * 3 + k] * b[k * 3 + j];
            }
            r[i * 3 + j] = s;
        }
    }
    return r;
}
}  // namespace

GeometricTransform GeometricTransform::identity(int w, int h) {
    return GeometricTransform({1, 0, 0, 0, 1, 0, 0, 0, 1}, w, h);
}

GeometricTransform GeometricTransform::horizontal_flip(int w, int h) {
    return GeometricTransform({-1, 0, double(w - 1), 0, 1, 0, 0, 0, 1}, w, h);
}

GeometricTransform GeometricTransform::vertical_flip(int w, int h) {
    return GeometricTransform({1, 0, 0, 0, -1, double(h - 1), 0, 0, 1}, w, h);
}

GeometricTransform GeometricTransform::rotation(double theta_deg, int w, int h) {
    const double t = theta_deg * kPi / 180.0;
    const double c = std::cos(t);
    const double s = std::sin(t);
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    // dst = R * (src - center) + center
    return GeometricTransform({c, -s, cx - c * cx + s * cy,
                               s, c, cy - s * cx - c * cy,
                               0, 0, 1},
                              w, h);
}

GeometricTransform GeometricTransform::crop(int left, int top, int new_w,
                                            int new_h) {
    if (new_w < 1 || new_h < 1) {
        throw std::invalid_argument("crop: output dimensions must be >= 1");
    }
    return GeometricTransform({1, 0, double(-left), 0, 1, double(-top), 0, 0, 1},
                              new_w, new_h);
}

GeometricTransform GeometricTransform::horizontal_shear(double deg, int w,
                                                        int h) {
    const double k = std::tan(deg * kPi / 180.0);
    const double cy = h / 2.0;
    return GeometricTransform({1, k, -k * cy, 0, 1, 0, 0, 0, 1}, w, h);
}

GeometricTransform GeometricTransform::vertical_shear(double deg, int w, int h) {
    const double k = std::tan(deg * kPi / 180.0);
    const double cx = w / 2.0;
    return GeometricTransform({1, 0, 0, k, 1, -k * cx, 0, 0, 1}, w, h);
}

GeometricTransform GeometricTransform::then(const GeometricTransform& next) const {
    return GeometricTransform(matmul(next.m_, m_), next.out_w_, next.out_h_);
}

GeometricTransform GeometricTransform::inverse() const {
    const double a = m_[0], b = m_[1], tx = m_[2];
    const double c = m_[3], d = m_[4], ty = m_[5];
    const double det = a * d - b * c;
    if (det == 0.0) {
        throw std::invalid_argument("GeometricTransform: singular matrix");
    }
    const double ia = d / det;
    const double ib = -b / det;
    const double ic = -c / det;
    const double id = a / det;
    return GeometricTransform({ia, ib, -(ia * tx + ib * ty),
                               ic, id, -(ic * tx + id * ty),
                               0, 0, 1},
                              out_w_, out_h_);
}

Point2 GeometricTransform::apply(double x, double y) const {
    return {m_[0] * x + m_[1] * y + m_[2], m_[3] * x + m_[4] * y + m_[5]};
}

double GeometricTransform::determinant() const noexcept {
    return m_[0] * m_[4] - m_[1] * m_[3];
}

std::vector<NormalizedBox> transform_boxes(const std::vector<NormalizedBox>& boxes,
                                           const GeometricTransform& t,
                                           int src_width, int src_height,
                                           double min_residual) {
    std::vector<NormalizedBox> out;
    out.reserve(boxes.size());
    const double ow = t.out_width();
    const double oh = t.out_height();

    for (const auto& box : boxes) {
        // Corners in pixel-center coordinates (pixel i spans i +- 0.5), the
        // same frame the transform constructors use.
        const double x1 = (box.cx - box.w / 2.0) * src_width - 0.5;
        const double x2 = (box.cx + box.w / 2.0) * src_width - 0.5;
        const double y1 = (box.cy - box.h / 2.0) * src_height - 0.5;
        const double y2 = (box.cy + box.h / 2.0) * src_height - 0.5;

        const Point2 corners[4] = {t.apply(x1, y1), t.apply(x2, y1),
                                   t.apply(x1, y2), t.apply(x2, y2)};

        double minx = corners[0].x, maxx = corners[0].x;
        double miny = corners[0].y, maxy = corners[0].y;
        for (int i = 1; i < 4; ++i) {
            minx = std::min(minx, corners[i].x);
            maxx = std::max(maxx, corners[i].x);
            miny = std::min(miny, corners[i].y);
            maxy = std::max(maxy, corners[i].y);
        }

        const double hull_area = (maxx - minx) * (maxy - miny);

        const double cx1 = std::clamp(minx, -0.5, ow - 0.5);
        const double cx2 = std::clamp(maxx, -0.5, ow - 0.5);
        const double cy1 = std::clamp(miny, -0.5, oh - 0.5);
        const double cy2 = std::clamp(maxy, -0.5, oh - 0.5);
        const double clamped_area = (cx2 - cx1) * (cy2 - cy1);

        if (hull_area <= 0.0 || clamped_area < min_residual * hull_area) {
            continue;
        }

        out.push_back({box.class_id, ((cx1 + cx2) / 2.0 + 0.5) / ow,
                       ((cy1 + cy2) / 2.0 + 0.5) / oh, (cx2 - cx1) / ow,
                       (cy2 - cy1) / oh});
    }
    return out;
}

}  // namespace detkit::augment
