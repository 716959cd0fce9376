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

#include "detkit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace detkit::augment {

namespace {

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument(msg);
}

struct Hsv {
    double h;  // degrees in [0, 360)
    double s;  // [0, 1]
    double v;  // [0, 1]
};

Hsv rgb_to_hsv(double r, double g, double b) {
    const double maxc = std::max({r, g, b});
    const double minc = std::min({r, g, b});
    const double delta = maxc - minc;

    Hsv out{0.0, 0.0, maxc};
    if (maxc > 0.0) {
        out.s = delta / maxc;
    }
    if (delta > 0.0) {
        if (maxc == r) {
            out.h = 60.0 * ((g - b) / delta);
        } else if (maxc == g) {
            out.h = 60.0 * ((b - r) / delta + 2.0);
        } else {
            out.h = 60.0 * ((r - g) / delta + 4.0);
        }
        if (out.h < 0.0) {
            out.h += 360.0;
        }
    }
    return out;
}

void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) {
    const double c = hsv.v * hsv.s;
    const double hp = hsv.h / 60.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    const double m = hsv.v - c;

    double r1 = 0.0, g1 = 0.0, b1 = 0.0;
    switch (static_cast<int>(hp) % 6) {
        case 0: r1 = c; g1 = x; break;
        case 1: r1 = x; g1 = c; break;
        case 2: g1 = c; b1 = x; break;
        case 3: g1 = x; b1 = c; break;
        case 4: r1 = x; b1 = c; break;
        default: r1 = c; b1 = x; break;
    }
    r = r1 + m;
    g = g1 + m;
    b = b1 + m;
}

using HsvMap = Hsv (*)(const Hsv&, double);

ImageBuffer map_hsv(const ImageBuffer& img, double arg, HsvMap f) {
    ImageBuffer out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            Hsv hsv = rgb_to_hsv(img.real(x, y, 0) / 255.0,
                                 img.real(x, y, 1) / 255.0,
                                 img.real(x, y, 2) / 255.0);
            hsv = f(hsv, arg);
            double r, g, b;
            hsv_to_rgb(hsv, r, g, b);
            out.at(x, y, 0) = quantize_sample(r * 255.0);
            out.at(x, y, 1) = quantize_sample(g * 255.0);
            out.at(x, y, 2) = quantize_sample(b * 255.0);
        }
    }
    return out;
}

double sample_bilinear(const ImageBuffer& img, double sx, double sy, int c) {
    const int x0 = static_cast<int>(std::floor(sx));
    const int y0 = static_cast<int>(std::floor(sy));
    const double fx = sx - x0;
    const double fy = sy - y0;

    auto fetch = [&](int x, int y) -> double {
        if (x < 0 || x >= img.width() || y < 0 || y >= img.height()) {
            return 0.0;  // black fill
        }
        return img.real(x, y, c);
    };

    return (1.0 - fx) * (1.0 - fy) * fetch(x0, y0) +
           fx * (1.0 - fy) * fetch(x0 + 1, y0) +
           (1.0 - fx) * fy * fetch(x0, y0 + 1) +
           fx * fy * fetch(x0 + 1, y0 + 1);
}

// ceil with a guard for products like 0.2 * 10 that land a hair above an
// integer in binary floating point.
int ceil_fraction(double fraction, int extent) {
    return static_cast<int>(std::ceil(fraction * extent - 1e-9));
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec validation / config grammar
// ---------------------------------------------------------------------------

void validate(const AugmentSpec& spec) {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(spec.grayscale_prob)) fail("grayscale_prob must be in [0, 1]");
    if (!in01(spec.noise_fraction)) fail("noise_fraction must be in [0, 1]");
    if (!in01(spec.cutout_area_fraction)) {
        fail("cutout_area_fraction must be in [0, 1]");
    }
    if (spec.crop_per_side < 0.0 || spec.crop_per_side >= 0.5) {
        fail("crop_per_side must be in [0, 0.5)");
    }
    if (!std::isfinite(spec.rotation_deg)) fail("rotation_deg must be finite");
    if (!std::isfinite(spec.hue_shift_deg)) fail("hue_shift_deg must be finite");
    if (std::fabs(spec.shear_deg_h) >= 45.0 || std::fabs(spec.shear_deg_v) >= 45.0) {
        fail("shear degrees must satisfy |deg| < 45");
    }
    if (spec.saturation_factor < 0.0) fail("saturation_factor must be >= 0");
    if (spec.brightness_delta < -1.0 || spec.brightness_delta > 1.0) {
        fail("brightness_delta must be in [-1, 1]");
    }
    if (spec.exposure_percent <= -100.0) fail("exposure_percent must be > -100");
    if (spec.blur_sigma < 0.0) fail("blur_sigma must be >= 0");
    if (spec.cutout_count < 0) fail("cutout_count must be >= 0");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_line(int line, const std::string& msg) {
    fail("augment spec line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) fail_line(line, "trailing characters in '" + v + "'");
        return d;
    } catch (const std::invalid_argument&) {
        fail_line(line, "expected a number, got '" + v + "'");
    } catch (const std::out_of_range&) {
        fail_line(line, "number out of range: '" + v + "'");
    }
}

}  // namespace

AugmentSpec parse_augment_spec(const std::string& text) {
    AugmentSpec spec;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::vector<std::string> seen;

    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail_line(line_no, "expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            fail_line(line_no, "expected 'key = value'");
        }
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            fail_line(line_no, "duplicate key '" + key + "'");
        }
        seen.push_back(key);

        if (key == "flip_axis") {
            if (value == "none") {
                spec.flip_axis.reset();
            } else if (value == "horizontal") {
                spec.flip_axis = FlipAxis::horizontal;
            } else if (value == "vertical") {
                spec.flip_axis = FlipAxis::vertical;
            } else {
                fail_line(line_no, "flip_axis must be none|horizontal|vertical");
            }
        } else if (key == "crop_per_side") {
            spec.crop_per_side = parse_double(value, line_no);
        } else if (key == "rotation_deg") {
            spec.rotation_deg = parse_double(value, line_no);
        } else if (key == "grayscale_prob") {
            spec.grayscale_prob = parse_double(value, line_no);
        } else if (key == "shear_deg_h") {
            spec.shear_deg_h = parse_double(value, line_no);
        } else if (key == "shear_deg_v") {
            spec.shear_deg_v = parse_double(value, line_no);
        } else if (key == "hue_shift_deg") {
            spec.hue_shift_deg = parse_double(value, line_no);
        } else if (key == "saturation_factor") {
            spec.saturation_factor = parse_double(value, line_no);
        } else if (key == "brightness_delta") {
            spec.brightness_delta = parse_double(value, line_no);
        } else if (key == "exposure_percent") {
            spec.exposure_percent = parse_double(value, line_no);
        } else if (key == "blur_sigma") {
            spec.blur_sigma = parse_double(value, line_no);
        } else if (key == "noise_fraction") {
            spec.noise_fraction = parse_double(value, line_no);
        } else if (key == "cutout_count") {
            const double d = parse_double(value, line_no);
            if (d != std::floor(d) || d < 0) {
                fail_line(line_no, "cutout_count must be a non-negative integer");
            }
            spec.cutout_count = static_cast<int>(d);
        } else if (key == "cutout_area_fraction") {
            spec.cutout_area_fraction = parse_double(value, line_no);
        } else if (key == "seed") {
            try {
                spec.seed = std::stoull(value);
            } catch (const std::exception&) {
                fail_line(line_no, "seed must be an unsigned 64-bit integer");
            }
        } else {
            fail_line(line_no, "unknown key '" + key + "'");
        }
    }

    validate(spec);
    return spec;
}

AugmentSpec load_augment_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open augment spec '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_augment_spec(ss.str());
}

std::string to_config_text(const AugmentSpec& spec) {
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    std::ostringstream out;
    out << "flip_axis = "
        << (!spec.flip_axis ? "none"
            : *spec.flip_axis == FlipAxis::horizontal ? "horizontal"
                                                      : "vertical")
        << '\n';
    out << "crop_per_side = " << num(spec.crop_per_side) << '\n';
    out << "rotation_deg = " << num(spec.rotation_deg) << '\n';
    out << "grayscale_prob = " << num(spec.grayscale_prob) << '\n';
    out << "shear_deg_h = " << num(spec.shear_deg_h) << '\n';
    out << "shear_deg_v = " << num(spec.shear_deg_v) << '\n';
    out << "hue_shift_deg = " << num(spec.hue_shift_deg) << '\n';
    out << "saturation_factor = " << num(spec.saturation_factor) << '\n';
    out << "brightness_delta = " << num(spec.brightness_delta) << '\n';
    out << "exposure_percent = " << num(spec.exposure_percent) << '\n';
    out << "blur_sigma = " << num(spec.blur_sigma) << '\n';
    out << "noise_fraction = " << num(spec.noise_fraction) << '\n';
    out << "cutout_count = " << spec.cutout_count << '\n';
    out << "cutout_area_fraction = " << num(spec.cutout_area_fraction) << '\n';
    out << "seed = " << spec.seed << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Geometric ops
// ---------------------------------------------------------------------------

ImageBuffer flip(const ImageBuffer& img, FlipAxis axis) {
    ImageBuffer out(img.width(), img.height());
    const int w = img.width();
    const int h = img.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int sx = axis == FlipAxis::horizontal ? w - x - 1 : x;
            const int sy = axis == FlipAxis::vertical ? h - y - 1 : y;
            for (int c = 0; c < ImageBuffer::kChannels; ++c) {
                out.at(x, y, c) = img.at(sx, sy, c);
            }
        }
    }
    return out;
}

ImageBuffer crop_fraction(const ImageBuffer& img, double per_side) {
    if (per_side < 0.0 || per_side >= 0.5) {
        fail("crop_fraction: per_side must be in [0, 0.5)");
    }
    const int off_x = ceil_fraction(per_side, img.width());
    const int off_y = ceil_fraction(per_side, img.height());
    const int new_w = img.width() - 2 * off_x;
    const int new_h = img.height() - 2 * off_y;
    if (new_w < 1 || new_h < 1) {
        fail("crop_fraction: window degenerates below one pixel");
    }

    ImageBuffer out(new_w, new_h);
    for (int y = 0; y < new_h; ++y) {
        for (int x = 0; x < new_w; ++x) {
            for (int c = 0; c < ImageBuffer::kChannels; ++c) {
                out.at(x, y, c) = img.at(x + off_x, y + off_y, c);
            }
        }
    }
    return out;
}

ImageBuffer warp(const ImageBuffer& img, const GeometricTransform& t) {
    const GeometricTransform inv = t.inverse();
    ImageBuffer out(t.out_width(), t.out_height());
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            const Point2 s = inv.apply(x, y);
            for (int c = 0; c < ImageBuffer::kChannels; ++c) {
                out.at(x, y, c) = quantize_sample(sample_bilinear(img, s.x, s.y, c));
            }
        }
    }
    return out;
}

ImageBuffer rotate(const ImageBuffer& img, double theta_deg) {
    if (!std::isfinite(theta_deg)) fail("rotate: angle must be finite");
    return warp(img, GeometricTransform::rotation(theta_deg, img.width(),
                                                  img.height()));
}

ImageBuffer shear(const ImageBuffer& img, FlipAxis axis, double deg) {
    if (std::fabs(deg) >= 45.0) fail("shear: |deg| must be < 45");
    const auto t = axis == FlipAxis::horizontal
                       ? GeometricTransform::horizontal_shear(deg, img.width(),
                                                              img.height())
                       : GeometricTransform::vertical_shear(deg, img.width(),
                                                            img.height());
    return warp(img, t);
}

// ---------------------------------------------------------------------------
// Photometric ops
// ---------------------------------------------------------------------------

ImageBuffer grayscale(const ImageBuffer& img) {
    ImageBuffer out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double luma = 0.299 * img.real(x, y, 0) +
                                0.587 * img.real(x, y, 1) +
                                0.114 * img.real(x, y, 2);
            const std::uint8_t q = quantize_sample(luma);
            out.at(x, y, 0) = q;
            out.at(x, y, 1) = q;
            out.at(x, y, 2) = q;
        }
    }
    return out;
}

ImageBuffer maybe_grayscale(const ImageBuffer& img, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0) fail("maybe_grayscale: p must be in [0, 1]");
    const double u = rng.uniform();
    return u < p ? grayscale(img) : img;
}

ImageBuffer shift_hue(const ImageBuffer& img, double deg) {
    if (!std::isfinite(deg)) fail("shift_hue: degrees must be finite");
    return map_hsv(img, deg, [](const Hsv& in, double d) {
        double h = std::fmod(in.h + d, 360.0);
        if (h < 0.0) h += 360.0;
        return Hsv{h, in.s, in.v};
    });
}

ImageBuffer adjust_saturation(const ImageBuffer& img, double alpha) {
    if (alpha < 0.0) fail("adjust_saturation: alpha must be >= 0");
    return map_hsv(img, alpha, [](const Hsv& in, double a) {
        return Hsv{in.h, std::clamp(in.s * a, 0.0, 1.0), in.v};
    });
}

ImageBuffer adjust_brightness(const ImageBuffer& img, double beta) {
    if (beta < -1.0 || beta > 1.0) {
        fail("adjust_brightness: beta must be in [-1, 1]");
    }
    const double delta = beta * 255.0;
    ImageBuffer out(img.width(), img.height());
    for (std::size_t i = 0; i < img.data().size(); ++i) {
        out.data()[i] = quantize_sample(img.data()[i] + delta);
    }
    return out;
}

ImageBuffer adjust_exposure(const ImageBuffer& img, double percent) {
    if (percent <= -100.0) fail("adjust_exposure: percent must be > -100");
    const double gain = 1.0 + percent / 100.0;
    ImageBuffer out(img.width(), img.height());
    for (std::size_t i = 0; i < img.data().size(); ++i) {
        out.data()[i] = quantize_sample(img.data()[i] * gain);
    }
    return out;
}

ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
    if (sigma < 0.0) fail("gaussian_blur: sigma must be >= 0");
    if (sigma == 0.0) return img;

    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
    }
    const double sum = std::accumulate(kernel.begin(), kernel.end(), 0.0);
    for (double& k : kernel) k /= sum;

    const int w = img.width();
    const int h = img.height();
    auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };

    std::vector<double> tmp(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int dx = -radius; dx <= radius; ++dx) {
                    acc += kernel[dx + radius] * img.real(clampi(x + dx, w), y, c);
                }
                tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
            }
        }
    }

    ImageBuffer out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    acc += kernel[dy + radius] *
                           tmp[(static_cast<std::size_t>(clampi(y + dy, h)) * w + x) * 3 + c];
                }
                out.at(x, y, c) = quantize_sample(acc);
            }
        }
    }
    return out;
}

ImageBuffer add_noise(const ImageBuffer& img, double fraction, Rng& rng) {
    if (fraction < 0.0 || fraction > 1.0) {
        fail("add_noise: fraction must be in [0, 1]");
    }
    const long long total = img.pixel_count();
    const long long count =
        static_cast<long long>(std::floor(fraction * double(total) + 1e-9));
    if (count == 0) return img;

    // Partial Fisher-Yates gives exactly `count` distinct positions.
    std::vector<std::uint32_t> indices(static_cast<std::size_t>(total));
    std::iota(indices.begin(), indices.end(), 0u);

    ImageBuffer out = img;
    for (long long i = 0; i < count; ++i) {
        const std::uint64_t j =
            i + rng.uniform_below(static_cast<std::uint64_t>(total - i));
        std::swap(indices[static_cast<std::size_t>(i)],
                  indices[static_cast<std::size_t>(j)]);
        const std::uint32_t pos = indices[static_cast<std::size_t>(i)];
        const int x = static_cast<int>(pos % img.width());
        const int y = static_cast<int>(pos / img.width());
        for (int c = 0; c < 3; ++c) {
            out.at(x, y, c) = rng.uniform_below(2) == 0 ? 0 : 255;
        }
    }
    return out;
}

std::vector<CutoutRect> cutout_rects(int width, int height, int n,
                                     double area_fraction, Rng& rng) {
    if (n < 0) fail("cutout: n must be >= 0");
    if (area_fraction < 0.0 || area_fraction > 1.0) {
        fail("cutout: area_fraction must be in [0, 1]");
    }
    std::vector<CutoutRect> rects;
    if (n == 0 || area_fraction == 0.0) return rects;

    const double per_rect_area =
        area_fraction * double(width) * double(height) / n;
    const int side =
        std::max<int>(1, static_cast<int>(std::llround(std::sqrt(per_rect_area))));

    rects.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int x = rng.uniform_int(0, width - 1);
        const int y = rng.uniform_int(0, height - 1);
        rects.push_back({x, y, side});
    }
    return rects;
}

ImageBuffer cutout(const ImageBuffer& img, int n, double area_fraction,
                   Rng& rng) {
    const auto rects = cutout_rects(img.width(), img.height(), n,
                                    area_fraction, rng);
    ImageBuffer out = img;
    for (const auto& r : rects) {
        const int x2 = std::min(r.x + r.side, img.width());
        const int y2 = std::min(r.y + r.side, img.height());
        for (int y = r.y; y < y2; ++y) {
            for (int x = r.x; x < x2; ++x) {
                for (int c = 0; c < 3; ++c) {
                    out.at(x, y, c) = 0;
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

GeometricTransform pipeline_transform(const AugmentSpec& spec, int width,
                                      int height) {
    GeometricTransform t = GeometricTransform::identity(width, height);

    if (spec.flip_axis) {
        t = t.then(*spec.flip_axis == FlipAxis::horizontal
                       ? GeometricTransform::horizontal_flip(t.out_width(),
                                                             t.out_height())
                       : GeometricTransform::vertical_flip(t.out_width(),
                                                           t.out_height()));
    }
    if (spec.crop_per_side > 0.0) {
        const int w = t.out_width();
        const int h = t.out_height();
        const int off_x = ceil_fraction(spec.crop_per_side, w);
        const int off_y = ceil_fraction(spec.crop_per_side, h);
        const int new_w = w - 2 * off_x;
        const int new_h = h - 2 * off_y;
        if (new_w < 1 || new_h < 1) {
            fail("crop_per_side degenerates image below one pixel");
        }
        t = t.then(GeometricTransform::crop(off_x, off_y, new_w, new_h));
    }
    if (spec.rotation_deg != 0.0) {
        t = t.then(GeometricTransform::rotation(spec.rotation_deg,
                                                t.out_width(), t.out_height()));
    }
    if (spec.shear_deg_h != 0.0) {
        t = t.then(GeometricTransform::horizontal_shear(
            spec.shear_deg_h, t.out_width(), t.out_height()));
    }
    if (spec.shear_deg_v != 0.0) {
        t = t.then(GeometricTransform::vertical_shear(
            spec.shear_deg_v, t.out_width(), t.out_height()));
    }
    return t;
}

AugmentResult apply_pipeline(const ImageBuffer& img,
                             const std::vector<NormalizedBox>& boxes,
                             const AugmentSpec& spec,
                             const std::string& image_id) {
    validate(spec);
    Rng rng = Rng::substream(spec.seed, image_id);

    const GeometricTransform t =
        pipeline_transform(spec, img.width(), img.height());

    AugmentResult result;
    result.image = warp(img, t);
    result.boxes = transform_boxes(boxes, t, img.width(), img.height());

    if (spec.grayscale_prob > 0.0) {
        result.image = maybe_grayscale(result.image, spec.grayscale_prob, rng);
    }
    if (spec.hue_shift_deg != 0.0) {
        result.image = shift_hue(result.image, spec.hue_shift_deg);
    }
    if (spec.saturation_factor != 1.0) {
        result.image = adjust_saturation(result.image, spec.saturation_factor);
    }
    if (spec.brightness_delta != 0.0) {
        result.image = adjust_brightness(result.image, spec.brightness_delta);
    }
    if (spec.exposure_percent != 0.0) {
        result.image = adjust_exposure(result.image, spec.exposure_percent);
    }
    if (spec.blur_sigma > 0.0) {
        result.image = gaussian_blur(result.image, spec.blur_sigma);
    }
    if (spec.noise_fraction > 0.0) {
        result.image = add_noise(result.image, spec.noise_fraction, rng);
    }
    if (spec.cutout_count > 0 && spec.cutout_area_fraction > 0.0) {
        result.image = cutout(result.image, spec.cutout_count,
                              spec.cutout_area_fraction, rng);
    }
    return result;
}

}  // namespace detkit::augment
