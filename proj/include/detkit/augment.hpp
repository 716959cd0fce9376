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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "detkit/geometry.hpp"
#include "detkit/image.hpp"
#include "detkit/rng.hpp"

namespace detkit::augment {

enum class FlipAxis { horizontal, vertical };

/// All augmentation knobs. The default-constructed spec is the identity
/// pipeline; every stochastic op is driven by `seed` plus the image id.
struct AugmentSpec {
    std::optional<FlipAxis> flip_axis;
    double crop_per_side = 0.0;       // fraction removed per side, < 0.5
    double rotation_deg = 0.0;
    double grayscale_prob = 0.0;
    double shear_deg_h = 0.0;
    double shear_deg_v = 0.0;
    double hue_shift_deg = 0.0;
    double saturation_factor = 1.0;
    double brightness_delta = 0.0;    // signed fraction of full scale
    double exposure_percent = 0.0;    // percent, > -100
    double blur_sigma = 0.0;          // pixels
    double noise_fraction = 0.0;      // fraction of pixels replaced
    int cutout_count = 0;
    double cutout_area_fraction = 0.0;
    std::uint64_t seed = 0;
};

/// Throws std::invalid_argument on any violated range constraint.
void validate(const AugmentSpec& spec);

/// Parses the `key = value` config grammar (see README). Unknown keys and
/// malformed values raise std::invalid_argument naming the line.
AugmentSpec parse_augment_spec(const std::string& text);
AugmentSpec load_augment_spec(const std::string& path);

/// Canonical serialization: one line per field, fixed order and formatting.
std::string to_config_text(const AugmentSpec& spec);

// ---------------------------------------------------------------------------
// Geometric ops
// ---------------------------------------------------------------------------

ImageBuffer flip(const ImageBuffer& img, FlipAxis axis);

/// Keeps rows [ceil(p*H), H - ceil(p*H)) and the analogous columns.
/// Throws std::invalid_argument when the window collapses below 1 pixel.
ImageBuffer crop_fraction(const ImageBuffer& img, double per_side);

/// Bilinear resample about the grid center; black fill outside the source.
ImageBuffer rotate(const ImageBuffer& img, double theta_deg);

ImageBuffer shear(const ImageBuffer& img, FlipAxis axis, double deg);

/// Inverse-mapped bilinear warp through an arbitrary affine transform.
ImageBuffer warp(const ImageBuffer& img, const GeometricTransform& t);

// ---------------------------------------------------------------------------
// Photometric ops
// ---------------------------------------------------------------------------

/// Luma grayscale: every channel becomes round(0.299 R + 0.587 G + 0.114 B).
ImageBuffer grayscale(const ImageBuffer& img);

/// Applies grayscale with probability p; consumes exactly one draw.
ImageBuffer maybe_grayscale(const ImageBuffer& img, double p, Rng& rng);

/// Rotates hue by `deg` in HSV space (modulo 360).
ImageBuffer shift_hue(const ImageBuffer& img, double deg);

/// Scales HSV saturation by `alpha`, clamped to [0, 1].
ImageBuffer adjust_saturation(const ImageBuffer& img, double alpha);

/// v -> clip(v + beta * 255, 0, 255), rounded.
ImageBuffer adjust_brightness(const ImageBuffer& img, double beta);

/// v -> clip(v * (1 + A/100), 0, 255), rounded.
ImageBuffer adjust_exposure(const ImageBuffer& img, double percent);

/// Separable Gaussian, kernel radius ceil(3*sigma), renormalized taps,
/// clamp-to-edge borders. Both passes run in doubles; quantization happens
/// once at the end.
ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma);

/// Replaces floor(fraction * W * H) distinct pixels with salt-and-pepper
/// values, each channel independently 0 or 255.
ImageBuffer add_noise(const ImageBuffer& img, double fraction, Rng& rng);

struct CutoutRect {
    int x = 0;
    int y = 0;
    int side = 0;
};

/// The rectangles cutout() would zero for this draw sequence: n squares of
/// area ~ (area_fraction/n) * W * H each, clipped at the borders.
std::vector<CutoutRect> cutout_rects(int width, int height, int n,
                                     double area_fraction, Rng& rng);

ImageBuffer cutout(const ImageBuffer& img, int n, double area_fraction,
                   Rng& rng);

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct AugmentResult {
    ImageBuffer image;
    std::vector<NormalizedBox> boxes;
};

/// The composed geometric transform the pipeline applies for this spec:
/// flip, then crop, then rotation, then shear (horizontal before vertical).
GeometricTransform pipeline_transform(const AugmentSpec& spec, int width,
                                      int height);

/// Applies the geometric stage as a single warp with one box transform,
/// then the photometric ops in fixed order: grayscale, hue, saturation,
/// brightness, exposure, blur, noise, cutout. Output is a pure function of
/// (spec, image_id).
AugmentResult apply_pipeline(const ImageBuffer& img,
                             const std::vector<NormalizedBox>& boxes,
                             const AugmentSpec& spec,
                             const std::string& image_id);

}  // namespace detkit::augment
