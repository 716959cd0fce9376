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
#include <stdexcept>
#include <string>
#include <vector>

namespace detkit {

/// 8-bit RGB raster, row-major, three interleaved samples per pixel.
class ImageBuffer {
public:
    static constexpr int kChannels = 3;

    ImageBuffer() = default;

    /// Zero-filled (black) image.
    ImageBuffer(int width, int height);

    /// Takes ownership of interleaved RGB data; size must be width*height*3.
    ImageBuffer(int width, int height, std::vector<std::uint8_t> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    long long pixel_count() const noexcept {
        return static_cast<long long>(width_) * height_;
    }

    std::uint8_t at(int x, int y, int c) const {
        return data_[index(x, y, c)];
    }
    std::uint8_t& at(int x, int y, int c) {
        return data_[index(x, y, c)];
    }

    /// Sample as a real value in [0, 255] for photometric math.
    double real(int x, int y, int c) const {
        return static_cast<double>(at(x, y, c));
    }

    const std::vector<std::uint8_t>& data() const noexcept { return data_; }
    std::vector<std::uint8_t>& data() noexcept { return data_; }

    bool operator==(const ImageBuffer&) const = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Clip to [0, 255] then round half-up to an 8-bit sample.
std::uint8_t quantize_sample(double v);

struct ImageIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ImageBuffer read_png(const std::string& path);
void write_png(const ImageBuffer& img, const std::string& path);

/// Lossless PNG encoding to memory; decode(encode(img)) == img.
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes);

}  // namespace detkit
