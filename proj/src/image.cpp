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

#include "detkit/image.hpp"

#include <png.h>

#include <cmath>
#include <cstring>

namespace detkit {

ImageBuffer::ImageBuffer(int width, int height)
    : width_(width),
      height_(height),
      data_(static_cast<std::size_t>(width) * height * kChannels, 0) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("ImageBuffer: dimensions must be >= 1");
    }
}

ImageBuffer::ImageBuffer(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("ImageBuffer: dimensions must be >= 1");
    }
    if (data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
        throw std::invalid_argument("ImageBuffer: data length != width*height*3");
    }
}

std::uint8_t quantize_sample(double v) {
    if (v <= 0.0) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

ImageBuffer read_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;

    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw ImageIoError("failed to open PNG '" + path + "': " + image.message);
    }
    image.format = PNG_FORMAT_RGB;

    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw ImageIoError("failed to read PNG '" + path + "': " + msg);
    }
    return ImageBuffer(static_cast<int>(image.width),
                       static_cast<int>(image.height), std::move(buf));
}

void write_png(const ImageBuffer& img, const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;

    if (!png_image_write_to_file(&image, path.c_str(), 0, img.data().data(), 0,
                                 nullptr)) {
        throw ImageIoError("failed to write PNG '" + path + "': " + image.message);
    }
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data().data(),
                                   0, nullptr)) {
        throw ImageIoError(std::string("PNG encode size probe failed: ") +
                           image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0,
                                   img.data().data(), 0, nullptr)) {
        throw ImageIoError(std::string("PNG encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;

    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw ImageIoError(std::string("failed to parse PNG bytes: ") +
                           image.message);
    }
    image.format = PNG_FORMAT_RGB;

    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw ImageIoError("failed to decode PNG bytes: " + msg);
    }
    return ImageBuffer(static_cast<int>(image.width),
                       static_cast<int>(image.height), std::move(buf));
}

}  // namespace detkit
