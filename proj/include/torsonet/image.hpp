#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "torsonet/tensor.hpp"

namespace torsonet {

// Decoded raster: 8-bit samples, interleaved, 1 (gray) or 3 (RGB) channels.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int max_value = 255;
  std::vector<std::uint8_t> pixels;  // row-major, channel-interleaved
};

RasterImage decode_pnm(const std::filesystem::path& path);  // binary P5 / P6
void write_pgm(const std::filesystem::path& path, int width, int height,
               const std::vector<std::uint8_t>& gray);

// Pluggable decode adapter: formats register by lowercase extension. Binary
// portable graymap/pixmap support is built in; registration is intended for
// process startup, not concurrent mutation.
using DecodeFn = std::function<RasterImage(const std::filesystem::path&)>;
void register_decoder(const std::string& extension, DecodeFn fn);
bool decoder_available(const std::string& extension);
RasterImage decode_image(const std::filesystem::path& path);
std::vector<std::string> supported_extensions();

// Luminance (0.299 R + 0.587 G + 0.114 B for color input), corner-aligned
// bilinear resize without aspect preservation, then scale to [0, 1].
TensorF to_model_input(const RasterImage& image, int target_h = 224,
                       int target_w = 224);

struct ImageSample {
  TensorF pixels;  // (224, 224, 1), values in [0, 1]
  int label = -1;
};

ImageSample load_sample(const std::filesystem::path& path, int class_index);

}  // namespace torsonet
