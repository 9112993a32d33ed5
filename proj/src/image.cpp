#include "torsonet/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "torsonet/error.hpp"

namespace torsonet {

namespace {

// Skips PNM whitespace and '#' comment lines, then reads one integer token.
int read_pnm_int(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) {
    throw FormatError("malformed PNM header: " + path);
  }
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > 1 << 24) throw FormatError("unreasonable PNM header value: " + path);
    c = in.get();
  }
  return value;
}

std::map<std::string, DecodeFn>& decoder_registry() {
  static std::map<std::string, DecodeFn> registry = {
      {".pgm", decode_pnm},
      {".ppm", decode_pnm},
  };
  return registry;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return ext;
}

}  // namespace

RasterImage decode_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());

  char p = 0, kind = 0;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '5' && kind != '6')) {
    throw FormatError("not a binary PGM/PPM file: " + path.string());
  }
  const int channels = kind == '5' ? 1 : 3;
  const std::string name = path.string();
  const int width = read_pnm_int(in, name);
  const int height = read_pnm_int(in, name);
  const int max_value = read_pnm_int(in, name);
  if (width < 1 || height < 1) throw FormatError("empty PNM image: " + name);
  if (max_value < 1 || max_value > 255) {
    throw FormatError("only 8-bit PNM images are supported: " + name);
  }
  // The header terminates with exactly one whitespace byte, already consumed
  // by read_pnm_int's trailing get(). Rewind one byte if it was not space.
  in.unget();
  int sep = in.get();
  if (!std::isspace(sep)) throw FormatError("malformed PNM header: " + name);

  RasterImage img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.max_value = max_value;
  const std::size_t n =
      static_cast<std::size_t>(width) * height * static_cast<std::size_t>(channels);
  img.pixels.resize(n);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw FormatError("truncated PNM payload: " + name);
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, int width, int height,
               const std::vector<std::uint8_t>& gray) {
  if (gray.size() != static_cast<std::size_t>(width) * height) {
    throw ArgumentError("write_pgm: pixel count mismatch");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()),
            static_cast<std::streamsize>(gray.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void register_decoder(const std::string& extension, DecodeFn fn) {
  decoder_registry()[extension] = std::move(fn);
}

bool decoder_available(const std::string& extension) {
  return decoder_registry().count(extension) > 0;
}

std::vector<std::string> supported_extensions() {
  std::vector<std::string> exts;
  for (const auto& [ext, fn] : decoder_registry()) exts.push_back(ext);
  return exts;
}

RasterImage decode_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  const auto& registry = decoder_registry();
  auto it = registry.find(ext);
  if (it == registry.end()) {
    throw FormatError("no decoder registered for '" + ext + "': " + path.string());
  }
  return it->second(path);
}

TensorF to_model_input(const RasterImage& image, int target_h, int target_w) {
  const int w = image.width, h = image.height, ch = image.channels;
  if (ch != 1 && ch != 3) throw FormatError("unsupported channel count");

  // Luminance on the original 0..max scale.
  std::vector<float> gray(static_cast<std::size_t>(w) * h);
  if (ch == 1) {
    for (std::size_t i = 0; i < gray.size(); ++i) {
      gray[i] = static_cast<float>(image.pixels[i]);
    }
  } else {
    for (std::size_t i = 0; i < gray.size(); ++i) {
      const std::uint8_t* px = image.pixels.data() + i * 3;
      gray[i] = 0.299f * px[0] + 0.587f * px[1] + 0.114f * px[2];
    }
  }

  // Corner-aligned bilinear resample, each axis independent.
  TensorF out({target_h, target_w, 1});
  const float sy = target_h > 1 ? static_cast<float>(h - 1) / (target_h - 1) : 0.0f;
  const float sx = target_w > 1 ? static_cast<float>(w - 1) / (target_w - 1) : 0.0f;
  const float inv_max = 1.0f / static_cast<float>(image.max_value);
  for (int y = 0; y < target_h; ++y) {
    const float fy = y * sy;
    const int y0 = std::min(static_cast<int>(fy), h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const float ty = fy - static_cast<float>(y0);
    for (int x = 0; x < target_w; ++x) {
      const float fx = x * sx;
      const int x0 = std::min(static_cast<int>(fx), w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const float tx = fx - static_cast<float>(x0);
      const float top = gray[static_cast<std::size_t>(y0) * w + x0] * (1.0f - tx) +
                        gray[static_cast<std::size_t>(y0) * w + x1] * tx;
      const float bot = gray[static_cast<std::size_t>(y1) * w + x0] * (1.0f - tx) +
                        gray[static_cast<std::size_t>(y1) * w + x1] * tx;
      out.at(y, x, 0) = (top * (1.0f - ty) + bot * ty) * inv_max;
    }
  }
  return out;
}

ImageSample load_sample(const std::filesystem::path& path, int class_index) {
  ImageSample sample;
  sample.pixels = to_model_input(decode_image(path));
  sample.label = class_index;
  // Contract check on ingestion rather than trust: exact geometry and range.
  if (sample.pixels.dims() != std::vector<int>{224, 224, 1}) {
    throw DataError("sample has wrong shape: " + path.string());
  }
  for (float v : sample.pixels.flat()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw DataError("sample pixel out of [0,1]: " + path.string());
    }
  }
  return sample;
}

}  // namespace torsonet
