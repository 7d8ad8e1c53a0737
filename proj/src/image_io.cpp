#include "vdmforge/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "vdmforge/errors.hpp"

namespace vdmforge {

namespace {

void put_be32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

void write_chunk(std::ofstream& out, const char type[4], const std::string& data) {
  std::string head;
  put_be32(head, static_cast<uint32_t>(data.size()));
  out.write(head.data(), 4);
  uint32_t crc = crc32(0, reinterpret_cast<const Bytef*>(type), 4);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()),
              static_cast<uInt>(data.size()));
  out.write(type, 4);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  std::string tail;
  put_be32(tail, crc);
  out.write(tail.data(), 4);
}

uint8_t to_byte(float v) {
  float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

void write_png_impl(const std::string& path, int width, int height, int channels,
                    const float* data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  out.write(reinterpret_cast<const char*>(sig), 8);

  std::string ihdr;
  put_be32(ihdr, static_cast<uint32_t>(width));
  put_be32(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);                              // bit depth
  ihdr.push_back(channels == 3 ? 2 : 0);          // color type
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  write_chunk(out, "IHDR", ihdr);

  std::string raw;
  raw.reserve(static_cast<size_t>(height) * (1 + static_cast<size_t>(width) * channels));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        raw.push_back(static_cast<char>(
            to_byte(data[(static_cast<size_t>(y) * width + x) * channels + c])));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                9) != Z_OK)
    throw NumericError("PNG deflate failed");
  compressed.resize(bound);
  write_chunk(out, "IDAT", compressed);
  write_chunk(out, "IEND", "");
  if (!out) throw DataError("write failed: " + path);
}

constexpr char kNrmfMagic[4] = {'N', 'R', 'M', 'F'};

void write_nrmf_impl(const std::string& path, int height, int width, const float* rgb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(kNrmfMagic, 4);
  uint32_t version = 1, h = static_cast<uint32_t>(height), w = static_cast<uint32_t>(width);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&h), 4);
  out.write(reinterpret_cast<const char*>(&w), 4);
  out.write(reinterpret_cast<const char*>(rgb),
            static_cast<std::streamsize>(3ull * width * height * sizeof(float)));
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace

void write_png(const ImageRgb& img, const std::string& path) {
  write_png_impl(path, img.width, img.height, 3, img.data.data());
}

void write_png(const ImageGray& img, const std::string& path) {
  write_png_impl(path, img.width, img.height, 1, img.data.data());
}

void write_nrmf(const ImageRgb& img, const std::string& path) {
  write_nrmf_impl(path, img.height, img.width, img.data.data());
}

void write_nrmf(const ImageGray& img, const std::string& path) {
  std::vector<float> rgb(3 * img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i)
    rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = img.data[i];
  write_nrmf_impl(path, img.height, img.width, rgb.data());
}

ImageRgb read_nrmf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kNrmfMagic, 4) != 0)
    throw DataError(path + ": not an NRMF file");
  uint32_t version = 0, h = 0, w = 0;
  if (!in.read(reinterpret_cast<char*>(&version), 4) || version != 1)
    throw DataError(path + ": unsupported NRMF version");
  if (!in.read(reinterpret_cast<char*>(&h), 4) || !in.read(reinterpret_cast<char*>(&w), 4) ||
      h == 0 || w == 0 || h > 65536 || w > 65536)
    throw DataError(path + ": invalid dimensions");
  ImageRgb img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.data.resize(3ull * w * h);
  if (!in.read(reinterpret_cast<char*>(img.data.data()),
               static_cast<std::streamsize>(img.data.size() * sizeof(float))))
    throw DataError(path + ": truncated pixel payload");
  return img;
}

}  // namespace vdmforge
