#include "papireg/dataio/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <png.h>

#include "papireg/dataio/tensor_io.hpp"
#include "papireg/error.hpp"

namespace papireg::dataio {
namespace {

std::uint32_t load_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void store_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

// Reads the next header token of a PNM file, skipping comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

Tensor grid_tensor(const projection::ProjectionMaps& maps, std::vector<float> values) {
  return {{static_cast<std::uint32_t>(maps.height), static_cast<std::uint32_t>(maps.width)}, std::move(values)};
}

}  // namespace

projection::PointCloud read_point_cloud(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.empty() || bytes.size() % 16 != 0) {
    fail(ErrorCode::FormatError, path + ": size " + std::to_string(bytes.size()) + " is not a positive multiple of 16");
  }
  projection::PointCloud cloud;
  cloud.points.resize(bytes.size() / 16);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const std::uint8_t* p = bytes.data() + 16 * i;
    auto& pt = cloud.points[i];
    pt.x = std::bit_cast<float>(load_u32(p));
    pt.y = std::bit_cast<float>(load_u32(p + 4));
    pt.z = std::bit_cast<float>(load_u32(p + 8));
    pt.reflectance = std::bit_cast<float>(load_u32(p + 12));
  }
  return cloud;
}

void write_point_cloud(const std::string& path, const projection::PointCloud& cloud) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(cloud.size() * 16);
  for (const auto& pt : cloud.points) {
    for (double v : {pt.x, pt.y, pt.z, pt.reflectance}) store_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  write_file_bytes(path, bytes);
}

std::vector<int> read_laser_ids(const std::string& path) {
  const Tensor t = read_tensor(path);
  if (t.dims.size() != 1) fail(ErrorCode::FormatError, "laser ids must be a rank-1 tensor");
  std::vector<int> ids(t.data.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const float f = t.data[i];
    if (f != std::floor(f) || f < 0.0f) fail(ErrorCode::FormatError, "laser ids must be non-negative integers");
    ids[i] = static_cast<int>(f);
  }
  return ids;
}

void write_laser_ids(const std::string& path, std::span<const int> ids) {
  Tensor t{{static_cast<std::uint32_t>(ids.size())}, {}};
  t.data.reserve(ids.size());
  for (int id : ids) t.data.push_back(static_cast<float>(id));
  write_tensor(path, t);
}

void save_maps(const std::string& dir, const projection::ProjectionMaps& maps) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  std::vector<float> index(maps.index.begin(), maps.index.end());
  write_tensor((root / "range.pprt").string(), grid_tensor(maps, maps.range));
  write_tensor((root / "reflectance.pprt").string(), grid_tensor(maps, maps.reflectance));
  write_tensor((root / "index.pprt").string(), grid_tensor(maps, std::move(index)));
}

projection::ProjectionMaps load_maps(const std::string& dir) {
  const std::filesystem::path root(dir);
  const Tensor range = read_tensor((root / "range.pprt").string());
  const Tensor refl = read_tensor((root / "reflectance.pprt").string());
  const Tensor index = read_tensor((root / "index.pprt").string());
  if (range.dims.size() != 2 || range.dims != refl.dims || range.dims != index.dims) {
    fail(ErrorCode::FormatError, "projection map tensors must share one rank-2 shape");
  }
  auto maps = projection::ProjectionMaps::empty(static_cast<int>(range.dims[0]), static_cast<int>(range.dims[1]));
  maps.range = range.data;
  maps.reflectance = refl.data;
  for (std::size_t i = 0; i < index.data.size(); ++i) {
    maps.index[i] = static_cast<std::int32_t>(index.data[i]);
    maps.occupancy[i] = maps.index[i] >= 0 ? 1 : 0;
    if (maps.occupancy[i] != (maps.range[i] >= 0.0f ? 1 : 0) || maps.occupancy[i] != (maps.reflectance[i] >= 0.0f ? 1 : 0)) {
      fail(ErrorCode::FormatError, "range, reflectance and index disagree on occupancy");
    }
  }
  return maps;
}

RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  const std::string magic = pnm_token(in);
  if (magic != "P6" && magic != "P5") fail(ErrorCode::FormatError, path + ": not a binary PPM/PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pnm_token(in));
    h = std::stoi(pnm_token(in));
    maxval = std::stoi(pnm_token(in));
  } catch (const std::exception&) {
    fail(ErrorCode::FormatError, path + ": bad PNM header");
  }
  if (w < 1 || h < 1 || maxval != 255) fail(ErrorCode::FormatError, path + ": only 8-bit PNM is supported");
  const int channels = magic == "P6" ? 3 : 1;
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) fail(ErrorCode::FormatError, path + ": truncated pixels");
  RgbImage img(w, h);
  if (channels == 3) {
    img.data = std::move(raw);
  } else {
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[3 * i] = img.data[3 * i + 1] = img.data[3 * i + 2] = raw[i];
  }
  return img;
}

RgbImage read_png(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    fail(ErrorCode::FormatError, path + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::FormatError, path + ": " + msg);
  }
  return out;
}

RgbImage read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  char sig[8] = {};
  in.read(sig, 8);
  if (in.gcount() >= 2 && sig[0] == 'P' && (sig[1] == '6' || sig[1] == '5')) return read_ppm(path);
  if (in.gcount() == 8 && std::memcmp(sig, "\x89PNG\r\n\x1a\n", 8) == 0) return read_png(path);
  fail(ErrorCode::FormatError, path + ": unrecognised image format");
}

void write_ppm(const std::string& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
}

void write_png(const std::string& path, const RgbImage& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.data.data(), 0, nullptr)) {
    fail(ErrorCode::IoError, path + ": " + png.message);
  }
}

void write_pgm(const std::string& path, int width, int height, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) fail(ErrorCode::InvalidArgument, "PGM size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

}  // namespace papireg::dataio
