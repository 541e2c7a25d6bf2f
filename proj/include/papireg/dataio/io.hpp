#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "papireg/image.hpp"
#include "papireg/projection.hpp"

namespace papireg::dataio {

// KITTI velodyne layout: little-endian f32 (x, y, z, reflectance) records.
projection::PointCloud read_point_cloud(const std::string& path);
void write_point_cloud(const std::string& path, const projection::PointCloud& cloud);

// Laser ring per point, stored as a rank-1 PPRT tensor.
std::vector<int> read_laser_ids(const std::string& path);
void write_laser_ids(const std::string& path, std::span<const int> ids);

// Range, reflectance and index maps as three rank-2 PPRT tensors
// (range.pprt, reflectance.pprt, index.pprt) in `dir`.
void save_maps(const std::string& dir, const projection::ProjectionMaps& maps);
projection::ProjectionMaps load_maps(const std::string& dir);

// Binary PPM (P6) / PGM (P5), 8-bit. PNG goes through libpng. read_image
// dispatches on the file signature.
RgbImage read_image(const std::string& path);
RgbImage read_ppm(const std::string& path);
RgbImage read_png(const std::string& path);
void write_ppm(const std::string& path, const RgbImage& image);
void write_png(const std::string& path, const RgbImage& image);
void write_pgm(const std::string& path, int width, int height, std::span<const std::uint8_t> pixels);

}  // namespace papireg::dataio
