#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace papireg::dataio {

// "PPRT" raw tensor: magic, u32 version, u32 rank, u32 dims[rank], then a
// little-endian f32 row-major payload. Several tensors may follow each other
// in one file.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

inline constexpr std::uint32_t kTensorVersion = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
void write_tensors(const std::string& path, std::span<const Tensor> tensors);
void write_tensor(const std::string& path, const Tensor& tensor);

// Throws FormatError on bad magic/version, truncation, or trailing bytes.
std::vector<Tensor> decode_tensors(std::span<const std::uint8_t> bytes);
std::vector<Tensor> read_tensors(const std::string& path);
Tensor read_tensor(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace papireg::dataio
