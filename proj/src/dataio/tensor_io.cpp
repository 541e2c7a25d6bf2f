#include "papireg/dataio/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "papireg/error.hpp"

namespace papireg::dataio {
namespace {

constexpr char kMagic[4] = {'P', 'P', 'R', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
  if (tensor.element_count() != tensor.data.size()) {
    fail(ErrorCode::FormatError, "tensor dims do not match payload length");
  }
  std::vector<std::uint8_t> out;
  out.reserve(12 + 4 * tensor.dims.size() + 4 * tensor.data.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kTensorVersion);
  put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(out, d);
  for (float f : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

std::vector<Tensor> decode_tensors(std::span<const std::uint8_t> bytes) {
  std::vector<Tensor> tensors;
  std::size_t at = 0;
  if (bytes.empty()) fail(ErrorCode::FormatError, "empty tensor file");
  while (at < bytes.size()) {
    if (bytes.size() - at < 12) fail(ErrorCode::FormatError, "truncated tensor header");
    if (std::memcmp(bytes.data() + at, kMagic, 4) != 0) fail(ErrorCode::FormatError, "bad tensor magic");
    const std::uint32_t version = get_u32(bytes, at + 4);
    if (version != kTensorVersion) fail(ErrorCode::FormatError, "unsupported tensor version");
    const std::uint32_t rank = get_u32(bytes, at + 8);
    at += 12;
    if (rank > 16 || bytes.size() - at < 4ull * rank) fail(ErrorCode::FormatError, "truncated tensor dims");
    Tensor t;
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      t.dims.push_back(get_u32(bytes, at));
      count *= t.dims.back();
      at += 4;
    }
    if ((bytes.size() - at) / 4 < count) fail(ErrorCode::FormatError, "tensor payload shorter than its dims");
    t.data.resize(count);
    for (std::size_t i = 0; i < count; ++i, at += 4) t.data[i] = std::bit_cast<float>(get_u32(bytes, at));
    tensors.push_back(std::move(t));
  }
  return tensors;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path);
}

void write_tensors(const std::string& path, std::span<const Tensor> tensors) {
  std::vector<std::uint8_t> bytes;
  for (const auto& t : tensors) {
    auto enc = encode_tensor(t);
    bytes.insert(bytes.end(), enc.begin(), enc.end());
  }
  write_file_bytes(path, bytes);
}

void write_tensor(const std::string& path, const Tensor& tensor) {
  write_tensors(path, std::span<const Tensor>(&tensor, 1));
}

std::vector<Tensor> read_tensors(const std::string& path) { return decode_tensors(read_file_bytes(path)); }

Tensor read_tensor(const std::string& path) {
  auto tensors = read_tensors(path);
  if (tensors.size() != 1) fail(ErrorCode::FormatError, path + " holds more than one tensor");
  return std::move(tensors.front());
}

}  // namespace papireg::dataio
