#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "evc/error.hpp"
#include "evc/evcf.hpp"

namespace evc {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

float get_f32(const std::string& in, std::size_t offset) { return std::bit_cast<float>(get_u32(in, offset)); }

}  // namespace

std::string encode_evcf(const FeatureSequence& seq) {
  const Matrix& m = seq.data();
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() || m.cols() > std::numeric_limits<std::uint32_t>::max())
    fail(ErrorKind::Shape, "sequence too large for EVCF");
  std::string out;
  out.reserve(kEvcfHeaderBytes + 4 * m.data().size());
  out.append(kEvcfMagic, 4);
  put_u32(out, kEvcfVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  put_f32(out, static_cast<float>(seq.frame_shift_ms()));
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    const float f = static_cast<float>(m.data()[i]);
    if (!std::isfinite(f))
      fail(ErrorKind::NonFinite, "value " + std::to_string(i) + " does not fit a finite f32");
    put_f32(out, f);
  }
  return out;
}

FeatureSequence decode_evcf(const std::string& bytes, const std::string& origin) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kEvcfMagic, 4) != 0)
    fail(ErrorKind::BadMagic, origin + ": not an EVCF file");
  if (bytes.size() < kEvcfHeaderBytes) fail(ErrorKind::Truncated, origin + ": header cut short");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kEvcfVersion)
    fail(ErrorKind::BadVersion, origin + ": unsupported version " + std::to_string(version));
  const std::uint64_t n_frames = get_u32(bytes, 8);
  const std::uint64_t dim = get_u32(bytes, 12);
  const float shift = get_f32(bytes, 16);
  if (n_frames == 0 || dim == 0)
    fail(ErrorKind::Shape, origin + ": empty matrix " + std::to_string(n_frames) + "x" + std::to_string(dim));
  const std::uint64_t expected = kEvcfHeaderBytes + 4 * n_frames * dim;
  if (bytes.size() < expected)
    fail(ErrorKind::Truncated, origin + ": payload has " + std::to_string(bytes.size() - kEvcfHeaderBytes) +
                                   " bytes, header declares " + std::to_string(4 * n_frames * dim));
  if (bytes.size() > expected)
    fail(ErrorKind::LengthMismatch,
         origin + ": " + std::to_string(bytes.size() - expected) + " trailing bytes after declared payload");
  if (!std::isfinite(shift) || !(shift > 0.0f))
    fail(ErrorKind::NonFinite, origin + ": invalid frame shift");
  std::vector<double> values(n_frames * dim);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = get_f32(bytes, kEvcfHeaderBytes + 4 * i);
    if (!std::isfinite(f))
      fail(ErrorKind::NonFinite, origin + ": non-finite value at frame " + std::to_string(i / dim) + ", dim " +
                                     std::to_string(i % dim));
    values[i] = f;
  }
  return FeatureSequence(Matrix(n_frames, dim, std::move(values)), static_cast<double>(shift));
}

void write_features(const std::filesystem::path& path, const FeatureSequence& seq) {
  write_file_atomic(path, encode_evcf(seq));
}

FeatureSequence read_features(const std::filesystem::path& path) {
  return decode_evcf(read_file(path), path.string());
}

}  // namespace evc
