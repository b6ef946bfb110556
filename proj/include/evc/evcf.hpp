#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "evc/features.hpp"

namespace evc {

// EVCF v1, little-endian:
//   "EVCF" | u32 version=1 | u32 n_frames | u32 dim | f32 frame_shift_ms | f32 payload[n_frames*dim]
// Payload is row-major. Values are narrowed to f32 on write.
inline constexpr char kEvcfMagic[4] = {'E', 'V', 'C', 'F'};
inline constexpr std::uint32_t kEvcfVersion = 1;
inline constexpr std::size_t kEvcfHeaderBytes = 20;

void write_features(const std::filesystem::path& path, const FeatureSequence& seq);
FeatureSequence read_features(const std::filesystem::path& path);

/// In-memory codec used by the file functions.
std::string encode_evcf(const FeatureSequence& seq);
FeatureSequence decode_evcf(const std::string& bytes, const std::string& origin = "<memory>");

struct CsvOptions {
  bool skip_header = false;
};

FeatureSequence parse_csv(const std::string& text, double frame_shift_ms, CsvOptions options = {},
                          const std::string& origin = "<memory>");
FeatureSequence csv_import(const std::filesystem::path& path, double frame_shift_ms, CsvOptions options = {});
std::string format_csv(const Matrix& data);
void csv_export(const std::filesystem::path& path, const FeatureSequence& seq);

/// F0 files: EVCF with dim 1 (0 Hz = unvoiced) or CSV rows "frame,hz,voiced".
F0Contour read_f0(const std::filesystem::path& path, double frame_shift_ms = 5.0);
void write_f0_csv(const std::filesystem::path& path, const F0Contour& f0);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace evc
