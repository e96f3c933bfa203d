#pragma once

#include <filesystem>
#include <optional>

#include "aeunmix/lmm.hpp"

namespace aeunmix {

// On-disk HSI bundle.
//
// `<stem>.json` holds the header:
//   { "format_version": 1, "name", "bands", "pixel_count", "width"?, "height"?,
//     "endmember_count"?, "min_max_scaled",
//     "payload_files": { "pixels": {"file", "bytes", "fnv1a64"},
//                        "endmembers"?: {...}, "abundances"?: {...} } }
// Payloads are little-endian float32:
//   pixels      band-sequential, index b * M + m
//   endmembers  B x E column-major, index e * B + b
//   abundances  E x M column-major, index m * E + e
// Payload values are quantized to float32 on save.
inline constexpr int kBundleFormatVersion = 1;

void save_bundle(const HsiBundle& bundle, const std::filesystem::path& header_path);
HsiBundle load_bundle(const std::filesystem::path& header_path);

// Reads plain CSV with one spectrum per row. A non-numeric first row is
// treated as a header and skipped. Returns a (values-per-row) x (rows) matrix.
Matrix read_csv_columns(const std::filesystem::path& path);

// Builds a bundle from CSV pixels (one pixel per row) and, optionally,
// endmembers (one spectrum per row) and abundances (one pixel per row).
HsiBundle convert_csv(const std::filesystem::path& pixels_csv,
                      const std::optional<std::filesystem::path>& endmembers_csv,
                      const std::optional<std::filesystem::path>& abundances_csv,
                      std::string name,
                      std::optional<std::size_t> width = std::nullopt,
                      std::optional<std::size_t> height = std::nullopt);

// Rounds every stored value to the nearest float32, i.e. what a save/load
// round trip yields.
HsiBundle quantize_to_f32(const HsiBundle& bundle);

}  // namespace aeunmix
