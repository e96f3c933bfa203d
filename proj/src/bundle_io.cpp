#include "aeunmix/bundle_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "aeunmix/binary_io.hpp"
#include "aeunmix/errors.hpp"
#include "aeunmix/seeding.hpp"
#include "json.hpp"

namespace aeunmix {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json write_payload(const fs::path& dir, const std::string& file,
                   const std::vector<unsigned char>& bytes) {
  binary::write_file(dir / file, bytes);
  return json{{"file", file},
              {"bytes", bytes.size()},
              {"fnv1a64", fnv1a64(bytes.data(), bytes.size())}};
}

std::vector<unsigned char> read_payload(const fs::path& dir, const json& entry,
                                        std::size_t expected_values) {
  const auto file = entry.at("file").get<std::string>();
  auto bytes = binary::read_file(dir / file);
  if (bytes.size() != entry.at("bytes").get<std::size_t>() || bytes.size() != expected_values * 4)
    throw FormatError("payload " + file + ": size " + std::to_string(bytes.size()) +
                      " does not match header shape");
  if (fnv1a64(bytes.data(), bytes.size()) != entry.at("fnv1a64").get<std::uint64_t>())
    throw FormatError("payload " + file + ": checksum mismatch");
  return bytes;
}

Matrix decode_colmajor(const std::vector<unsigned char>& bytes, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.values()[i] = binary::get_f32(&bytes[4 * i]);
  return m;
}

std::vector<unsigned char> encode_colmajor(const Matrix& m) {
  std::vector<unsigned char> out;
  out.reserve(m.size() * 4);
  for (double v : m.values()) binary::put_f32(out, v);
  return out;
}

Matrix quantize(Matrix m) {
  for (double& v : m.values()) v = static_cast<double>(static_cast<float>(v));
  return m;
}

}  // namespace

void save_bundle(const HsiBundle& bundle, const fs::path& header_path) {
  const fs::path dir = header_path.has_parent_path() ? header_path.parent_path() : fs::path(".");
  fs::create_directories(dir);
  const std::string stem = header_path.stem().string();
  const std::size_t bands = bundle.bands(), pixels = bundle.pixel_count();

  std::vector<unsigned char> px;
  px.reserve(bands * pixels * 4);
  for (std::size_t b = 0; b < bands; ++b)
    for (std::size_t m = 0; m < pixels; ++m) binary::put_f32(px, bundle.pixels()(b, m));

  json header{{"format_version", kBundleFormatVersion},
              {"name", bundle.name()},
              {"bands", bands},
              {"pixel_count", pixels},
              {"min_max_scaled", bundle.min_max_scaled()}};
  if (bundle.width()) {
    header["width"] = *bundle.width();
    header["height"] = *bundle.height();
  }
  json payloads;
  payloads["pixels"] = write_payload(dir, stem + ".pixels.f32", px);
  if (const auto& gt = bundle.ground_truth()) {
    header["endmember_count"] = gt->endmember_count();
    payloads["endmembers"] = write_payload(dir, stem + ".endmembers.f32", encode_colmajor(gt->endmembers));
    payloads["abundances"] = write_payload(dir, stem + ".abundances.f32", encode_colmajor(gt->abundances));
  }
  header["payload_files"] = payloads;

  std::ofstream out(header_path, std::ios::trunc);
  if (!out) throw FormatError("cannot write bundle header: " + header_path.string());
  out << header.dump(2) << '\n';
}

HsiBundle load_bundle(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw FormatError("cannot open bundle header: " + header_path.string());
  json header;
  try {
    header = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("bundle header is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (header.at("format_version").get<int>() != kBundleFormatVersion)
      throw FormatError("unsupported bundle format_version");
    const fs::path dir = header_path.has_parent_path() ? header_path.parent_path() : fs::path(".");
    const auto bands = header.at("bands").get<std::size_t>();
    const auto pixels = header.at("pixel_count").get<std::size_t>();
    const auto& payloads = header.at("payload_files");

    const auto px = read_payload(dir, payloads.at("pixels"), bands * pixels);
    Matrix x(bands, pixels);
    for (std::size_t b = 0; b < bands; ++b)
      for (std::size_t m = 0; m < pixels; ++m) x(b, m) = binary::get_f32(&px[4 * (b * pixels + m)]);

    std::optional<GroundTruth> gt;
    if (header.contains("endmember_count")) {
      const auto e = header.at("endmember_count").get<std::size_t>();
      gt = GroundTruth{
          decode_colmajor(read_payload(dir, payloads.at("endmembers"), bands * e), bands, e),
          decode_colmajor(read_payload(dir, payloads.at("abundances"), e * pixels), e, pixels)};
    }
    std::optional<std::size_t> w, h;
    if (header.contains("width")) {
      w = header.at("width").get<std::size_t>();
      h = header.at("height").get<std::size_t>();
    }
    return HsiBundle(header.at("name").get<std::string>(), std::move(x), std::move(gt), w, h,
                     header.value("min_max_scaled", false));
  } catch (const json::exception& e) {
    throw FormatError("malformed bundle header: " + std::string(e.what()));
  } catch (const DimensionError& e) {
    throw FormatError("bundle header/payload shape mismatch: " + std::string(e.what()));
  }
}

Matrix read_csv_columns(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open CSV: " + path.string());
  std::vector<double> values;
  std::size_t width = 0, rows = 0;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    bool numeric = true;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      const std::string t = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw FormatError("CSV " + path.string() + ": non-numeric cell on row " + std::to_string(rows + 1));
    }
    first = false;
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw FormatError("CSV " + path.string() + ": ragged row " + std::to_string(rows + 1));
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw FormatError("CSV " + path.string() + " has no data rows");
  // Row-major rows of `width` values are exactly column-major width x rows.
  Matrix m(width, rows);
  m.values() = std::move(values);
  return m;
}

HsiBundle convert_csv(const fs::path& pixels_csv, const std::optional<fs::path>& endmembers_csv,
                      const std::optional<fs::path>& abundances_csv, std::string name,
                      std::optional<std::size_t> width, std::optional<std::size_t> height) {
  Matrix x = read_csv_columns(pixels_csv);
  std::optional<GroundTruth> gt;
  if (endmembers_csv.has_value() != abundances_csv.has_value())
    throw DataError("convert: endmembers and abundances must be supplied together");
  if (endmembers_csv) gt = GroundTruth{read_csv_columns(*endmembers_csv), read_csv_columns(*abundances_csv)};
  return quantize_to_f32(HsiBundle(std::move(name), std::move(x), std::move(gt), width, height));
}

HsiBundle quantize_to_f32(const HsiBundle& bundle) {
  std::optional<GroundTruth> gt;
  if (bundle.ground_truth())
    gt = GroundTruth{quantize(bundle.ground_truth()->endmembers),
                     quantize(bundle.ground_truth()->abundances)};
  return HsiBundle(bundle.name(), quantize(bundle.pixels()), std::move(gt), bundle.width(),
                   bundle.height(), bundle.min_max_scaled());
}

}  // namespace aeunmix
