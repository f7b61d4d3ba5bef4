#pragma once

// File formats.
//
// Netpbm: binary P5 (gray) / P6 (RGB), maxval 255. Pixels map to p / 255 in
// the channel-planar layout used by the operators; saving clamps to [0, 1]
// and rounds half away from zero.
//
// Matrix: "DMPSMAT1", rows and cols as u64 little-endian, then rows * cols
// f64 little-endian values in row-major order.
//
// CSV: comma separated, RFC 4180 quoting, doubles printed with 17 significant
// digits.

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dmps/operators.hpp"
#include "dmps/types.hpp"

namespace dmps {

namespace detail {

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    const ErrorKind kind = std::filesystem::exists(path) ? ErrorKind::io_failure : ErrorKind::file_not_found;
    throw Error(kind, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_failure, "cannot open " + path.string() + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw Error(ErrorKind::io_failure, "write failed: " + path.string());
}

inline void put_u64_le(std::vector<unsigned char>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

class NetpbmHeaderReader {
 public:
  explicit NetpbmHeaderReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  std::uint64_t next_number() {
    skip_space_and_comments();
    require(pos_ < bytes_.size() && std::isdigit(bytes_[pos_]), ErrorKind::malformed_header,
            "expected a decimal number in netpbm header");
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + static_cast<std::uint64_t>(bytes_[pos_] - '0');
      require(v <= (1u << 30), ErrorKind::malformed_header, "netpbm header value too large");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    require(pos_ < bytes_.size() && std::isspace(bytes_[pos_]), ErrorKind::malformed_header,
            "missing whitespace before netpbm raster");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 2;
};

}  // namespace detail

struct Image {
  ImageShape shape;
  Vector pixels;  // channel-planar, values in [0, 1]
};

inline Image decode_netpbm(const std::vector<unsigned char>& bytes) {
  require(bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'),
          ErrorKind::malformed_header, "not a binary netpbm file (P5/P6)");
  const Index channels = bytes[1] == '5' ? 1 : 3;
  detail::NetpbmHeaderReader header(bytes);
  const auto width = static_cast<Index>(header.next_number());
  const auto height = static_cast<Index>(header.next_number());
  const std::uint64_t maxval = header.next_number();
  require(width > 0 && height > 0, ErrorKind::malformed_header, "netpbm dimensions must be positive");
  require(maxval == 255, ErrorKind::unsupported_maxval,
          "only maxval 255 is supported (got " + std::to_string(maxval) + ")");
  const std::size_t start = header.raster_start();
  const auto count = static_cast<std::size_t>(width * height * channels);
  require(bytes.size() >= start + count, ErrorKind::truncated_payload,
          "netpbm raster has " + std::to_string(bytes.size() - std::min(bytes.size(), start)) + " bytes, expected " +
              std::to_string(count));
  Image img{ImageShape{height, width, channels}, Vector(static_cast<Index>(count))};
  for (Index r = 0; r < height; ++r) {
    for (Index col = 0; col < width; ++col) {
      for (Index c = 0; c < channels; ++c) {
        const unsigned char p = bytes[start + static_cast<std::size_t>((r * width + col) * channels + c)];
        img.pixels[(c * height + r) * width + col] = static_cast<double>(p) / 255.0;
      }
    }
  }
  return img;
}

/// [0, 1] -> byte: clamp, scale by 255, round half away from zero. NaN maps to 0.
inline unsigned char to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<unsigned char>(std::round(v * 255.0));
}

inline std::vector<unsigned char> encode_netpbm(const ImageShape& shape, const Vector& pixels) {
  validate(shape);
  require_size(pixels.size(), shape.size(), "image pixels");
  const std::string header =
      std::string(shape.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(shape.width) + " " +
      std::to_string(shape.height) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(shape.size()));
  for (Index r = 0; r < shape.height; ++r) {
    for (Index col = 0; col < shape.width; ++col) {
      for (Index c = 0; c < shape.channels; ++c) {
        out.push_back(to_byte(pixels[(c * shape.height + r) * shape.width + col]));
      }
    }
  }
  return out;
}

inline Image load_image(const std::filesystem::path& path) { return decode_netpbm(detail::read_bytes(path)); }

inline void save_image(const std::filesystem::path& path, const ImageShape& shape, const Vector& pixels) {
  const auto bytes = encode_netpbm(shape, pixels);
  detail::write_bytes(path, bytes.data(), bytes.size());
}

inline constexpr std::string_view kMatrixMagic = "DMPSMAT1";

inline std::vector<unsigned char> encode_matrix(const Matrix& m) {
  std::vector<unsigned char> buf(kMatrixMagic.begin(), kMatrixMagic.end());
  buf.reserve(24 + static_cast<std::size_t>(m.size()) * 8);
  detail::put_u64_le(buf, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64_le(buf, static_cast<std::uint64_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      detail::put_u64_le(buf, std::bit_cast<std::uint64_t>(m(r, c)));
    }
  }
  return buf;
}

inline Matrix decode_matrix(const std::vector<unsigned char>& bytes) {
  require(bytes.size() >= 8 && std::memcmp(bytes.data(), kMatrixMagic.data(), 8) == 0, ErrorKind::bad_magic,
          "missing DMPSMAT1 magic");
  require(bytes.size() >= 24, ErrorKind::size_mismatch, "matrix header truncated");
  const std::uint64_t rows = detail::get_u64_le(bytes.data() + 8);
  const std::uint64_t cols = detail::get_u64_le(bytes.data() + 16);
  require(cols == 0 || rows <= (bytes.size() / 8) / cols, ErrorKind::size_mismatch, "matrix payload too short");
  require(bytes.size() - 24 == rows * cols * 8, ErrorKind::size_mismatch,
          "matrix payload is " + std::to_string(bytes.size() - 24) + " bytes, expected " +
              std::to_string(rows * cols * 8));
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  const unsigned char* p = bytes.data() + 24;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c, p += 8) {
      const double v = std::bit_cast<double>(detail::get_u64_le(p));
      require(std::isfinite(v), ErrorKind::non_finite_value,
              "non-finite value at (" + std::to_string(r) + ", " + std::to_string(c) + ")");
      m(r, c) = v;
    }
  }
  return m;
}

inline Matrix load_matrix(const std::filesystem::path& path) { return decode_matrix(detail::read_bytes(path)); }

inline void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  require(m.allFinite(), ErrorKind::non_finite_value, "refusing to save non-finite matrix");
  const auto bytes = encode_matrix(m);
  detail::write_bytes(path, bytes.data(), bytes.size());
}

using CsvValue = std::variant<std::string, double, std::int64_t>;
using CsvRow = std::vector<CsvValue>;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

inline std::string csv_field(const CsvValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return csv_field(*s);
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  return std::to_string(std::get<std::int64_t>(v));
}

inline std::string format_csv(const std::vector<std::string>& header, const std::vector<CsvRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += csv_field(header[i]);
  }
  out += "\r\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == header.size(), ErrorKind::width_mismatch,
            "csv row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) + " fields, header has " +
                std::to_string(header.size()));
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i) out += ',';
      out += csv_field(rows[r][i]);
    }
    out += "\r\n";
  }
  return out;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<CsvRow>& rows) {
  const std::string text = format_csv(header, rows);
  detail::write_bytes(path, text.data(), text.size());
}

/// Parses RFC 4180 text into string fields.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += ch;
      any = true;
    }
  }
  require(!quoted, ErrorKind::config_parse, "unterminated quoted csv field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  const auto bytes = detail::read_bytes(path);
  return parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace dmps
