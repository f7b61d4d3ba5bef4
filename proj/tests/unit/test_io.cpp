#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dmps/io.hpp"
#include "oracles.hpp"

using namespace dmps;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("dmps_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& bytes) const {
    std::ofstream(path(name), std::ios::binary) << bytes;
  }

  std::string slurp(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

 private:
  std::filesystem::path dir_;
};

template <typename Fn>
void expect_error(ErrorKind kind, Fn&& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

using ImageIo = TempDir;
using MatrixIo = TempDir;
using CsvIo = TempDir;

TEST_F(ImageIo, SingleWhitePixel) {
  write("w.pgm", std::string("P5\n1 1\n255\n") + '\xff');
  const Image img = load_image(path("w.pgm"));
  EXPECT_EQ(img.shape.channels, 1);
  EXPECT_EQ(img.shape.height, 1);
  EXPECT_EQ(img.shape.width, 1);
  EXPECT_EQ(img.pixels[0], 1.0);
}

TEST_F(ImageIo, RoundingHalfAwayFromZero) {
  EXPECT_EQ(to_byte(0.5), 128);
  EXPECT_EQ(to_byte(-0.2), 0);
  EXPECT_EQ(to_byte(1.7), 255);
  EXPECT_EQ(to_byte(std::numeric_limits<double>::quiet_NaN()), 0);
  EXPECT_EQ(to_byte(2.5 / 255.0), 3);
}

TEST_F(ImageIo, CommentsAndRgbLayout) {
  std::string raw = "P6 # rgb\n# another\n2 1\n255\n";
  raw += std::string{'\x00', '\x10', '\x20', '\x30', '\x40', '\x50'};
  write("c.ppm", raw);
  const Image img = load_image(path("c.ppm"));
  ASSERT_EQ(img.shape.size(), 6);
  EXPECT_EQ(img.shape.channels, 3);
  // planar: R plane, G plane, B plane
  EXPECT_DOUBLE_EQ(img.pixels[0], 0.0);
  EXPECT_DOUBLE_EQ(img.pixels[1], 0x30 / 255.0);
  EXPECT_DOUBLE_EQ(img.pixels[2], 0x10 / 255.0);
  EXPECT_DOUBLE_EQ(img.pixels[5], 0x50 / 255.0);
}

TEST_F(ImageIo, ByteLevelRoundTrip) {
  std::mt19937_64 gen(1);
  std::string raw = "P6\n5 3\n255\n";
  for (int i = 0; i < 45; ++i) raw += static_cast<char>(gen() & 0xFF);
  write("a.ppm", raw);
  const Image first = load_image(path("a.ppm"));
  save_image(path("b.ppm"), first.shape, first.pixels);
  EXPECT_EQ(slurp("b.ppm"), raw);
  const Image second = load_image(path("b.ppm"));
  EXPECT_EQ(first.pixels, second.pixels);
}

TEST_F(ImageIo, Errors) {
  expect_error(ErrorKind::truncated_payload, [] { (void)decode_netpbm(bytes_of("P5\n2 2\n255\nabc")); });
  expect_error(ErrorKind::unsupported_maxval, [] { (void)decode_netpbm(bytes_of("P5\n1 1\n65535\n\x01\x02")); });
  expect_error(ErrorKind::malformed_header, [] { (void)decode_netpbm(bytes_of("P3\n1 1\n255\n0")); });
  expect_error(ErrorKind::malformed_header, [] { (void)decode_netpbm(bytes_of("P5\nx 1\n255\n0")); });
  expect_error(ErrorKind::malformed_header, [] { (void)decode_netpbm(bytes_of("P5\n0 1\n255\n")); });
  expect_error(ErrorKind::file_not_found, [this] { (void)load_image(path("missing.pgm")); });
}

TEST_F(MatrixIo, BitIdenticalRoundTrip) {
  std::mt19937_64 gen(2);
  const Matrix m = oracle::random_matrix(gen, 3, 5);
  save_matrix(path("m.dmpsmat"), m);
  const Matrix back = load_matrix(path("m.dmpsmat"));
  ASSERT_EQ(back.rows(), 3);
  ASSERT_EQ(back.cols(), 5);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 5; ++j) EXPECT_EQ(std::bit_cast<std::uint64_t>(back(i, j)), std::bit_cast<std::uint64_t>(m(i, j)));
  }
}

TEST_F(MatrixIo, Layout) {
  Matrix m(1, 2);
  m << 1.0, -2.0;
  const auto bytes = encode_matrix(m);
  ASSERT_EQ(bytes.size(), 24U + 16U);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "DMPSMAT1");
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[16], 2);
  // little-endian IEEE 754 1.0 = 0x3FF0000000000000, row-major
  EXPECT_EQ(bytes[24 + 7], 0x3F);
  EXPECT_EQ(bytes[24 + 6], 0xF0);
  EXPECT_EQ(bytes[32 + 7], 0xC0);
}

TEST_F(MatrixIo, Errors) {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  auto bytes = encode_matrix(m);
  auto wrong = bytes;
  wrong[0] = 'X';
  expect_error(ErrorKind::bad_magic, [&] { (void)decode_matrix(wrong); });
  auto shorter = bytes;
  shorter.pop_back();
  expect_error(ErrorKind::size_mismatch, [&] { (void)decode_matrix(shorter); });
  auto nan = bytes;
  const double q = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan.data() + 32, &q, 8);
  expect_error(ErrorKind::non_finite_value, [&] { (void)decode_matrix(nan); });
  Matrix bad = m;
  bad(0, 0) = std::numeric_limits<double>::infinity();
  expect_error(ErrorKind::non_finite_value, [&] { save_matrix(path("bad.dmpsmat"), bad); });
}

TEST_F(CsvIo, HeaderOnly) {
  write_csv(path("h.csv"), {"a", "b"}, {});
  EXPECT_EQ(slurp("h.csv"), "a,b\r\n");
  const auto rows = read_csv(path("h.csv"));
  ASSERT_EQ(rows.size(), 1U);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"a", "b"}));
}

TEST_F(CsvIo, NumericRoundTripAndQuoting) {
  const double x = 0.1 + 0.2;
  write_csv(path("r.csv"), {"name", "value", "n"}, {{std::string("say \"hi\", ok"), x, std::int64_t{-42}}});
  const auto rows = read_csv(path("r.csv"));
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(rows[1][0], "say \"hi\", ok");
  EXPECT_EQ(std::stod(rows[1][1]), x);
  EXPECT_EQ(rows[1][2], "-42");
}

TEST_F(CsvIo, RaggedRowsRejected) {
  expect_error(ErrorKind::width_mismatch,
               [this] { write_csv(path("x.csv"), {"a", "b"}, {{1.0, 2.0}, {std::int64_t{1}}}); });
}
