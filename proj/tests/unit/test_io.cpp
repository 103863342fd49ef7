#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "dtvp/io.hpp"
#include "dtvp/synth.hpp"

using namespace dtvp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dtvp_io_test";
  fs::create_directories(dir);
  return dir / name;
}

Image quantised(std::size_t w, std::size_t h, int maxval, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> d(0, maxval);
  Image u(w, h);
  for (double& v : u.data()) v = static_cast<double>(d(gen)) / maxval;
  return u;
}

}  // namespace

class RoundTrip : public ::testing::TestWithParam<std::tuple<std::string, int>> {};

TEST_P(RoundTrip, LosslessForGrayscale) {
  const auto [ext, depth] = GetParam();
  const int maxval = depth == 16 ? 65535 : 255;
  const Image u = quantised(13, 7, maxval, 3);
  const fs::path p = scratch("rt" + std::to_string(depth) + ext);
  io::write_image(p, u, depth);
  const auto back = io::read_image(p);
  EXPECT_EQ(back.bit_depth, depth);
  ASSERT_TRUE(back.image.same_shape(u));
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(back.image[i], u[i]);
  // second write is byte-identical
  const fs::path p2 = scratch("rt2_" + std::to_string(depth) + ext);
  io::write_image(p2, back.image, depth);
  std::ifstream a(p, std::ios::binary), b(p2, std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

INSTANTIATE_TEST_SUITE_P(Formats, RoundTrip,
                         ::testing::Values(std::make_tuple(".pgm", 8), std::make_tuple(".pgm", 16),
                                           std::make_tuple(".png", 8), std::make_tuple(".png", 16)));

TEST(Pgm, AsciiWithComments) {
  const fs::path p = scratch("ascii.pgm");
  std::ofstream(p) << "P2\n# comment\n3 2\n# another\n255\n0 51 102\n153 204 255\n";
  const auto img = io::read_image(p);
  EXPECT_EQ(img.image.width(), 3u);
  EXPECT_EQ(img.image.height(), 2u);
  EXPECT_DOUBLE_EQ(img.image(1, 0), 0.6);
  EXPECT_DOUBLE_EQ(img.image(1, 2), 1.0);
}

TEST(Pgm, RejectsMalformedInput) {
  const fs::path p = scratch("bad.pgm");
  std::ofstream(p) << "P5\n3 2\n255\n";  // truncated raster
  EXPECT_THROW(io::read_image(p), io::io_error);
  std::ofstream(p) << "P6\n1 1\n255\nabc";
  EXPECT_THROW(io::read_image(p), io::io_error);
  EXPECT_THROW(io::read_image(scratch("missing.pgm")), io::io_error);
  EXPECT_THROW(io::read_image(scratch("x.tif")), io::io_error);
}

TEST(Csv, ExactRoundTrip) {
  Image u(4, 3);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n01;
  for (double& v : u.data()) v = n01(gen);
  const fs::path p = scratch("grid.csv");
  io::write_image(p, u);
  EXPECT_TRUE(io::read_image(p).image == u);
}

TEST(Maps, RoundTripAndEllipses) {
  ParamMaps maps(5, 4);
  for (std::size_t i = 0; i < maps.size(); ++i) maps.set(i, {0.5 + 0.1 * i, 0.3 * i, 0.04 * i, 0.2 + i});
  const fs::path dir = scratch("maps");
  io::write_maps(dir, maps);
  const auto back = io::read_maps(dir);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    EXPECT_DOUBLE_EQ(back.params[i].p, maps.params[i].p);
    EXPECT_NEAR(back.weights[i].e1, maps.weights[i].e1, 1e-15);
    EXPECT_NEAR(back.weights[i].theta, maps.weights[i].theta, 1e-15);
    EXPECT_DOUBLE_EQ(back.params[i].m, maps.params[i].m);
  }
  io::write_ellipses(dir / "ell.csv", maps, 2);
  std::ifstream in(dir / "ell.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "row,col,a,b,theta,eccentricity,p");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 2 * 2);
}
