// Image and CSV grid I/O. Intensities are normalised to [0,1] on read and
// quantised back with the same bit depth on write, so an 8- or 16-bit
// read/write round trip is lossless.
#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dtvp/core.hpp"

namespace dtvp::io {

struct io_error : domain_error {
  using domain_error::domain_error;
};

struct LoadedImage {
  Image image;
  int bit_depth = 8;
};

namespace detail {

inline std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

inline int max_value(int bit_depth) { return bit_depth == 16 ? 65535 : 255; }

inline std::uint16_t quantise(double v, int maxval) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint16_t>(std::lround(c * maxval));
}

// PNM header tokens, skipping comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

inline std::size_t parse_positive(const std::string& tok, const char* what) {
  try {
    const long v = std::stol(tok);
    if (v <= 0) throw io_error(std::string("invalid ") + what);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw io_error(std::string("invalid ") + what);
  }
}

}  // namespace detail

inline LoadedImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  const std::string magic = detail::pnm_token(in);
  if (magic != "P2" && magic != "P5") throw io_error(path.string() + ": not a P2/P5 PGM file");
  const std::size_t w = detail::parse_positive(detail::pnm_token(in), "width");
  const std::size_t h = detail::parse_positive(detail::pnm_token(in), "height");
  const std::size_t maxval = detail::parse_positive(detail::pnm_token(in), "maxval");
  if (maxval > 65535) throw io_error(path.string() + ": maxval above 65535");
  const int depth = maxval > 255 ? 16 : 8;
  Image img(w, h);
  if (magic == "P2") {
    for (std::size_t i = 0; i < w * h; ++i) {
      const std::string tok = detail::pnm_token(in);
      if (tok.empty()) throw io_error(path.string() + ": truncated pixel data");
      img[i] = static_cast<double>(std::stol(tok)) / static_cast<double>(maxval);
    }
  } else {
    const std::size_t bytes = depth == 16 ? 2 : 1;
    std::vector<unsigned char> buf(w * h * bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw io_error(path.string() + ": truncated pixel data");
    for (std::size_t i = 0; i < w * h; ++i) {
      const unsigned v = bytes == 2 ? (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1] : buf[i];
      img[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  if (!all_finite(img)) throw io_error(path.string() + ": non-finite pixel");
  return {std::move(img), depth};
}

inline void write_pgm(const std::filesystem::path& path, const Image& img, int bit_depth = 8) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  const int maxval = detail::max_value(bit_depth);
  out << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  std::vector<unsigned char> buf;
  buf.reserve(img.size() * (bit_depth == 16 ? 2 : 1));
  for (double v : img.data()) {
    const std::uint16_t q = detail::quantise(v, maxval);
    if (bit_depth == 16) buf.push_back(static_cast<unsigned char>(q >> 8));
    buf.push_back(static_cast<unsigned char>(q & 0xff));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline LoadedImage read_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!fp) throw io_error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("libpng initialisation failed");
  }
  std::vector<png_bytep> rows;
  std::vector<unsigned char> pixels;
  png_uint_32 w = 0, h = 0;
  int depth = 0, color = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error(path.string() + ": invalid PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_get_IHDR(png, info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);
  if (color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error(path.string() + ": only single-channel grayscale PNG is supported");
  }
  if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 r = 0; r < h; ++r) rows[r] = pixels.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const int out_depth = depth == 16 ? 16 : 8;
  const double maxval = detail::max_value(out_depth);
  Image img(w, h);
  for (png_uint_32 r = 0; r < h; ++r)
    for (png_uint_32 c = 0; c < w; ++c) {
      const unsigned char* p = rows[r] + (out_depth == 16 ? 2 * c : c);
      const unsigned v = out_depth == 16 ? (static_cast<unsigned>(p[0]) << 8) | p[1] : p[0];
      img(r, c) = v / maxval;
    }
  return {std::move(img), out_depth};
}

inline void write_png(const std::filesystem::path& path, const Image& img, int bit_depth = 8) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw io_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw io_error("libpng initialisation failed");
  }
  const int maxval = detail::max_value(bit_depth);
  const std::size_t bpp = bit_depth == 16 ? 2 : 1;
  std::vector<unsigned char> pixels(img.size() * bpp);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint16_t q = detail::quantise(img[i], maxval);
    if (bpp == 2) {
      pixels[2 * i] = static_cast<unsigned char>(q >> 8);
      pixels[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    } else {
      pixels[i] = static_cast<unsigned char>(q);
    }
  }
  std::vector<png_bytep> rows(img.height());
  for (std::size_t r = 0; r < img.height(); ++r) rows[r] = pixels.data() + r * img.width() * bpp;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
               bit_depth == 16 ? 16 : 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------------------
// CSV grids: first line "width,height", then one comma-separated line per row.

inline void write_csv_grid(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  out << img.width() << ',' << img.height() << '\n';
  out << std::setprecision(17);
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      if (c) out << ',';
      out << img(r, c);
    }
    out << '\n';
  }
}

inline Image read_csv_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw io_error(path.string() + ": empty file");
  const auto comma = line.find(',');
  if (comma == std::string::npos) throw io_error(path.string() + ": header must be width,height");
  const std::size_t w = detail::parse_positive(line.substr(0, comma), "width");
  const std::size_t h = detail::parse_positive(line.substr(comma + 1), "height");
  Image img(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    if (!std::getline(in, line)) throw io_error(path.string() + ": missing rows");
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t c = 0; c < w; ++c) {
      if (!std::getline(ss, cell, ',')) throw io_error(path.string() + ": short row");
      try {
        img(r, c) = std::stod(cell);
      } catch (const std::logic_error&) {
        throw io_error(path.string() + ": bad number '" + cell + "'");
      }
    }
  }
  if (!all_finite(img)) throw io_error(path.string() + ": non-finite value");
  return img;
}

/// Dispatch on extension: .pgm, .png, or .csv (grid, no quantisation).
inline LoadedImage read_image(const std::filesystem::path& path) {
  const std::string ext = detail::lower_ext(path);
  if (ext == ".pgm" || ext == ".pnm") return read_pgm(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".csv") return {read_csv_grid(path), 0};
  throw io_error(path.string() + ": unsupported image format (use .pgm, .png or .csv)");
}

inline void write_image(const std::filesystem::path& path, const Image& img, int bit_depth = 8) {
  if (bit_depth != 8 && bit_depth != 16) throw io_error("bit depth must be 8 or 16");
  const std::string ext = detail::lower_ext(path);
  if (ext == ".pgm" || ext == ".pnm") return write_pgm(path, img, bit_depth);
  if (ext == ".png") return write_png(path, img, bit_depth);
  if (ext == ".csv") return write_csv_grid(path, img);
  throw io_error(path.string() + ": unsupported image format (use .pgm, .png or .csv)");
}

// ---------------------------------------------------------------------------
// parameter maps

inline void write_maps(const std::filesystem::path& dir, const ParamMaps& maps) {
  std::filesystem::create_directories(dir);
  Image p(maps.width, maps.height), e1(maps.width, maps.height), theta(maps.width, maps.height),
      m(maps.width, maps.height);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    p[i] = maps.params[i].p;
    e1[i] = maps.weights[i].e1;
    theta[i] = maps.weights[i].theta;
    m[i] = maps.params[i].m;
  }
  write_csv_grid(dir / "p.csv", p);
  write_csv_grid(dir / "e1.csv", e1);
  write_csv_grid(dir / "theta.csv", theta);
  write_csv_grid(dir / "m.csv", m);
}

inline ParamMaps read_maps(const std::filesystem::path& dir) {
  const Image p = read_csv_grid(dir / "p.csv");
  const Image e1 = read_csv_grid(dir / "e1.csv");
  const Image theta = read_csv_grid(dir / "theta.csv");
  const Image m = read_csv_grid(dir / "m.csv");
  if (!p.same_shape(e1) || !p.same_shape(theta) || !p.same_shape(m))
    throw io_error(dir.string() + ": map grids differ in shape");
  ParamMaps maps(p.width(), p.height());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (!(p[i] > 0.0) || !(m[i] > 0.0)) throw io_error(dir.string() + ": p and m must be positive");
    const auto [rho, phi] = polar_from_axis(e1[i], theta[i]);
    maps.set(i, {p[i], phi, rho, m[i]});
  }
  return maps;
}

/// Anisotropy ellipse per pixel on a regular stride, for external plotting.
inline void write_ellipses(const std::filesystem::path& path, const ParamMaps& maps, std::size_t stride) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  if (stride == 0) stride = 1;
  out << "row,col,a,b,theta,eccentricity,p\n" << std::setprecision(17);
  for (std::size_t r = stride / 2; r < maps.height; r += stride)
    for (std::size_t c = stride / 2; c < maps.width; c += stride) {
      const std::size_t i = r * maps.width + c;
      const EllipseGeometry eg = ellipse_geometry(maps.weights[i]);
      out << r << ',' << c << ',' << eg.a << ',' << eg.b << ',' << maps.weights[i].theta << ','
          << eg.eccentricity << ',' << maps.params[i].p << '\n';
    }
}

}  // namespace dtvp::io
