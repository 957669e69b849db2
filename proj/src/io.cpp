#include "vpal/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace vpal {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

void image_dims(const GridSignal& img, std::size_t& c, std::size_t& h, std::size_t& w) {
  if (img.rank() == 2) {
    c = 1, h = img.shape[0], w = img.shape[1];
  } else if (img.rank() == 3 && img.shape[0] == 3) {
    c = 3, h = img.shape[1], w = img.shape[2];
  } else {
    throw ShapeError("image must be [h, w] or [3, h, w], got " + to_string(img.shape));
  }
}

unsigned quantize(double v, unsigned maxval) {
  return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
}

void skip_ws_and_comments(std::istream& is) {
  for (;;) {
    int ch = is.peek();
    if (ch == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(ch)) {
      is.get();
    } else {
      return;
    }
  }
}

}  // namespace

namespace {

GridSignal parse_pgm(std::istream& is, const std::string& name) {
  std::string magic;
  is >> magic;
  if (magic != "P5") throw IoError(name + ": only binary PGM (P5) is supported");
  std::size_t w = 0, h = 0;
  unsigned maxval = 0;
  skip_ws_and_comments(is);
  is >> w;
  skip_ws_and_comments(is);
  is >> h;
  skip_ws_and_comments(is);
  is >> maxval;
  is.get();
  if (!is || w == 0 || h == 0 || maxval == 0 || maxval > 65535)
    throw IoError(name + ": malformed PGM header");
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(w * h * bpp);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw IoError(name + ": truncated PGM data");
  GridSignal img({h, w});
  for (std::size_t i = 0; i < w * h; ++i) {
    const unsigned v = bpp == 2 ? (raw[2 * i] << 8 | raw[2 * i + 1]) : raw[i];
    img[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

}  // namespace

GridSignal read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return parse_pgm(is, path.string());
}

GridSignal decode_pgm(std::span<const unsigned char> bytes) {
  std::istringstream is(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  return parse_pgm(is, "embedded PGM");
}

void write_pgm(const std::filesystem::path& path, const GridSignal& image, int bit_depth) {
  std::size_t c, h, w;
  image_dims(image, c, h, w);
  if (c != 1) throw ShapeError("write_pgm: PGM holds a single channel");
  if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("write_pgm: depth 8 or 16");
  const unsigned maxval = bit_depth == 8 ? 255 : 65535;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string());
  os << "P5\n" << w << ' ' << h << '\n' << maxval << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(w * h * (bit_depth / 8));
  for (double v : image.data) {
    const unsigned q = quantize(v, maxval);
    if (bit_depth == 16) raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q & 0xff));
  }
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

GridSignal read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw IoError(path.string() + ": " + img.message);
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  // keep the stored sample depth: asking libpng for the other one applies a
  // gamma conversion
  const bool wide = (img.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  img.format = (color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) | (wide ? PNG_FORMAT_FLAG_LINEAR : 0);
  const std::size_t h = img.height, w = img.width, c = color ? 3 : 1;
  std::vector<double> samples(h * w * c);
  auto finish = [&](auto* buf) {
    if (!png_image_finish_read(&img, nullptr, buf, 0, nullptr)) {
      png_image_free(&img);
      throw IoError(path.string() + ": " + img.message);
    }
  };
  if (wide) {
    std::vector<png_uint_16> buf(samples.size());
    finish(buf.data());
    for (std::size_t i = 0; i < buf.size(); ++i) samples[i] = buf[i] / 65535.0;
  } else {
    std::vector<png_byte> buf(samples.size());
    finish(buf.data());
    for (std::size_t i = 0; i < buf.size(); ++i) samples[i] = buf[i] / 255.0;
  }
  if (c == 1) {
    GridSignal out({h, w});
    out.data = std::move(samples);
    return out;
  }
  GridSignal out({3, h, w});
  for (std::size_t i = 0; i < h * w; ++i)
    for (std::size_t ch = 0; ch < 3; ++ch) out[ch * h * w + i] = samples[3 * i + ch];
  return out;
}

void write_png(const std::filesystem::path& path, const GridSignal& image, int bit_depth) {
  std::size_t c, h, w;
  image_dims(image, c, h, w);
  if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("write_png: depth 8 or 16");
  // libpng's simplified API treats 16-bit data as linear; use the classic
  // writer to keep the samples unmodified.
  File f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: write failed for " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const unsigned maxval = bit_depth == 8 ? 255 : 65535;
  const std::size_t bytes = static_cast<std::size_t>(bit_depth / 8);
  std::vector<unsigned char> row(w * c * bytes);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const unsigned q = quantize(image[ch * h * w + i * w + j], maxval);
        unsigned char* p = &row[(j * c + ch) * bytes];
        if (bytes == 2) {
          p[0] = static_cast<unsigned char>(q >> 8);
          p[1] = static_cast<unsigned char>(q & 0xff);
        } else {
          p[0] = static_cast<unsigned char>(q);
        }
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GridSignal read_image(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return read_png(path);
  throw IoError(path.string() + ": unsupported image type (expected .pgm or .png)");
}

void write_csv(const std::filesystem::path& path, const GridSignal& signal,
               const std::string& header) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string());
  os.precision(17);
  os << header << '\n';
  if (signal.rank() == 2) {
    const std::size_t h = signal.shape[0], w = signal.shape[1];
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) os << (j ? "," : "") << signal[i * w + j];
      os << '\n';
    }
  } else {
    for (double v : signal.data) os << v << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string());
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace vpal
