#include "rainflow/flowio.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace rainflow {

std::string to_string(IoErrorKind kind) {
  switch (kind) {
    case IoErrorKind::open_failed: return "open_failed";
    case IoErrorKind::write_failed: return "write_failed";
    case IoErrorKind::unsupported_format: return "unsupported_format";
    case IoErrorKind::bad_header: return "bad_header";
    case IoErrorKind::bad_magic: return "bad_magic";
    case IoErrorKind::truncated: return "truncated";
    case IoErrorKind::corrupt_data: return "corrupt_data";
    case IoErrorKind::size_mismatch: return "size_mismatch";
    case IoErrorKind::dimension_overflow: return "dimension_overflow";
    case IoErrorKind::invalid_value: return "invalid_value";
  }
  return "unknown";
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrorKind::open_failed, "cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(IoErrorKind::open_failed, "error while reading '" + path + "'");
  return bytes;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoErrorKind::write_failed, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError(IoErrorKind::write_failed, "error while writing '" + path + "'");
}

namespace {

void check_dimensions(std::int64_t w, std::int64_t h, const char* what) {
  if (w > kMaxDimension || h > kMaxDimension || w * h > kMaxPixels) {
    throw IoError(IoErrorKind::dimension_overflow,
                  std::string(what) + ": " + std::to_string(w) + "x" + std::to_string(h) +
                      " exceeds the size limit");
  }
}

std::uint16_t quantize(double v, int maxval) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint16_t>(std::lround(c * maxval));
}

double normalize(unsigned k, unsigned maxval) {
  return static_cast<double>(static_cast<float>(k) / static_cast<float>(maxval));
}

// ---- PNG ----

struct PngState {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
  bool truncated = false;
  std::vector<std::uint8_t>* sink = nullptr;
  char message[256] = {};
};

void png_on_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngState*>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof st->message, "%s", msg);
  png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

void png_read_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* st = static_cast<PngState*>(png_get_io_ptr(png));
  if (n > st->bytes.size() - st->pos) {
    st->truncated = true;
    png_error(png, "unexpected end of data");
  }
  std::memcpy(out, st->bytes.data() + st->pos, n);
  st->pos += n;
}

void png_write_memory(png_structp png, png_bytep data, png_size_t n) {
  auto* st = static_cast<PngState*>(png_get_io_ptr(png));
  st->sink->insert(st->sink->end(), data, data + n);
}

void png_flush_memory(png_structp) {}

Image decode_png(std::span<const std::uint8_t> bytes) {
  PngState st;
  st.bytes = bytes;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, png_on_error, png_on_warning);
  if (!png) throw IoError(IoErrorKind::corrupt_data, "png: cannot allocate decoder");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int channels = 0, depth = 0;
  bool header_done = false;
  // Anything declared after this point must be trivially destructible.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    const IoErrorKind kind = st.truncated ? IoErrorKind::truncated
                             : header_done ? IoErrorKind::corrupt_data
                                           : IoErrorKind::bad_header;
    throw IoError(kind, std::string("png: ") + st.message);
  }
  if (!info) png_error(png, "cannot allocate info");
  png_set_read_fn(png, &st, png_read_memory);
  png_set_user_limits(png, 0x7fffffffu, 0x7fffffffu);
  png_set_chunk_malloc_max(png, 64u << 20);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  if (static_cast<std::int64_t>(width) > kMaxDimension ||
      static_cast<std::int64_t>(height) > kMaxDimension ||
      static_cast<std::int64_t>(width) * height > kMaxPixels) {
    png_destroy_read_struct(&png, &info, nullptr);
    check_dimensions(width, height, "png");
  }
  header_done = true;
  const int colour = png_get_color_type(png, info);
  if (colour == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (colour == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (colour & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  if ((channels != 1 && channels != 3) || (depth != 8 && depth != 16)) {
    png_error(png, "unsupported pixel layout");
  }
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  pixels.resize(row_bytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const unsigned maxval = depth == 16 ? 65535u : 255u;
  Image img(static_cast<int>(width), static_cast<int>(height), channels);
  const std::size_t n = img.size();
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned k = depth == 16 ? (unsigned{pixels[2 * i]} << 8) | pixels[2 * i + 1] : pixels[i];
    img[i] = normalize(k, maxval);
  }
  return img;
}

// ---- PNM ----

struct PnmCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < bytes.size()) {
      const std::uint8_t c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n' && bytes[pos] != '\r') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::int64_t number(const char* field) {
    skip_space();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
      throw IoError(IoErrorKind::bad_header, std::string("pnm: missing or malformed ") + field);
    }
    std::int64_t v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (std::int64_t{1} << 40)) {
        throw IoError(IoErrorKind::dimension_overflow, std::string("pnm: ") + field + " too large");
      }
      ++pos;
    }
    return v;
  }
};

Image decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw IoError(IoErrorKind::bad_header, "pnm: header too short");
  const int channels = bytes[1] == '6' ? 3 : 1;
  PnmCursor cur{bytes, 2};
  const std::int64_t w = cur.number("width");
  const std::int64_t h = cur.number("height");
  const std::int64_t maxval = cur.number("maxval");
  if (w < 1 || h < 1) throw IoError(IoErrorKind::bad_header, "pnm: zero width or height");
  if (maxval < 1 || maxval > 65535) throw IoError(IoErrorKind::bad_header, "pnm: maxval out of range");
  check_dimensions(w, h, "pnm");
  if (cur.pos >= bytes.size()) throw IoError(IoErrorKind::bad_header, "pnm: header not terminated");
  const std::uint8_t sep = bytes[cur.pos];
  if (sep != ' ' && sep != '\t' && sep != '\n' && sep != '\r') {
    throw IoError(IoErrorKind::bad_header, "pnm: expected whitespace after maxval");
  }
  ++cur.pos;
  const int bps = maxval < 256 ? 1 : 2;
  const std::size_t n = static_cast<std::size_t>(w * h * channels);
  const std::size_t need = n * bps;
  if (bytes.size() - cur.pos < need) throw IoError(IoErrorKind::truncated, "pnm: pixel data truncated");
  Image img(static_cast<int>(w), static_cast<int>(h), channels);
  const std::uint8_t* p = bytes.data() + cur.pos;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned k = bps == 2 ? (unsigned{p[2 * i]} << 8) | p[2 * i + 1] : p[i];
    if (k > maxval) throw IoError(IoErrorKind::invalid_value, "pnm: sample exceeds maxval");
    img[i] = normalize(k, static_cast<unsigned>(maxval));
  }
  return img;
}

std::string extension_of(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

void check_bit_depth(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw IoError(IoErrorKind::unsupported_format, "bit depth must be 8 or 16");
  }
}

void check_writable(const Image& img) {
  if (img.empty()) throw IoError(IoErrorKind::invalid_value, "cannot encode an empty image");
  if (!img.all_finite()) throw IoError(IoErrorKind::invalid_value, "cannot encode non-finite samples");
}

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::equal(bytes.begin(), bytes.begin() + 8, kPngSignature)) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes);
  }
  if (bytes.size() < 8 && bytes.size() >= 1 && (bytes[0] == 0x89 || bytes[0] == 'P')) {
    throw IoError(IoErrorKind::bad_header, "image header too short");
  }
  throw IoError(IoErrorKind::unsupported_format, "not a PNG or binary PGM/PPM file");
}

Image read_image(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const IoError& e) {
    throw IoError(e.kind(), path + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const Image& img, int bit_depth) {
  check_bit_depth(bit_depth);
  check_writable(img);
  if (img.channels() != 1 && img.channels() != 3) {
    throw IoError(IoErrorKind::unsupported_format, "png: only 1 or 3 channels are supported");
  }
  const int maxval = bit_depth == 16 ? 65535 : 255;
  const int bps = bit_depth / 8;
  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * img.channels() * bps;
  std::vector<std::uint8_t> pixels(row_bytes * img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint16_t k = quantize(img[i], maxval);
    if (bps == 2) {
      pixels[2 * i] = static_cast<std::uint8_t>(k >> 8);
      pixels[2 * i + 1] = static_cast<std::uint8_t>(k & 0xff);
    } else {
      pixels[i] = static_cast<std::uint8_t>(k);
    }
  }
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y) rows[y] = pixels.data() + y * row_bytes;

  std::vector<std::uint8_t> out;
  PngState st;
  st.sink = &out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st, png_on_error, png_on_warning);
  if (!png) throw IoError(IoErrorKind::write_failed, "png: cannot allocate encoder");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(IoErrorKind::write_failed, std::string("png: ") + st.message);
  }
  if (!info) png_error(png, "cannot allocate info");
  png_set_write_fn(png, &st, png_write_memory, png_flush_memory);
  png_set_IHDR(png, info, img.width(), img.height(), bit_depth,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<std::uint8_t> encode_pnm(const Image& img, int bit_depth) {
  check_bit_depth(bit_depth);
  check_writable(img);
  if (img.channels() != 1 && img.channels() != 3) {
    throw IoError(IoErrorKind::unsupported_format, "pnm: only 1 or 3 channels are supported");
  }
  const int maxval = bit_depth == 16 ? 65535 : 255;
  const std::string header = std::string(img.channels() == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(img.width()) + " " + std::to_string(img.height()) +
                             "\n" + std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.size() * (bit_depth / 8));
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint16_t k = quantize(img[i], maxval);
    if (bit_depth == 16) out.push_back(static_cast<std::uint8_t>(k >> 8));
    out.push_back(static_cast<std::uint8_t>(k & 0xff));
  }
  return out;
}

void write_image(const Image& img, const std::string& path, int bit_depth) {
  const std::string ext = extension_of(path);
  if (ext == ".png") {
    write_file(path, encode_png(img, bit_depth));
  } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    write_file(path, encode_pnm(img, bit_depth));
  } else {
    throw IoError(IoErrorKind::unsupported_format, path + ": unknown image extension '" + ext + "'");
  }
}

FlowField decode_flo(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw IoError(IoErrorKind::truncated, "flo: file too short for magic");
  if (std::memcmp(bytes.data(), "PIEH", 4) != 0) throw IoError(IoErrorKind::bad_magic, "flo: bad magic");
  if (bytes.size() < 12) throw IoError(IoErrorKind::truncated, "flo: header truncated");
  const auto w = static_cast<std::int32_t>(get_u32(bytes.data() + 4));
  const auto h = static_cast<std::int32_t>(get_u32(bytes.data() + 8));
  if (w < 1 || h < 1) throw IoError(IoErrorKind::bad_header, "flo: non-positive dimensions");
  check_dimensions(w, h, "flo");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const std::size_t payload = bytes.size() - 12;
  if (payload < 8 * n) throw IoError(IoErrorKind::truncated, "flo: sample data truncated");
  if (payload > 8 * n) throw IoError(IoErrorKind::size_mismatch, "flo: trailing bytes after samples");
  std::vector<double> u(n), v(n);
  const std::uint8_t* p = bytes.data() + 12;
  for (std::size_t i = 0; i < n; ++i) {
    const float fu = std::bit_cast<float>(get_u32(p + 8 * i));
    const float fv = std::bit_cast<float>(get_u32(p + 8 * i + 4));
    if (!std::isfinite(fu) || !std::isfinite(fv)) {
      throw IoError(IoErrorKind::invalid_value, "flo: non-finite flow sample");
    }
    u[i] = fu;
    v[i] = fv;
  }
  return FlowField(w, h, std::move(u), std::move(v));
}

std::vector<std::uint8_t> encode_flo(const FlowField& flow) {
  if (flow.empty()) throw IoError(IoErrorKind::invalid_value, "flo: cannot encode an empty field");
  if (!flow.all_finite()) throw IoError(IoErrorKind::invalid_value, "flo: non-finite flow sample");
  std::vector<std::uint8_t> out = {'P', 'I', 'E', 'H'};
  out.reserve(12 + 8 * flow.pixel_count());
  put_u32(out, static_cast<std::uint32_t>(flow.width()));
  put_u32(out, static_cast<std::uint32_t>(flow.height()));
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(flow.u()[i])));
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(flow.v()[i])));
  }
  return out;
}

FlowField read_flo(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return decode_flo(bytes);
  } catch (const IoError& e) {
    throw IoError(e.kind(), path + ": " + e.what());
  }
}

void write_flo(const FlowField& flow, const std::string& path) { write_file(path, encode_flo(flow)); }

Image known_mask(const FlowField& flow) {
  Image mask(flow.width(), flow.height(), 1);
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    mask[i] = (std::abs(flow.u()[i]) <= kUnknownFlow && std::abs(flow.v()[i]) <= kUnknownFlow) ? 1.0 : 0.0;
  }
  return mask;
}

namespace {

// Colour wheel segments: red-yellow, yellow-green, green-cyan, cyan-blue,
// blue-magenta, magenta-red.
std::vector<std::array<double, 3>> colour_wheel() {
  constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
  std::vector<std::array<double, 3>> wheel;
  for (int i = 0; i < RY; ++i) wheel.push_back({1.0, static_cast<double>(i) / RY, 0.0});
  for (int i = 0; i < YG; ++i) wheel.push_back({1.0 - static_cast<double>(i) / YG, 1.0, 0.0});
  for (int i = 0; i < GC; ++i) wheel.push_back({0.0, 1.0, static_cast<double>(i) / GC});
  for (int i = 0; i < CB; ++i) wheel.push_back({0.0, 1.0 - static_cast<double>(i) / CB, 1.0});
  for (int i = 0; i < BM; ++i) wheel.push_back({static_cast<double>(i) / BM, 0.0, 1.0});
  for (int i = 0; i < MR; ++i) wheel.push_back({1.0, 0.0, 1.0 - static_cast<double>(i) / MR});
  return wheel;
}

}  // namespace

Image flow_to_color(const FlowField& flow, double max_magnitude) {
  if (!flow.all_finite()) throw NumericalError("flow_to_color: flow is not finite");
  static const std::vector<std::array<double, 3>> wheel = colour_wheel();
  const int ncols = static_cast<int>(wheel.size());
  const Image known = known_mask(flow);
  double scale = max_magnitude;
  if (!(scale > 0.0)) {
    scale = 0.0;
    for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
      if (known[i] != 0.0) scale = std::max(scale, std::hypot(flow.u()[i], flow.v()[i]));
    }
  }
  Image out(flow.width(), flow.height(), 3);
  for (std::size_t i = 0; i < flow.pixel_count(); ++i) {
    if (known[i] == 0.0) continue;
    const double fx = scale > 0.0 ? flow.u()[i] / scale : 0.0;
    const double fy = scale > 0.0 ? flow.v()[i] / scale : 0.0;
    const double rad = std::hypot(fx, fy);
    const double a = std::atan2(-fy, -fx) / std::numbers::pi;
    const double fk = (a + 1.0) / 2.0 * (ncols - 1);
    const int k0 = std::clamp(static_cast<int>(std::floor(fk)), 0, ncols - 1);
    const int k1 = (k0 + 1) % ncols;
    const double f = fk - k0;
    for (int c = 0; c < 3; ++c) {
      const double col = (1.0 - f) * wheel[k0][c] + f * wheel[k1][c];
      out[3 * i + c] = rad <= 1.0 ? 1.0 - rad * (1.0 - col) : 0.75 * col;
    }
  }
  return out;
}

}  // namespace rainflow
