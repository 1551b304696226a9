#include "pmw/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#ifdef PMW_HAVE_PNG
#include <png.h>
#endif
#ifdef PMW_HAVE_JPEG
#include <csetjmp>
#include <jpeglib.h>
#endif

namespace pmw {

namespace {

int ppm_token(std::istream& in) {
  // skips whitespace and '#' comments, returns the next integer
  char c;
  while (in.get(c)) {
    if (c == '#') {
      while (in.get(c) && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) {
      in.unget();
      break;
    }
  }
  int v;
  if (!(in >> v)) throw DataError("ppm: malformed header");
  return v;
}

}  // namespace

Image8 read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  char m0, m1;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != 'P' || m1 != '6') {
    throw DataError("'" + path.string() + "' is not a P6 ppm");
  }
  Image8 img;
  img.width = ppm_token(in);
  img.height = ppm_token(in);
  const int maxval = ppm_token(in);
  if (img.width <= 0 || img.height <= 0 || maxval != 255) {
    throw DataError("'" + path.string() + "': unsupported ppm header");
  }
  in.get();  // single whitespace after maxval
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height * 3;
  img.rgb.resize(n);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw DataError("'" + path.string() + "': truncated ppm pixel data");
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image8& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
  if (!out) throw DataError("short write to '" + path.string() + "'");
}

TensorF read_raw_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kRawTensorMagic, 6) != 0) {
    throw DataError("'" + path.string() + "' is not a raw tensor dump");
  }
  std::uint8_t dtype;
  in.read(reinterpret_cast<char*>(&dtype), 1);
  if (!in || dtype != 0) {
    throw DataError("'" + path.string() + "': unsupported raw dtype");
  }
  std::uint32_t rank;
  in.read(reinterpret_cast<char*>(&rank), 4);
  if (!in || rank > 8) throw DataError("'" + path.string() + "': bad raw rank");
  std::vector<int> shape(rank);
  for (auto& d : shape) {
    std::uint32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw DataError("'" + path.string() + "': truncated raw dims");
    d = static_cast<int>(v);
  }
  const std::int64_t numel = shape_numel(shape);
  std::vector<float> vals(static_cast<std::size_t>(numel));
  in.read(reinterpret_cast<char*>(vals.data()),
          static_cast<std::streamsize>(vals.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != vals.size() * sizeof(float)) {
    throw DataError("'" + path.string() + "': truncated raw values");
  }
  return TensorF(shape, std::move(vals));
}

void write_raw_tensor(const std::filesystem::path& path, const TensorF& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(kRawTensorMagic, 6);
  const std::uint8_t dtype = 0;
  out.write(reinterpret_cast<const char*>(&dtype), 1);
  const std::uint32_t rank = static_cast<std::uint32_t>(t.rank());
  out.write(reinterpret_cast<const char*>(&rank), 4);
  for (int d : t.shape()) {
    const std::uint32_t v = static_cast<std::uint32_t>(d);
    out.write(reinterpret_cast<const char*>(&v), 4);
  }
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
  if (!out) throw DataError("short write to '" + path.string() + "'");
}

#ifdef PMW_HAVE_PNG
namespace {

Image8 read_png(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw DataError("cannot open '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("png: init failure");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw DataError("'" + path.string() + "': png decode error");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  Image8 img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3;
  }
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

}  // namespace
#endif  // PMW_HAVE_PNG

#ifdef PMW_HAVE_JPEG
namespace {

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

Image8 read_jpeg(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw DataError("cannot open '" + path.string() + "'");
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::fclose(fp);
    throw DataError("'" + path.string() + "': jpeg decode error");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, fp);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  Image8 img;
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.rgb.data() +
                   static_cast<std::size_t>(cinfo.output_scanline) * img.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  std::fclose(fp);
  return img;
}

}  // namespace
#endif  // PMW_HAVE_JPEG

namespace {

enum class Format { Ppm, Raw, Png, Jpeg, Unknown };

Format sniff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return Format::Unknown;
  unsigned char head[8] = {};
  in.read(reinterpret_cast<char*>(head), 8);
  if (in.gcount() < 2) return Format::Unknown;
  if (head[0] == 'P' && head[1] == '6') return Format::Ppm;
  if (std::memcmp(head, kRawTensorMagic, 6) == 0) return Format::Raw;
  if (head[0] == 0x89 && head[1] == 'P' && head[2] == 'N' && head[3] == 'G') {
    return Format::Png;
  }
  if (head[0] == 0xFF && head[1] == 0xD8) return Format::Jpeg;
  return Format::Unknown;
}

}  // namespace

bool probe_image(const std::filesystem::path& path) {
  switch (sniff(path)) {
    case Format::Ppm:
    case Format::Raw:
      return true;
    case Format::Png:
#ifdef PMW_HAVE_PNG
      return true;
#else
      return false;
#endif
    case Format::Jpeg:
#ifdef PMW_HAVE_JPEG
      return true;
#else
      return false;
#endif
    default:
      return false;
  }
}

TensorF image_to_tensor(const Image8& img) {
  TensorF t({3, img.height, img.width});
  const std::int64_t plane = static_cast<std::int64_t>(img.height) * img.width;
  for (std::int64_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      t[c * plane + i] =
          static_cast<float>(img.rgb[static_cast<std::size_t>(i * 3 + c)]) / 255.0f;
    }
  }
  return t;
}

Image8 tensor_to_image(const TensorF& chw) {
  if (chw.rank() != 3 || chw.dim(0) != 3) {
    throw ShapeError("tensor_to_image: expected [3,H,W], got " +
                     shape_str(chw.shape()));
  }
  Image8 img;
  img.height = chw.dim(1);
  img.width = chw.dim(2);
  img.rgb.resize(static_cast<std::size_t>(img.height) * img.width * 3);
  const std::int64_t plane = static_cast<std::int64_t>(img.height) * img.width;
  for (std::int64_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(chw[c * plane + i], 0.0f, 1.0f);
      img.rgb[static_cast<std::size_t>(i * 3 + c)] =
          static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return img;
}

TensorF resize_bilinear(const TensorF& chw, int out_h, int out_w) {
  if (chw.rank() != 3) {
    throw ShapeError("resize_bilinear: expected [C,H,W], got " +
                     shape_str(chw.shape()));
  }
  const int C = chw.dim(0), H = chw.dim(1), W = chw.dim(2);
  if (out_h == H && out_w == W) return chw;
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: bad target size");

  TensorF out({C, out_h, out_w});
  const float sy = static_cast<float>(H) / static_cast<float>(out_h);
  const float sx = static_cast<float>(W) / static_cast<float>(out_w);
  for (int oy = 0; oy < out_h; ++oy) {
    float fy = (static_cast<float>(oy) + 0.5f) * sy - 0.5f;
    fy = std::clamp(fy, 0.0f, static_cast<float>(H - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, H - 1);
    const float wy = fy - static_cast<float>(y0);
    for (int ox = 0; ox < out_w; ++ox) {
      float fx = (static_cast<float>(ox) + 0.5f) * sx - 0.5f;
      fx = std::clamp(fx, 0.0f, static_cast<float>(W - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, W - 1);
      const float wx = fx - static_cast<float>(x0);
      for (int c = 0; c < C; ++c) {
        const float v00 = chw.at(c, y0, x0), v01 = chw.at(c, y0, x1);
        const float v10 = chw.at(c, y1, x0), v11 = chw.at(c, y1, x1);
        const float top = v00 + (v01 - v00) * wx;
        const float bot = v10 + (v11 - v10) * wx;
        out.at(c, oy, ox) = top + (bot - top) * wy;
      }
    }
  }
  return out;
}

TensorF load_image(const std::filesystem::path& path, int target_h,
                   int target_w) {
  TensorF t;
  switch (sniff(path)) {
    case Format::Ppm:
      t = image_to_tensor(read_ppm(path));
      break;
    case Format::Raw:
      t = read_raw_tensor(path);
      if (t.rank() != 3 || t.dim(0) != 3) {
        throw DataError("'" + path.string() + "': raw image must be [3,H,W], got " +
                        shape_str(t.shape()));
      }
      break;
    case Format::Png:
#ifdef PMW_HAVE_PNG
      t = image_to_tensor(read_png(path));
      break;
#else
      throw DataError("'" + path.string() + "': png support not built in");
#endif
    case Format::Jpeg:
#ifdef PMW_HAVE_JPEG
      t = image_to_tensor(read_jpeg(path));
      break;
#else
      throw DataError("'" + path.string() + "': jpeg support not built in");
#endif
    default:
      throw DataError("'" + path.string() + "': unrecognized image format");
  }
  return resize_bilinear(t, target_h, target_w);
}

}  // namespace pmw
