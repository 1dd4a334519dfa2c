#include "feast/image.hpp"

#include "feast/types.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cstdio>
#include <csetjmp>
#include <cstring>
#include <fstream>

namespace feast {

RasterImage RasterImage::filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.pixels.resize(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        img.pixels[i] = r;
        img.pixels[i + 1] = g;
        img.pixels[i + 2] = b;
    }
    return img;
}

namespace {

RasterImage load_png(const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.string().c_str()))
        throw InputError("png read failed: " + path.string() + ": " + png.message);
    png.format = PNG_FORMAT_RGB;

    RasterImage img;
    img.width = static_cast<int>(png.width);
    img.height = static_cast<int>(png.height);
    img.pixels.resize(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
        std::string message = png.message;
        png_image_free(&png);
        throw InputError("png decode failed: " + path.string() + ": " + message);
    }
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr base;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

RasterImage load_jpeg(const std::filesystem::path& path) {
    std::FILE* file = std::fopen(path.string().c_str(), "rb");
    if (!file) throw InputError("cannot open file: " + path.string());

    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;

    RasterImage img;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        std::fclose(file);
        throw InputError("jpeg decode failed: " + path.string());
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    img.width = static_cast<int>(cinfo.output_width);
    img.height = static_cast<int>(cinfo.output_height);
    img.pixels.resize(3 * static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.pixels.data() +
                       3 * static_cast<std::size_t>(cinfo.output_scanline) *
                           static_cast<std::size_t>(img.width);
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    std::fclose(file);
    return img;
}

}  // namespace

RasterImage load_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw InputError("cannot open file: " + path.string());
    unsigned char magic[4] = {};
    probe.read(reinterpret_cast<char*>(magic), 4);
    probe.close();

    if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
        return load_png(path);
    if (magic[0] == 0xFF && magic[1] == 0xD8) return load_jpeg(path);
    throw InputError("unsupported image format (expected PNG or JPEG): " + path.string());
}

void save_png(const RasterImage& image, const std::filesystem::path& path) {
    if (image.width < 1 || image.height < 1) throw InputError("save_png: empty image");
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.string().c_str(), 0, image.pixels.data(), 0,
                                 nullptr))
        throw InputError("png write failed: " + path.string() + ": " + png.message);
}

}  // namespace feast
