#include "bcpflood/geotiff.hpp"
#include "bcpflood/errors.hpp"

#include <tiffio.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <mutex>
#include <string>

namespace bcpflood {
namespace {

constexpr ttag_t kModelPixelScale = 33550;
constexpr ttag_t kModelTiepoint = 33922;
constexpr ttag_t kModelTransformation = 34264;
constexpr ttag_t kGeoKeyDirectory = 34735;
constexpr ttag_t kGeoDoubleParams = 34736;
constexpr ttag_t kGeoAsciiParams = 34737;
constexpr ttag_t kGdalNoData = 42113;

constexpr std::uint16_t kModelTypeKey = 1024;
constexpr std::uint16_t kRasterTypeKey = 1025;
constexpr std::uint16_t kGeographicTypeKey = 2048;
constexpr std::uint16_t kProjectedTypeKey = 3072;

const TIFFFieldInfo kGeoFields[] = {
    {kModelPixelScale, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelPixelScaleTag")},
    {kModelTiepoint, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1, const_cast<char*>("ModelTiepointTag")},
    {kModelTransformation, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("ModelTransformationTag")},
    {kGeoKeyDirectory, -1, -1, TIFF_SHORT, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("GeoKeyDirectoryTag")},
    {kGeoDoubleParams, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1,
     const_cast<char*>("GeoDoubleParamsTag")},
    {kGeoAsciiParams, -1, -1, TIFF_ASCII, FIELD_CUSTOM, 1, 0, const_cast<char*>("GeoASCIIParamsTag")},
    {kGdalNoData, -1, -1, TIFF_ASCII, FIELD_CUSTOM, 1, 0, const_cast<char*>("GDALNoDataValue")},
};

TIFFExtendProc g_parent_extender = nullptr;

void geotiff_extender(TIFF* tif) {
    for (const TIFFFieldInfo& info : kGeoFields) {
        if (TIFFFindField(tif, info.field_tag, TIFF_ANY) == nullptr) {
            TIFFMergeFieldInfo(tif, &info, 1);
        }
    }
    if (g_parent_extender != nullptr) {
        g_parent_extender(tif);
    }
}

thread_local std::string t_last_error;

void error_handler(const char* module, const char* fmt, va_list ap) {
    std::array<char, 512> buffer{};
    std::vsnprintf(buffer.data(), buffer.size(), fmt, ap);
    t_last_error = std::string(module != nullptr ? module : "libtiff") + ": " + buffer.data();
}

void install_handlers() {
    static std::once_flag once;
    std::call_once(once, [] {
        g_parent_extender = TIFFSetTagExtender(geotiff_extender);
        TIFFSetWarningHandler(nullptr);
        TIFFSetErrorHandler(error_handler);
    });
}

struct TiffCloser {
    void operator()(TIFF* tif) const { TIFFClose(tif); }
};
using TiffHandle = std::unique_ptr<TIFF, TiffCloser>;

TiffHandle open_tiff(const std::filesystem::path& path, const char* mode) {
    install_handlers();
    t_last_error.clear();
    TIFF* tif = TIFFOpen(path.string().c_str(), mode);
    if (tif == nullptr) {
        throw InputError("cannot open TIFF '" + path.string() + "'" +
                         (t_last_error.empty() ? "" : " (" + t_last_error + ")"));
    }
    return TiffHandle(tif);
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw InputError("GeoTIFF '" + path.string() + "': " + what +
                     (t_last_error.empty() ? "" : " (" + t_last_error + ")"));
}

int epsg_code(const std::string& crs) {
    if (crs.empty()) {
        return 0;
    }
    if (crs.rfind("EPSG:", 0) != 0) {
        throw GeometryError("unsupported CRS identifier '" + crs + "' (expected EPSG:<code>)");
    }
    char* end = nullptr;
    const long code = std::strtol(crs.c_str() + 5, &end, 10);
    if (end == crs.c_str() + 5 || *end != '\0' || code <= 0 || code > 65535) {
        throw GeometryError("invalid EPSG code in '" + crs + "'");
    }
    return static_cast<int>(code);
}

void write_georeference(TIFF* tif, const Georeference& georef, std::optional<std::string> nodata) {
    const auto& t = georef.transform;
    if (t[2] != 0.0 || t[4] != 0.0) {
        throw GeometryError("only north-up georeferences can be written");
    }
    const std::array<double, 3> scale{t[1], -t[5], 0.0};
    const std::array<double, 6> tiepoint{0.0, 0.0, 0.0, t[0], t[3], 0.0};
    TIFFSetField(tif, kModelPixelScale, 3, scale.data());
    TIFFSetField(tif, kModelTiepoint, 6, tiepoint.data());

    const int code = epsg_code(georef.crs);
    if (code != 0) {
        const bool geographic = code >= 4000 && code < 5000;
        const std::array<std::uint16_t, 16> keys{
            1, 1, 0, 3,  // version, revision, minor, key count
            kModelTypeKey, 0, 1, static_cast<std::uint16_t>(geographic ? 2 : 1),
            kRasterTypeKey, 0, 1, 1,  // PixelIsArea
            geographic ? kGeographicTypeKey : kProjectedTypeKey, 0, 1,
            static_cast<std::uint16_t>(code)};
        TIFFSetField(tif, kGeoKeyDirectory, static_cast<int>(keys.size()), keys.data());
    }
    if (nodata) {
        TIFFSetField(tif, kGdalNoData, nodata->c_str());
    }
}

void set_basic_tags(TIFF* tif, std::size_t rows, std::size_t cols, int bands, int bits,
                    int sample_format) {
    TIFFSetField(tif, TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(cols));
    TIFFSetField(tif, TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(rows));
    TIFFSetField(tif, TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(bands));
    TIFFSetField(tif, TIFFTAG_BITSPERSAMPLE, static_cast<std::uint16_t>(bits));
    TIFFSetField(tif, TIFFTAG_SAMPLEFORMAT, static_cast<std::uint16_t>(sample_format));
    TIFFSetField(tif, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
    TIFFSetField(tif, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
    TIFFSetField(tif, TIFFTAG_COMPRESSION, COMPRESSION_NONE);
    TIFFSetField(tif, TIFFTAG_ROWSPERSTRIP, TIFFDefaultStripSize(tif, 0));
    if (bands > 1) {
        std::vector<std::uint16_t> extra(static_cast<std::size_t>(bands - 1), EXTRASAMPLE_UNSPECIFIED);
        TIFFSetField(tif, TIFFTAG_EXTRASAMPLES, static_cast<std::uint16_t>(extra.size()), extra.data());
    }
}

double sample_at(const unsigned char* buffer, std::size_t index, int bits, int format) {
    switch (format) {
        case SAMPLEFORMAT_IEEEFP:
            if (bits == 32) {
                float v;
                std::memcpy(&v, buffer + index * 4, 4);
                return v;
            }
            if (bits == 64) {
                double v;
                std::memcpy(&v, buffer + index * 8, 8);
                return v;
            }
            break;
        case SAMPLEFORMAT_INT:
            if (bits == 8) {
                return static_cast<double>(reinterpret_cast<const std::int8_t*>(buffer)[index]);
            }
            if (bits == 16) {
                std::int16_t v;
                std::memcpy(&v, buffer + index * 2, 2);
                return v;
            }
            if (bits == 32) {
                std::int32_t v;
                std::memcpy(&v, buffer + index * 4, 4);
                return v;
            }
            break;
        default:
            if (bits == 8) {
                return buffer[index];
            }
            if (bits == 16) {
                std::uint16_t v;
                std::memcpy(&v, buffer + index * 2, 2);
                return v;
            }
            if (bits == 32) {
                std::uint32_t v;
                std::memcpy(&v, buffer + index * 4, 4);
                return v;
            }
            break;
    }
    throw InputError("unsupported TIFF sample type (" + std::to_string(bits) + " bits, format " +
                     std::to_string(format) + ")");
}

Georeference read_georeference(TIFF* tif) {
    Georeference georef;
    std::uint16_t count = 0;
    double* values = nullptr;
    if (TIFFGetField(tif, kModelTransformation, &count, &values) == 1 && count >= 16) {
        georef.transform = {values[3], values[0], values[1], values[7], values[4], values[5]};
    } else {
        double* scale = nullptr;
        double* tie = nullptr;
        std::uint16_t scale_count = 0;
        std::uint16_t tie_count = 0;
        if (TIFFGetField(tif, kModelPixelScale, &scale_count, &scale) == 1 && scale_count >= 2 &&
            TIFFGetField(tif, kModelTiepoint, &tie_count, &tie) == 1 && tie_count >= 6) {
            georef.transform = {tie[3] - tie[0] * scale[0], scale[0], 0.0,
                                tie[4] + tie[1] * scale[1], 0.0, -scale[1]};
        }
    }
    std::uint16_t key_count = 0;
    std::uint16_t* keys = nullptr;
    if (TIFFGetField(tif, kGeoKeyDirectory, &key_count, &keys) == 1 && key_count >= 4) {
        const std::size_t n = keys[3];
        for (std::size_t k = 0; k < n && 4 * (k + 2) <= key_count; ++k) {
            const std::uint16_t* entry = keys + 4 * (k + 1);
            if ((entry[0] == kProjectedTypeKey || entry[0] == kGeographicTypeKey) && entry[1] == 0 &&
                entry[3] != 0 && entry[3] != 32767) {
                georef.crs = "EPSG:" + std::to_string(entry[3]);
                if (entry[0] == kProjectedTypeKey) {
                    break;
                }
            }
        }
    }
    return georef;
}

}  // namespace

RasterFile read_geotiff(const std::filesystem::path& path) {
    TiffHandle handle = open_tiff(path, "r");
    TIFF* tif = handle.get();

    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint16_t spp = 1;
    std::uint16_t bits = 8;
    std::uint16_t format = SAMPLEFORMAT_UINT;
    std::uint16_t planar = PLANARCONFIG_CONTIG;
    TIFFGetField(tif, TIFFTAG_IMAGEWIDTH, &width);
    TIFFGetField(tif, TIFFTAG_IMAGELENGTH, &height);
    TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(tif, TIFFTAG_BITSPERSAMPLE, &bits);
    TIFFGetFieldDefaulted(tif, TIFFTAG_SAMPLEFORMAT, &format);
    TIFFGetFieldDefaulted(tif, TIFFTAG_PLANARCONFIG, &planar);
    if (width == 0 || height == 0) {
        fail(path, "empty image");
    }

    RasterFile file;
    file.bits_per_sample = bits;
    file.floating_point = format == SAMPLEFORMAT_IEEEFP;
    file.georef = read_georeference(tif);
    char* nodata_text = nullptr;
    if (TIFFGetField(tif, kGdalNoData, &nodata_text) == 1 && nodata_text != nullptr) {
        file.nodata = std::strtod(nodata_text, nullptr);
    }
    file.bands.assign(spp, Grid<double>(height, width));

    auto store = [&](std::size_t band, std::size_t r, std::size_t c, double v) {
        if (std::isnan(v) || (file.nodata && v == *file.nodata)) {
            v = std::numeric_limits<double>::quiet_NaN();
        }
        file.bands[band](r, c) = v;
    };

    if (TIFFIsTiled(tif)) {
        std::uint32_t tile_w = 0;
        std::uint32_t tile_h = 0;
        TIFFGetField(tif, TIFFTAG_TILEWIDTH, &tile_w);
        TIFFGetField(tif, TIFFTAG_TILELENGTH, &tile_h);
        std::vector<unsigned char> tile(static_cast<std::size_t>(TIFFTileSize(tif)));
        const std::uint16_t planes = planar == PLANARCONFIG_SEPARATE ? spp : 1;
        const std::uint16_t per_pixel = planar == PLANARCONFIG_SEPARATE ? 1 : spp;
        for (std::uint16_t plane = 0; plane < planes; ++plane) {
            for (std::uint32_t y0 = 0; y0 < height; y0 += tile_h) {
                for (std::uint32_t x0 = 0; x0 < width; x0 += tile_w) {
                    if (TIFFReadTile(tif, tile.data(), x0, y0, 0, plane) < 0) {
                        fail(path, "failed to read tile");
                    }
                    for (std::uint32_t y = y0; y < std::min(height, y0 + tile_h); ++y) {
                        for (std::uint32_t x = x0; x < std::min(width, x0 + tile_w); ++x) {
                            const std::size_t base =
                                (static_cast<std::size_t>(y - y0) * tile_w + (x - x0)) * per_pixel;
                            for (std::uint16_t s = 0; s < per_pixel; ++s) {
                                store(plane + s, y, x, sample_at(tile.data(), base + s, bits, format));
                            }
                        }
                    }
                }
            }
        }
        return file;
    }

    std::vector<unsigned char> line(static_cast<std::size_t>(TIFFScanlineSize(tif)));
    if (planar == PLANARCONFIG_SEPARATE) {
        for (std::uint16_t s = 0; s < spp; ++s) {
            for (std::uint32_t y = 0; y < height; ++y) {
                if (TIFFReadScanline(tif, line.data(), y, s) < 0) {
                    fail(path, "failed to read scanline");
                }
                for (std::uint32_t x = 0; x < width; ++x) {
                    store(s, y, x, sample_at(line.data(), x, bits, format));
                }
            }
        }
    } else {
        for (std::uint32_t y = 0; y < height; ++y) {
            if (TIFFReadScanline(tif, line.data(), y, 0) < 0) {
                fail(path, "failed to read scanline");
            }
            for (std::uint32_t x = 0; x < width; ++x) {
                for (std::uint16_t s = 0; s < spp; ++s) {
                    store(s, y, x, sample_at(line.data(), static_cast<std::size_t>(x) * spp + s, bits, format));
                }
            }
        }
    }
    return file;
}

void write_float_geotiff(const std::filesystem::path& path, std::span<const Grid<float>> bands,
                         const Georeference& georef) {
    if (bands.empty() || bands.front().empty()) {
        throw ContractError("write_float_geotiff: no data");
    }
    const std::size_t rows = bands.front().rows();
    const std::size_t cols = bands.front().cols();
    for (const auto& b : bands) {
        if (b.rows() != rows || b.cols() != cols) {
            throw GeometryError("write_float_geotiff: bands differ in shape");
        }
    }
    TiffHandle handle = open_tiff(path, "w");
    TIFF* tif = handle.get();
    const int count = static_cast<int>(bands.size());
    set_basic_tags(tif, rows, cols, count, 32, SAMPLEFORMAT_IEEEFP);
    write_georeference(tif, georef, std::string("nan"));

    std::vector<float> line(cols * bands.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            for (std::size_t b = 0; b < bands.size(); ++b) {
                line[c * bands.size() + b] = bands[b](r, c);
            }
        }
        if (TIFFWriteScanline(tif, line.data(), static_cast<std::uint32_t>(r), 0) < 0) {
            fail(path, "failed to write scanline");
        }
    }
}

void write_float_geotiff(const std::filesystem::path& path, const Grid<double>& band,
                         const Georeference& georef) {
    Grid<float> converted(band.rows(), band.cols());
    for (std::size_t k = 0; k < band.size(); ++k) {
        converted.data()[k] = static_cast<float>(band.data()[k]);
    }
    write_float_geotiff(path, std::span<const Grid<float>>(&converted, 1), georef);
}

void write_byte_geotiff(const std::filesystem::path& path, const Grid<std::uint8_t>& band,
                        const Georeference& georef, std::optional<std::uint8_t> nodata) {
    if (band.empty()) {
        throw ContractError("write_byte_geotiff: no data");
    }
    TiffHandle handle = open_tiff(path, "w");
    TIFF* tif = handle.get();
    set_basic_tags(tif, band.rows(), band.cols(), 1, 8, SAMPLEFORMAT_UINT);
    std::optional<std::string> nodata_text;
    if (nodata) {
        nodata_text = std::to_string(*nodata);
    }
    write_georeference(tif, georef, nodata_text);
    std::vector<std::uint8_t> line(band.cols());
    for (std::size_t r = 0; r < band.rows(); ++r) {
        std::copy_n(band.data().begin() + static_cast<std::ptrdiff_t>(r * band.cols()), band.cols(),
                    line.begin());
        if (TIFFWriteScanline(tif, line.data(), static_cast<std::uint32_t>(r), 0) < 0) {
            fail(path, "failed to write scanline");
        }
    }
}

}  // namespace bcpflood
