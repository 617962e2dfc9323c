#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bcpflood {

// North-up affine transform in GDAL order:
//   x = t[0] + col * t[1] + row * t[2],  y = t[3] + col * t[4] + row * t[5].
struct Georeference {
    std::array<double, 6> transform{0.0, 1.0, 0.0, 0.0, 0.0, -1.0};
    std::string crs;  // "EPSG:<code>" or empty

    double resolution() const { return std::abs(transform[1]); }
    // Same grid placement to within 1e-9 of a pixel.
    bool matches(const Georeference& other) const;
    bool operator==(const Georeference&) const = default;
};

template <class T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }

    template <class U>
    bool same_shape(const Grid<U>& other) const {
        return rows_ == other.rows() && cols_ == other.cols();
    }

    bool operator==(const Grid&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

inline constexpr std::uint8_t kMaskNoData = 255;

inline bool is_nodata(double v) { return std::isnan(v); }

// T dates x C channels x H x W backscatter. NoData cells hold NaN in every
// channel and are flagged in the T x H x W mask.
class RasterStack {
public:
    RasterStack() = default;
    RasterStack(std::vector<std::string> dates, std::vector<std::string> channels, std::size_t rows,
                std::size_t cols, Georeference georef);

    std::size_t dates() const { return dates_.size(); }
    std::size_t channels() const { return channels_.size(); }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const std::vector<std::string>& date_labels() const { return dates_; }
    const std::vector<std::string>& channel_names() const { return channels_; }
    const Georeference& georef() const { return georef_; }
    double resolution_m() const { return georef_.resolution(); }

    // Case-insensitive channel lookup.
    std::optional<std::size_t> channel_index(const std::string& name) const;

    float value(std::size_t t, std::size_t c, std::size_t r, std::size_t col) const {
        return data_[((t * channels() + c) * rows_ + r) * cols_ + col];
    }
    bool nodata(std::size_t t, std::size_t r, std::size_t col) const {
        return nodata_[(t * rows_ + r) * cols_ + col] != 0;
    }

    // Writes one channel value; a non-finite value marks the whole
    // date-pixel NoData.
    void set(std::size_t t, std::size_t c, std::size_t r, std::size_t col, float v);
    void set_nodata(std::size_t t, std::size_t r, std::size_t col);

    // One date/channel as a double grid with NaN at NoData.
    Grid<double> band(std::size_t t, std::size_t c) const;

    std::span<const float> data() const { return data_; }
    std::span<const std::uint8_t> nodata_mask() const { return nodata_; }

    // Throws ContractError on shape inconsistencies.
    void validate() const;

private:
    std::vector<std::string> dates_;
    std::vector<std::string> channels_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Georeference georef_;
    std::vector<float> data_;
    std::vector<std::uint8_t> nodata_;
};

// 0 = non-flooded, 1 = flooded open, 2 = flooded urban, 255 = NoData.
struct ReferenceMap {
    Grid<std::uint8_t> labels;
    Georeference georef;

    void validate() const;
};

// Each output cell is the mean of the valid cells of its 2x2 block; NoData
// only when all four are NoData. Odd sizes are padded with NoData.
Grid<double> aggregate_2x2(const Grid<double>& raster);

// Aggregates every band and doubles the pixel size.
RasterStack aggregate_2x2(const RasterStack& stack);

}  // namespace bcpflood
