#include "bcpflood/raster.hpp"
#include "bcpflood/errors.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace bcpflood {

bool Georeference::matches(const Georeference& other) const {
    const double pixel = std::max({std::abs(transform[1]), std::abs(transform[5]), 1e-300});
    for (std::size_t k = 0; k < transform.size(); ++k) {
        if (std::abs(transform[k] - other.transform[k]) > 1e-9 * pixel) {
            return false;
        }
    }
    return crs == other.crs;
}

RasterStack::RasterStack(std::vector<std::string> dates, std::vector<std::string> channels,
                         std::size_t rows, std::size_t cols, Georeference georef)
    : dates_(std::move(dates)),
      channels_(std::move(channels)),
      rows_(rows),
      cols_(cols),
      georef_(std::move(georef)),
      data_(dates_.size() * channels_.size() * rows * cols, 0.0F),
      nodata_(dates_.size() * rows * cols, 0) {}

std::optional<std::size_t> RasterStack::channel_index(const std::string& name) const {
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        return s;
    };
    const std::string wanted = lower(name);
    for (std::size_t c = 0; c < channels_.size(); ++c) {
        if (lower(channels_[c]) == wanted) {
            return c;
        }
    }
    return std::nullopt;
}

void RasterStack::set(std::size_t t, std::size_t c, std::size_t r, std::size_t col, float v) {
    if (!std::isfinite(v)) {
        set_nodata(t, r, col);
        return;
    }
    data_[((t * channels() + c) * rows_ + r) * cols_ + col] = v;
}

void RasterStack::set_nodata(std::size_t t, std::size_t r, std::size_t col) {
    nodata_[(t * rows_ + r) * cols_ + col] = 1;
    for (std::size_t c = 0; c < channels(); ++c) {
        data_[((t * channels() + c) * rows_ + r) * cols_ + col] =
            std::numeric_limits<float>::quiet_NaN();
    }
}

Grid<double> RasterStack::band(std::size_t t, std::size_t c) const {
    Grid<double> out(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t col = 0; col < cols_; ++col) {
            out(r, col) = nodata(t, r, col) ? std::numeric_limits<double>::quiet_NaN()
                                            : static_cast<double>(value(t, c, r, col));
        }
    }
    return out;
}

void RasterStack::validate() const {
    if (dates_.empty() || channels_.empty() || rows_ == 0 || cols_ == 0) {
        throw ContractError("RasterStack: empty stack");
    }
    if (data_.size() != dates_.size() * channels_.size() * rows_ * cols_ ||
        nodata_.size() != dates_.size() * rows_ * cols_) {
        throw ContractError("RasterStack: buffer sizes do not match the declared shape");
    }
}

void ReferenceMap::validate() const {
    for (const std::uint8_t v : labels.data()) {
        if (v > 2 && v != kMaskNoData) {
            throw InputError("ReferenceMap: label " + std::to_string(v) + " outside {0, 1, 2}");
        }
    }
}

Grid<double> aggregate_2x2(const Grid<double>& raster) {
    const std::size_t rows = (raster.rows() + 1) / 2;
    const std::size_t cols = (raster.cols() + 1) / 2;
    Grid<double> out(rows, cols, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double sum = 0.0;
            int count = 0;
            for (std::size_t dr = 0; dr < 2; ++dr) {
                for (std::size_t dc = 0; dc < 2; ++dc) {
                    const std::size_t rr = 2 * r + dr;
                    const std::size_t cc = 2 * c + dc;
                    if (rr >= raster.rows() || cc >= raster.cols() || is_nodata(raster(rr, cc))) {
                        continue;
                    }
                    sum += raster(rr, cc);
                    ++count;
                }
            }
            if (count > 0) {
                out(r, c) = sum / count;
            }
        }
    }
    return out;
}

RasterStack aggregate_2x2(const RasterStack& stack) {
    stack.validate();
    Georeference georef = stack.georef();
    georef.transform[1] *= 2.0;
    georef.transform[2] *= 2.0;
    georef.transform[4] *= 2.0;
    georef.transform[5] *= 2.0;
    const std::size_t rows = (stack.rows() + 1) / 2;
    const std::size_t cols = (stack.cols() + 1) / 2;
    RasterStack out(stack.date_labels(), stack.channel_names(), rows, cols, georef);
    for (std::size_t t = 0; t < stack.dates(); ++t) {
        for (std::size_t c = 0; c < stack.channels(); ++c) {
            const Grid<double> coarse = aggregate_2x2(stack.band(t, c));
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t col = 0; col < cols; ++col) {
                    out.set(t, c, r, col, static_cast<float>(coarse(r, col)));
                }
            }
        }
    }
    return out;
}

}  // namespace bcpflood
