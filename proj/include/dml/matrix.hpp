#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dml {

// Minimal row-major dense matrix for numeric work.
struct Mat {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : n_rows(r), n_cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * n_cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * n_cols, n_cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * n_cols, n_cols}; }

    Mat select_rows(std::span<const std::size_t> idx) const {
        Mat out(idx.size(), n_cols);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto src = row(idx[i]);
            std::copy(src.begin(), src.end(), out.row(i).begin());
        }
        return out;
    }

    Mat select_cols(std::span<const std::size_t> idx) const {
        Mat out(n_rows, idx.size());
        for (std::size_t r = 0; r < n_rows; ++r)
            for (std::size_t j = 0; j < idx.size(); ++j) out.at(r, j) = at(r, idx[j]);
        return out;
    }
};

// Horizontal concatenation.
inline Mat hcat(const Mat& a, const Mat& b) {
    if (a.n_cols == 0 && a.n_rows == 0) return b;
    Mat out(a.n_rows, a.n_cols + b.n_cols);
    for (std::size_t r = 0; r < a.n_rows; ++r) {
        auto ra = a.row(r);
        auto rb = b.row(r);
        std::copy(ra.begin(), ra.end(), out.row(r).begin());
        std::copy(rb.begin(), rb.end(), out.row(r).begin() + a.n_cols);
    }
    return out;
}

}  // namespace dml
