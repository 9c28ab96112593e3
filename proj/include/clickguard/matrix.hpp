#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace clickguard {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> init);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] std::span<double> values() noexcept { return data_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

    [[nodiscard]] Matrix transposed() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// lhs * rhs; throws DimensionMismatch when inner dimensions differ.
[[nodiscard]] Matrix multiply(const Matrix& lhs, const Matrix& rhs);

/// Sum of squared entries.
[[nodiscard]] double squared_norm(const Matrix& m);

/// Compressed sparse rows; used for the mostly-empty traffic matrices.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_start;  // rows + 1 offsets
    std::vector<std::size_t> col_index;
    std::vector<double> value;

    [[nodiscard]] static CsrMatrix from_dense(const Matrix& dense);
    [[nodiscard]] std::size_t nonzeros() const noexcept { return value.size(); }
};

}  // namespace clickguard
