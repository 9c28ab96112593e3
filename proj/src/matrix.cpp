#include "clickguard/matrix.hpp"

#include "clickguard/error.hpp"
#include "clickguard/simd/kernels.hpp"

#include <string>

namespace clickguard {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init)
    : rows_(init.size()), cols_(init.size() == 0 ? 0 : init.begin()->size()) {
    data_.reserve(rows_ * cols_);
    for (const auto& r : init) {
        if (r.size() != cols_) throw DimensionMismatch("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::transposed() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    return out;
}

Matrix multiply(const Matrix& lhs, const Matrix& rhs) {
    if (lhs.cols() != rhs.rows())
        throw DimensionMismatch("multiply: " + std::to_string(lhs.rows()) + "x" +
                                std::to_string(lhs.cols()) + " by " + std::to_string(rhs.rows()) +
                                "x" + std::to_string(rhs.cols()));
    const auto& k = simd::kernels();
    Matrix out(lhs.rows(), rhs.cols());
    for (std::size_t i = 0; i < lhs.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t l = 0; l < lhs.cols(); ++l) {
            const double a = lhs(i, l);
            if (a != 0.0) k.axpy(a, rhs.row(l).data(), dst.data(), dst.size());
        }
    }
    return out;
}

double squared_norm(const Matrix& m) {
    const auto v = m.values();
    return simd::kernels().dot(v.data(), v.data(), v.size());
}

CsrMatrix CsrMatrix::from_dense(const Matrix& dense) {
    CsrMatrix csr;
    csr.rows = dense.rows();
    csr.cols = dense.cols();
    csr.row_start.reserve(csr.rows + 1);
    csr.row_start.push_back(0);
    for (std::size_t r = 0; r < dense.rows(); ++r) {
        for (std::size_t c = 0; c < dense.cols(); ++c) {
            const double v = dense(r, c);
            if (v != 0.0) {
                csr.col_index.push_back(c);
                csr.value.push_back(v);
            }
        }
        csr.row_start.push_back(csr.value.size());
    }
    return csr;
}

}  // namespace clickguard
