#pragma once

// Dense complex linear algebra for small operators.
//
// Storage is row-major: entry (i, j) of an r x c matrix lives at i * c + j.
// Everything here is a value type; operations are free functions that return
// new values and never mutate their arguments.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace qtraj {

using cplx = std::complex<double>;

inline constexpr cplx kI{0.0, 1.0};

// Largest row/column count accepted by kron; larger products are refused.
inline constexpr std::size_t kMaxDimension = 4096;

class CVector {
public:
    CVector() = default;
    explicit CVector(std::size_t n, cplx fill = {}) : data_(n, fill) {}
    CVector(std::initializer_list<cplx> init) : data_(init) {}
    explicit CVector(std::vector<cplx> data) : data_(std::move(data)) {}

    static CVector basis(std::size_t n, std::size_t k);

    std::size_t size() const noexcept { return data_.size(); }
    cplx& operator[](std::size_t i) noexcept { return data_[i]; }
    const cplx& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<cplx> values() noexcept { return data_; }
    std::span<const cplx> values() const noexcept { return data_; }
    cplx* data() noexcept { return data_.data(); }
    const cplx* data() const noexcept { return data_.data(); }

    bool all_finite() const noexcept;

    CVector& operator+=(const CVector& o);
    CVector& operator-=(const CVector& o);
    CVector& operator*=(cplx s) noexcept;

    friend bool operator==(const CVector&, const CVector&) = default;

private:
    std::vector<cplx> data_;
};

class CMatrix {
public:
    CMatrix() = default;
    CMatrix(std::size_t rows, std::size_t cols, cplx fill = {})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    // Row-major nested initializer: {{a, b}, {c, d}}.
    CMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

    static CMatrix identity(std::size_t n);
    static CMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
    static CMatrix diagonal(std::span<const cplx> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    cplx& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const noexcept {
        return data_[i * cols_ + j];
    }

    std::span<cplx> values() noexcept { return data_; }
    std::span<const cplx> values() const noexcept { return data_; }

    bool all_finite() const noexcept;

    CMatrix& operator+=(const CMatrix& o);
    CMatrix& operator-=(const CMatrix& o);
    CMatrix& operator*=(cplx s) noexcept;

    friend bool operator==(const CMatrix&, const CMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator*(cplx s, CMatrix a);
CMatrix operator*(CMatrix a, cplx s);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CVector operator*(const CMatrix& a, const CVector& x);
CVector operator+(CVector a, const CVector& b);
CVector operator-(CVector a, const CVector& b);
CVector operator*(cplx s, CVector a);

CMatrix matmul(const CMatrix& a, const CMatrix& b);
CVector matvec(const CMatrix& a, const CVector& x);

// (a ⊗ b)[i*rb + k, j*cb + l] = a[i, j] * b[k, l].
CMatrix kron(const CMatrix& a, const CMatrix& b);

// exp(scale * a) by scaling and squaring of a truncated Taylor series.
CMatrix matexp(const CMatrix& a, cplx scale = 1.0);

cplx trace(const CMatrix& a);
CMatrix adjoint(const CMatrix& a);
CMatrix commutator(const CMatrix& a, const CMatrix& b);
CMatrix anticommutator(const CMatrix& a, const CMatrix& b);

// |a><b|
CMatrix outer(const CVector& a, const CVector& b);
// <a|b>, antilinear in the first argument.
cplx inner(const CVector& a, const CVector& b);
double norm_squared(const CVector& a);

double frobenius_norm(const CMatrix& a);
double one_norm(const CMatrix& a);
// Largest |a(i,j) - a(j,i)*|.
double hermiticity_defect(const CMatrix& a);

// Eigenvalues of the Hermitian part (a + a†)/2, ascending. Cyclic Jacobi.
std::vector<double> hermitian_eigenvalues(const CMatrix& a);

// 1/2 sum |eig(a - b)| of the Hermitian part of the difference.
double trace_distance(const CMatrix& a, const CMatrix& b);
// Tr(a^2) / Tr(a)^2; throws ZeroNorm when Tr(a) vanishes.
double purity(const CMatrix& a);

} // namespace qtraj
