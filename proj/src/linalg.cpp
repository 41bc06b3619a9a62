#include "qtraj/linalg.hpp"

#include "qtraj/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qtraj {

namespace {

void require_same_shape(const CMatrix& a, const CMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
    }
}

void require_square(const CMatrix& a, const char* op) {
    if (!a.square()) {
        throw DimensionMismatch(std::string(op) + ": matrix is not square");
    }
}

} // namespace

CVector CVector::basis(std::size_t n, std::size_t k) {
    CVector v(n);
    v[k] = 1.0;
    return v;
}

bool CVector::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](const cplx& z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
}

CVector& CVector::operator+=(const CVector& o) {
    if (o.size() != size()) throw DimensionMismatch("vector add: length mismatch");
    for (std::size_t i = 0; i < size(); ++i) data_[i] += o.data_[i];
    return *this;
}

CVector& CVector::operator-=(const CVector& o) {
    if (o.size() != size()) throw DimensionMismatch("vector sub: length mismatch");
    for (std::size_t i = 0; i < size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

CVector& CVector::operator*=(cplx s) noexcept {
    for (auto& z : data_) z *= s;
    return *this;
}

CMatrix::CMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionMismatch("CMatrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

CMatrix CMatrix::identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

CMatrix CMatrix::diagonal(std::span<const cplx> diag) {
    CMatrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

bool CMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](const cplx& z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
    require_same_shape(*this, o, "matrix add");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
    require_same_shape(*this, o, "matrix sub");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

CMatrix& CMatrix::operator*=(cplx s) noexcept {
    for (auto& z : data_) z *= s;
    return *this;
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
CMatrix operator*(const CMatrix& a, const CMatrix& b) { return matmul(a, b); }
CVector operator*(const CMatrix& a, const CVector& x) { return matvec(a, x); }
CVector operator+(CVector a, const CVector& b) { return a += b; }
CVector operator-(CVector a, const CVector& b) { return a -= b; }
CVector operator*(cplx s, CVector a) { return a *= s; }

CMatrix matmul(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionMismatch("matmul: inner dimensions " + std::to_string(a.cols()) +
                                " and " + std::to_string(b.rows()) + " differ");
    }
    CMatrix c(a.rows(), b.cols());
    // i-k-j order keeps the inner loop contiguous in both b and c.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{}) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

CVector matvec(const CMatrix& a, const CVector& x) {
    if (a.cols() != x.size()) throw DimensionMismatch("matvec: dimension mismatch");
    CVector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx acc{};
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    const std::size_t rows = a.rows() * b.rows();
    const std::size_t cols = a.cols() * b.cols();
    if (rows > kMaxDimension || cols > kMaxDimension) {
        throw DimensionOverflow("kron: result " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " exceeds maximum dimension " +
                                std::to_string(kMaxDimension));
    }
    CMatrix c(rows, cols);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const cplx aij = a(i, j);
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    c(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
        }
    return c;
}

CMatrix matexp(const CMatrix& a, cplx scale) {
    require_square(a, "matexp");
    constexpr int kSeriesOrder = 16;
    constexpr double kScalingThreshold = 0.5;

    CMatrix x = scale * a;
    if (!x.all_finite()) throw NumericalError("matexp: non-finite input");
    const double norm = one_norm(x);
    int squarings = 0;
    if (norm > kScalingThreshold) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / kScalingThreshold)));
        x *= std::ldexp(1.0, -squarings);
    }

    // Horner form of sum_{k<=N} x^k / k!.
    const std::size_t n = a.rows();
    CMatrix result = CMatrix::identity(n);
    for (int k = kSeriesOrder; k >= 1; --k) {
        result = matmul(x, result);
        result *= 1.0 / k;
        for (std::size_t i = 0; i < n; ++i) result(i, i) += 1.0;
    }
    for (int s = 0; s < squarings; ++s) result = matmul(result, result);
    return result;
}

cplx trace(const CMatrix& a) {
    require_square(a, "trace");
    cplx t{};
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

CMatrix adjoint(const CMatrix& a) {
    CMatrix h(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) h(j, i) = std::conj(a(i, j));
    return h;
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

CMatrix anticommutator(const CMatrix& a, const CMatrix& b) { return a * b + b * a; }

CMatrix outer(const CVector& a, const CVector& b) {
    CMatrix m(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * std::conj(b[j]);
    return m;
}

cplx inner(const CVector& a, const CVector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("inner: length mismatch");
    cplx acc{};
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

double norm_squared(const CVector& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a[i]);
    return acc;
}

double frobenius_norm(const CMatrix& a) {
    double acc = 0.0;
    for (const auto& z : a.values()) acc += std::norm(z);
    return std::sqrt(acc);
}

double one_norm(const CMatrix& a) {
    double best = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) col += std::abs(a(i, j));
        best = std::max(best, col);
    }
    return best;
}

double hermiticity_defect(const CMatrix& a) {
    require_square(a, "hermiticity_defect");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i; j < a.cols(); ++j)
            worst = std::max(worst, std::abs(a(i, j) - std::conj(a(j, i))));
    return worst;
}

std::vector<double> hermitian_eigenvalues(const CMatrix& a) {
    require_square(a, "hermitian_eigenvalues");
    const std::size_t n = a.rows();
    // A Hermitian H = X + iY has the same spectrum, doubled, as the real
    // symmetric [[X, -Y], [Y, X]]; cyclic Jacobi runs on that embedding.
    const std::size_t m = 2 * n;
    std::vector<double> s(m * m);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return s[i * m + j]; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const cplx h = 0.5 * (a(i, j) + std::conj(a(j, i)));
            at(i, j) = h.real();
            at(i + n, j + n) = h.real();
            at(i, j + n) = -h.imag();
            at(i + n, j) = h.imag();
        }

    auto off_diagonal = [&] {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) acc += at(i, j) * at(i, j);
        return acc;
    };
    double scale = 0.0;
    for (double v : s) scale += v * v;

    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_diagonal() <= 1e-30 * std::max(scale, 1e-300)) break;
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < m; ++k) {
                    const double akp = at(k, p);
                    const double akq = at(k, q);
                    at(k, p) = c * akp - sn * akq;
                    at(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < m; ++k) {
                    const double apk = at(p, k);
                    const double aqk = at(q, k);
                    at(p, k) = c * apk - sn * aqk;
                    at(q, k) = sn * apk + c * aqk;
                }
            }
        }
    }

    std::vector<double> doubled(m);
    for (std::size_t i = 0; i < m; ++i) doubled[i] = at(i, i);
    std::sort(doubled.begin(), doubled.end());
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = 0.5 * (doubled[2 * i] + doubled[2 * i + 1]);
    return eig;
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
    require_same_shape(a, b, "trace_distance");
    require_square(a, "trace_distance");
    double acc = 0.0;
    for (double e : hermitian_eigenvalues(a - b)) acc += std::abs(e);
    return 0.5 * acc;
}

double purity(const CMatrix& a) {
    const cplx tr = trace(a);
    if (std::abs(tr) == 0.0) throw ZeroNorm("purity: zero-trace operator");
    return (trace(a * a) / (tr * tr)).real();
}

} // namespace qtraj
