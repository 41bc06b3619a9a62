#include "qtraj/operators.hpp"

#include <cmath>

namespace qtraj::ops {

CMatrix sigma_minus() { return {{0.0, 1.0}, {0.0, 0.0}}; }
CMatrix sigma_plus() { return {{0.0, 0.0}, {1.0, 0.0}}; }
CMatrix sigma_x() { return {{0.0, 1.0}, {1.0, 0.0}}; }
CMatrix sigma_y() { return {{0.0, kI}, {-kI, 0.0}}; }
CMatrix sigma_z() { return {{-1.0, 0.0}, {0.0, 1.0}}; }

CMatrix annihilation(std::size_t n_max) {
    CMatrix a(n_max + 1, n_max + 1);
    for (std::size_t n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

CMatrix number(std::size_t n_max) {
    CMatrix m(n_max + 1, n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) m(n, n) = static_cast<double>(n);
    return m;
}

std::optional<CMatrix> named(std::string_view name, std::size_t dim) {
    if (name == "identity") return CMatrix::identity(dim);
    if (dim == 2) {
        if (name == "sx") return sigma_x();
        if (name == "sy") return sigma_y();
        if (name == "sz") return sigma_z();
        if (name == "sp") return sigma_plus();
        if (name == "sm") return sigma_minus();
        if (name == "excited") return sigma_plus() * sigma_minus();
        if (name == "ground") return sigma_minus() * sigma_plus();
    }
    if (dim >= 2) {
        const std::size_t n_max = dim - 1;
        if (name == "a") return annihilation(n_max);
        if (name == "adag") return adjoint(annihilation(n_max));
        if (name == "n") return number(n_max);
        if (name == "x") {
            const CMatrix a = annihilation(n_max);
            return (a + adjoint(a)) * cplx(1.0 / std::sqrt(2.0));
        }
        if (name == "p") {
            const CMatrix a = annihilation(n_max);
            return (a - adjoint(a)) * cplx(0.0, -1.0 / std::sqrt(2.0));
        }
    }
    return std::nullopt;
}

} // namespace qtraj::ops
