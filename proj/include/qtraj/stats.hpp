#pragma once

#include <cstddef>
#include <map>
#include <vector>

namespace qtraj {

// Running sums for a scalar sample.
struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;

    void add(double x) noexcept {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    void merge(const Moments& o) noexcept {
        sum += o.sum;
        sum_sq += o.sum_sq;
        n += o.n;
    }
    double mean() const noexcept { return n ? sum / static_cast<double>(n) : 0.0; }
    // Standard error of the mean; 0 for fewer than two samples.
    double standard_error() const noexcept;
};

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    std::size_t bins = 0;
};

// Goodness of fit of an integer histogram {value: count} against
// Poisson(lambda). Adjacent bins are merged until each expects at least 5
// counts; the last bin collects the whole upper tail.
ChiSquareResult poisson_chi_square(const std::map<std::size_t, std::size_t>& histogram,
                                   double lambda);

} // namespace qtraj
