#include "qtraj/stats.hpp"

#include "qtraj/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include <cmath>

namespace qtraj {

double Moments::standard_error() const noexcept {
    if (n < 2) return 0.0;
    const double m = mean();
    const double nn = static_cast<double>(n);
    const double var = (sum_sq - nn * m * m) / (nn - 1.0);
    return var > 0.0 ? std::sqrt(var / nn) : 0.0;
}

ChiSquareResult poisson_chi_square(const std::map<std::size_t, std::size_t>& histogram,
                                   double lambda) {
    if (!(lambda > 0.0)) throw Error("poisson_chi_square needs lambda > 0");
    std::size_t total = 0;
    std::size_t max_value = 0;
    for (const auto& [k, c] : histogram) {
        total += c;
        max_value = std::max(max_value, k);
    }
    if (total == 0) throw Error("poisson_chi_square: empty histogram");
    const boost::math::poisson_distribution<double> dist(lambda);
    const double m = static_cast<double>(total);

    auto observed = [&](std::size_t k) {
        auto it = histogram.find(k);
        return it == histogram.end() ? 0.0 : static_cast<double>(it->second);
    };

    // Bins as [lo, hi); the last one is open.
    struct Bin {
        double expected = 0.0;
        double observed = 0.0;
    };
    std::vector<Bin> bins;
    Bin cur;
    double cdf = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double pk = boost::math::pdf(dist, static_cast<double>(k));
        cur.expected += m * pk;
        cur.observed += observed(k);
        cdf += pk;
        const double tail = m * (1.0 - cdf);
        if (cur.expected >= 5.0 && tail >= 5.0) {
            bins.push_back(cur);
            cur = Bin{};
        }
        if (tail < 5.0 || (k > max_value && k > lambda)) {
            cur.expected += tail;
            for (const auto& [v, c] : histogram)
                if (v > k) cur.observed += static_cast<double>(c);
            break;
        }
    }
    if (cur.expected < 5.0 && !bins.empty()) {
        bins.back().expected += cur.expected;
        bins.back().observed += cur.observed;
    } else {
        bins.push_back(cur);
    }

    ChiSquareResult r;
    r.bins = bins.size();
    for (const Bin& b : bins) {
        const double diff = b.observed - b.expected;
        r.statistic += diff * diff / b.expected;
    }
    if (bins.size() < 2) return r;
    r.dof = bins.size() - 1;
    const boost::math::chi_squared_distribution<double> chi(static_cast<double>(r.dof));
    r.p_value = boost::math::cdf(boost::math::complement(chi, r.statistic));
    return r;
}

} // namespace qtraj
