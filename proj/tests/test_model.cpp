#include "support.hpp"

#include "qtraj/errors.hpp"

#include <gtest/gtest.h>

using namespace qtraj;

TEST(Overlap, IdenticalWaveformsGiveOne) {
    const Waveform w = Waveform::gaussian({0.7, -0.2}, 1.0, 0.3, 2.0);
    EXPECT_NEAR(std::abs(overlap(w, w, 0.0, 2.0) - 1.0), 0.0, 1e-14);
}

TEST(Overlap, OppositeConstantsClosedForm) {
    const cplx a{0.6, 0.3};
    const double T = 1.7;
    const cplx o = overlap(Waveform::constant(a, T), Waveform::constant(-a, T), 0.0, T);
    EXPECT_NEAR(o.real(), std::exp(-2.0 * std::norm(a) * T), 1e-14);
    EXPECT_NEAR(o.imag(), 0.0, 1e-14);
}

TEST(Overlap, PhaseConvention) {
    // <b|a> for constants: exp(-(|a|^2 + |b|^2 - 2 a b*) T / 2).
    const cplx a{0.5, 0.0}, b{0.0, 0.5};
    const double T = 1.0;
    const cplx expect = std::exp(-0.5 * (std::norm(a) + std::norm(b) - 2.0 * a * std::conj(b)) * T);
    const cplx o = overlap(Waveform::constant(a, T), Waveform::constant(b, T), 0.0, T);
    EXPECT_LE(std::abs(o - expect), 1e-14);
}

TEST(Overlap, SampledPiecewiseAgainstRefinedQuadrature) {
    // Piecewise-linear samples: refine the Simpson rule far beyond the
    // default and compare.
    std::vector<cplx> sa{0.0, 0.4, {0.3, 0.2}, 0.1, 0.0}, sb{0.2, -0.1, 0.0, {0.0, -0.3}, 0.1};
    const Waveform a = Waveform::sampled(0.25, sa, 1.0), b = Waveform::sampled(0.25, sb, 1.0);
    // Exact: integrand is piecewise quadratic, so Simpson with panels aligned
    // to the samples is exact.
    const cplx coarse = log_overlap(a, b, 0.0, 1.0, 8);
    const cplx fine = log_overlap(a, b, 0.0, 1.0, 1 << 16);
    EXPECT_LE(std::abs(coarse - fine), 1e-10);
}

TEST(Discretize, ZeroAndConstant) {
    const GridSpec g = GridSpec::from_horizon(1.0, 0.1);
    EXPECT_EQ(g.steps, 10u);
    for (cplx z : discretize(Waveform::zero(1.0), g)) EXPECT_EQ(z, cplx{});
    for (cplx z : discretize(Waveform::constant({0.3, -1.0}, 1.0), g)) EXPECT_EQ(z, cplx(0.3, -1.0));
}

TEST(Discretize, RiemannSumConverges) {
    // alpha = e^{i omega t} (chirp with zero rate): |alpha|^2 = 1, so check a
    // Gaussian instead, where the left Riemann sum has an O(tau) error.
    const Waveform w = Waveform::gaussian(1.0, 0.3, 0.25, 1.0);
    const double exact = squared_norm_integral(w, 1 << 14);
    double prev = 0.0;
    for (double tau : {0.02, 0.01, 0.005}) {
        const GridSpec g = GridSpec::from_horizon(1.0, tau);
        double s = 0.0;
        for (cplx z : discretize(w, g)) s += std::norm(z) * tau;
        const double err = std::abs(s - exact);
        if (prev > 0.0) EXPECT_LT(err, 0.75 * prev);
        prev = err;
    }
    const Waveform chirp = Waveform::chirp(1.0, 3.0, 0.0, 1.0);
    const GridSpec g = GridSpec::from_horizon(1.0, 0.01);
    double s = 0.0;
    for (cplx z : discretize(chirp, g)) s += std::norm(z) * g.tau;
    EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(GridSpec, RoundOffTolerant) {
    EXPECT_EQ(GridSpec::from_horizon(0.3, 0.1).steps, 3u);
    EXPECT_EQ(GridSpec::from_horizon(2.0, 1e-3).steps, 2000u);
    EXPECT_EQ(GridSpec::from_horizon(1.05, 0.1).steps, 11u);
}

TEST(DriveSpec, SingleCoherentIsValid) {
    EXPECT_NO_THROW(validate(test::coherent({1.0, 2.0}, 1.0)));
}

TEST(DriveSpec, DegenerateSuperpositionIsValid) {
    const Waveform a = Waveform::constant(0.5, 1.0);
    DriveSpec d;
    d.alpha = a;
    d.beta = a;
    d.c_alpha = d.c_beta = 1.0 / std::sqrt(2.0 + 2.0 * overlap(a, a, 0.0, 1.0).real());
    EXPECT_NO_THROW(validate(d));
}

TEST(DriveSpec, EvenCatNormalization) {
    const double T = 1.5;
    const cplx a{0.8, 0.0};
    const Waveform wa = Waveform::constant(a, T), wb = Waveform::constant(-a, T);
    DriveSpec d;
    d.alpha = wa;
    d.beta = wb;
    const double n = 1.0 / std::sqrt(2.0 + 2.0 * overlap(wa, wb, 0.0, T).real());
    d.c_alpha = d.c_beta = n;
    EXPECT_NO_THROW(validate(d));
    EXPECT_NEAR(n, 1.0 / std::sqrt(2.0 + 2.0 * std::exp(-2.0 * std::norm(a) * T)), 1e-14);
    d.c_alpha = d.c_beta = 1.0;
    EXPECT_THROW(validate(d), NormalizationViolation);
    EXPECT_NEAR(normalized(d).c_alpha.real(), n, 1e-14);
}

TEST(DriveSpec, NonFiniteRejected) {
    DriveSpec d = test::coherent(1.0, 1.0);
    d.alpha = Waveform::sampled(0.5, {0.0, std::nan(""), 0.0}, 1.0);
    EXPECT_THROW(validate(d), NonFiniteWaveform);
}

TEST(SystemModel, NormalizesAndValidates) {
    const SystemModel m = make_system_model(ops::sigma_z(), ops::sigma_minus(), CVector{3.0, 4.0});
    EXPECT_NEAR(norm_squared(m.initial_state), 1.0, 1e-15);
    EXPECT_THROW(make_system_model(ops::sigma_minus(), ops::sigma_minus(), CVector{1.0, 0.0}), Error);
    EXPECT_THROW(make_system_model(ops::sigma_z(), CMatrix(3, 3), CVector{1.0, 0.0}), DimensionMismatch);
    EXPECT_THROW(make_system_model(ops::sigma_z(), ops::sigma_minus(), CVector{0.0, 0.0}), Error);
}
