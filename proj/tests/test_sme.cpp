#include "support.hpp"

#include "qtraj/collision.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/sme.hpp"

#include <gtest/gtest.h>

using namespace qtraj;
using qtraj::test::max_abs_diff;

namespace {

ConditionalDensity single_branch(const CMatrix& rho) {
    ConditionalDensity c;
    c.rho_aa = c.rho_ab = c.rho_bb = rho;
    c.c_alpha = 1.0;
    c.c_beta = 0.0;
    return c;
}

CMatrix projector(const CVector& v) { return outer(v, v); }

} // namespace

TEST(Lindblad, MaximallyMixedWithoutCoupling) {
    std::mt19937_64 gen(1);
    const CMatrix a = test::random_matrix(3, 3, gen);
    const SystemModel m = make_system_model(a + adjoint(a), CMatrix(3, 3), CVector{1.0, 0.0, 0.0});
    EXPECT_LE(frobenius_norm(lindblad(m, CMatrix::identity(3) * (1.0 / 3.0))), 1e-15);
}

TEST(Lindblad, TwoLevelDecay) {
    const CMatrix out = lindblad(test::qubit(), projector({0.0, 1.0}));
    EXPECT_LE(max_abs_diff(out, CMatrix{{1.0, 0.0}, {0.0, -1.0}}), 1e-15);
}

TEST(Lindblad, TracePreserving) {
    std::mt19937_64 gen(2);
    const CMatrix h = test::random_matrix(4, 4, gen);
    const SystemModel m = make_system_model(h + adjoint(h), test::random_matrix(4, 4, gen),
                                            test::random_vector(4, gen));
    for (int i = 0; i < 5; ++i) EXPECT_LE(std::abs(trace(lindblad(m, test::random_density(4, gen)))), 1e-12);
}

TEST(DriftTerm, ZeroAmplitudesReduceToLindblad) {
    std::mt19937_64 gen(3);
    const CMatrix rho = test::random_density(2, gen);
    EXPECT_EQ(drift_term(test::qubit(), rho, 0.0, 0.0), lindblad(test::qubit(), rho));
}

TEST(DriftTerm, DrivenDecayFromGround) {
    // rho = |0><0|: -i[H, rho] = 0, L rho L† = 0, {L†L, rho} = 0,
    // [rho, L†] = -|1><0|, [L, rho] = -|0><1|.
    const cplx a{0.4, -0.9};
    const CMatrix d = drift_term(test::qubit(), projector({1.0, 0.0}), a, a);
    const CMatrix expect{{0.0, -std::conj(a)}, {-a, 0.0}};
    EXPECT_LE(max_abs_diff(d, expect), 1e-15);
}

TEST(DriftTerm, TracelessForMatchedAmplitudes) {
    std::mt19937_64 gen(4);
    const CMatrix h = test::random_matrix(3, 3, gen);
    const SystemModel m = make_system_model(h + adjoint(h), test::random_matrix(3, 3, gen),
                                            test::random_vector(3, gen));
    const CMatrix rho = test::random_density(3, gen);
    EXPECT_LE(std::abs(trace(drift_term(m, rho, {0.3, 0.7}, {0.3, 0.7}))), 1e-12);
}

TEST(Intensities, ZeroWithoutCouplingOrDrive) {
    const SystemModel m = make_system_model(ops::sigma_z(), CMatrix(2, 2), CVector{0.6, 0.8});
    const ConditionalDensity c = single_branch(projector(m.initial_state));
    EXPECT_EQ(jump_intensities(m, c, 0.0, 0.0).total, 0.0);
    EXPECT_EQ(diffusive_intensities(m, c, 0.0, 0.0).total, 0.0);
}

TEST(Intensities, CountingNonNegative) {
    std::mt19937_64 gen(5);
    for (int i = 0; i < 10; ++i) {
        const ConditionalDensity c = single_branch(test::random_density(2, gen));
        EXPECT_GE(jump_intensities(test::qubit(), c, {0.5 * i, -0.2}, 0.0).total, 0.0);
    }
}

TEST(Intensities, HomodyneOnSigmaXEigenstate) {
    const double r = 1.0 / std::sqrt(2.0);
    const ConditionalDensity c = single_branch(projector({r, r}));
    EXPECT_NEAR(diffusive_intensities(test::qubit(), c, 0.0, 0.0).total, 1.0, 1e-15);
}

TEST(Intensities, MatchCollisionLimit) {
    // nu = lim (w1 / w) / tau and mu = lim (w+ - w-) / (w sqrt(tau)) from the
    // collision engine, for a random state under a cat drive.
    std::mt19937_64 gen(6);
    const SystemModel m = test::qubit(test::random_vector(2, gen));
    const double T = 0.5;
    const DriveSpec d = test::even_cat({0.7, 0.3}, T);
    double prev_nu = 0.0, prev_mu = 0.0;
    for (double tau : {1e-2, 1e-3, 1e-4}) {
        const GridSpec g = GridSpec::from_horizon(T, tau);
        const CollisionEngine ec(m, d, g, Scheme::Counting), eh(m, d, g, Scheme::Homodyne);
        const ConditionalDensity c = ec.conditional_density(ec.initial_state());
        const double nu = jump_intensities(m, c, d.alpha(0.0), d.beta(0.0)).total;
        const double mu = diffusive_intensities(m, c, d.alpha(0.0), d.beta(0.0)).total;
        const auto wc = ec.outcome_weights(ec.initial_state());
        const auto wh = eh.outcome_weights(eh.initial_state());
        const double nu_err = std::abs(wc[1] / (wc[0] + wc[1]) / tau - nu);
        const double mu_err = std::abs((wh[1] - wh[0]) / (wh[0] + wh[1]) / std::sqrt(tau) - mu);
        EXPECT_LE(nu_err, 5.0 * tau);
        EXPECT_LE(mu_err, 5.0 * tau);
        if (prev_nu > 0.0) EXPECT_LT(nu_err, 0.2 * prev_nu);
        if (prev_mu > 0.0) EXPECT_LT(mu_err, 0.2 * prev_mu);
        prev_nu = nu_err;
        prev_mu = mu_err;
    }
}

TEST(JumpStep, NoClickWithoutCouplingIsUnitary) {
    const SystemModel m = make_system_model(ops::sigma_x(), CMatrix(2, 2), CVector{1.0, 0.0});
    ConditionalDensity c = single_branch(projector(m.initial_state));
    const double dt = 0.05;
    const JumpStep s = jump_sme_step_with(m, c, make_propagator(m, 0.0, 0.0, dt), 0);
    EXPECT_EQ(s.intensity, 0.0);
    const CMatrix u = matexp(ops::sigma_x(), -kI * dt);
    EXPECT_LE(max_abs_diff(c.assembled(), u * projector(m.initial_state) * adjoint(u)), 1e-14);
}

TEST(JumpStep, ClickFromExcitedRelaxes) {
    const SystemModel m = test::qubit();
    ConditionalDensity c = single_branch(projector({0.0, 1.0}));
    jump_sme_step_with(m, c, make_propagator(m, 0.0, 0.0, 1e-3), 1);
    EXPECT_LE(max_abs_diff(c.assembled(), projector({1.0, 0.0})), 1e-15);
}

TEST(JumpStep, ClickAtZeroIntensityThrows) {
    const SystemModel m = test::qubit(CVector{1.0, 0.0});
    ConditionalDensity c = single_branch(projector({1.0, 0.0}));
    EXPECT_THROW(jump_sme_step_with(m, c, make_propagator(m, 0.0, 0.0, 1e-3), 1), JumpAtZeroIntensity);
}

TEST(DiffusiveStep, ZeroIncrementIsPureDrift) {
    const SystemModel m = make_system_model(ops::sigma_y(), CMatrix(2, 2), CVector{1.0, 0.0});
    ConditionalDensity c = single_branch(projector(m.initial_state));
    const double dt = 0.02;
    diffusive_sme_step_with(m, c, make_propagator(m, 0.0, 0.0, dt), 0.0);
    const CMatrix u = matexp(ops::sigma_y(), -kI * dt);
    EXPECT_LE(max_abs_diff(c.assembled(), u * projector(m.initial_state) * adjoint(u)), 1e-14);
}

TEST(DiffusiveStep, PhotocurrentIsMartingale) {
    // Vacuum input, L = sigma-: E[dq] / dt = mu_t over many steps.
    const double r = 1.0 / std::sqrt(2.0);
    const SystemModel m = test::qubit(CVector{r, r});
    const double dt = 1e-3;
    const StepPropagator p = make_propagator(m, 0.0, 0.0, dt);
    TrajectoryRng rng(9, 0);
    double resid = 0.0;
    const int n = 10000;
    ConditionalDensity c = single_branch(projector(m.initial_state));
    for (int i = 0; i < n; ++i) {
        if (i % 500 == 0) c = single_branch(projector(m.initial_state));
        const DiffusiveStep s = diffusive_sme_step(m, c, p, rng);
        resid += s.dq - s.intensity * dt;
    }
    // Each residual is dW ~ Normal(0, dt).
    EXPECT_LE(std::abs(resid / n / dt), 3.0 / std::sqrt(n * dt));
}

TEST(DiffusiveStep, BinaryAndWienerAgreeOnAverage) {
    const double T = 1.0, dt = 1e-2;
    const DriveSpec d = test::even_cat(0.8, T);
    const SmeSchedule sched(test::qubit(), d, GridSpec::from_horizon(T, dt));
    const int n = 1500;
    double mean[2] = {0.0, 0.0}, sq[2] = {0.0, 0.0};
    for (int mode = 0; mode < 2; ++mode) {
        for (int i = 0; i < n; ++i) {
            TrajectoryRng rng(31, i);
            ConditionalDensity c = sched.initial_state();
            for (std::size_t j = 0; j < sched.grid().steps; ++j)
                diffusive_sme_step(sched.model(), c, sched.at(j), rng,
                                   mode ? NoiseMode::Binary : NoiseMode::Wiener);
            const double z = trace(ops::sigma_z() * c.assembled()).real();
            mean[mode] += z;
            sq[mode] += z * z;
        }
        mean[mode] /= n;
        sq[mode] = sq[mode] / n - mean[mode] * mean[mode];
    }
    EXPECT_LE(std::abs(mean[0] - mean[1]), 3.0 * std::sqrt((sq[0] + sq[1]) / n));
}

TEST(StepPropagator, FrozenMatchesConstantWaveform) {
    const double T = 1.0, dt = 0.01;
    const DriveSpec d = test::even_cat({0.3, 0.4}, T);
    const StepPropagator a = make_propagator(test::qubit(), d, 0.2, dt);
    const StepPropagator b = make_propagator(test::qubit(), d.alpha(0.2), d.beta(0.2), dt);
    EXPECT_LE(max_abs_diff(a.drift_a, b.drift_a), 1e-15);
    EXPECT_LE(max_abs_diff(a.drift_b, b.drift_b), 1e-15);
    EXPECT_LE(std::abs(a.scale_ab - b.scale_ab), 1e-15);
}

TEST(SmeSchedule, InitialStateIsProduct) {
    const CVector psi{0.8, {0.0, 0.6}};
    const SmeSchedule s(test::qubit(psi), test::even_cat(1.0, 1.0), GridSpec::from_horizon(1.0, 0.01));
    const ConditionalDensity c = s.initial_state();
    EXPECT_LE(max_abs_diff(c.assembled(), projector(psi)), 1e-12);
    EXPECT_EQ(c.rho_ab.rows(), 2u);
}

TEST(JumpStep, TrajectoryStaysPhysical) {
    const double T = 2.0;
    const SmeSchedule s(test::qubit(), test::even_cat({0.8, 0.4}, T), GridSpec::from_horizon(T, 1e-3));
    TrajectoryRng rng(12, 0);
    ConditionalDensity c = s.initial_state();
    for (std::size_t j = 0; j < s.grid().steps; ++j) {
        jump_sme_step(s.model(), c, s.at(j), rng);
        const CMatrix rho = c.assembled();
        ASSERT_NEAR(trace(rho).real(), 1.0, 1e-12);
        ASSERT_EQ(c.rho_ba(), adjoint(c.rho_ab));
        ASSERT_GE(hermitian_eigenvalues(rho).front(), -1e-10);
        ASSERT_NEAR(purity(c.rho_aa * (1.0 / trace(c.rho_aa).real())), 1.0, 1e-10);
    }
}

TEST(MasterStep, FreeModelIsIdentity) {
    const SystemModel m = make_system_model(CMatrix(2, 2), CMatrix(2, 2), CVector{0.6, 0.8});
    DriveSpec d = test::coherent(0.0, 1.0);
    AprioriState ap = initial_apriori(m, d);
    const AprioriState start = ap;
    for (int i = 0; i < 10; ++i) ap = master_step(m, ap, d, 0.1);
    EXPECT_LE(max_abs_diff(ap.varrho_aa, start.varrho_aa), 1e-15);
    EXPECT_LE(max_abs_diff(ap.varrho_ab, start.varrho_ab), 1e-15);
}

TEST(MasterStep, TraceIdentities) {
    const double T = 2.0, dt = 1e-2;
    const DriveSpec d = test::even_cat({0.9, -0.2}, T);
    const SystemModel m = test::qubit();
    AprioriState ap = initial_apriori(m, d);
    const cplx k = overlap(d.alpha, d.beta, 0.0, T);
    EXPECT_LE(std::abs(trace(ap.varrho_ab) - k), 1e-14);
    for (std::size_t j = 0; j < 200; ++j) {
        ap = master_step(m, ap, d, dt);
        ASSERT_NEAR(trace(ap.varrho_aa).real(), 1.0, 1e-10);
        ASSERT_NEAR(trace(ap.varrho_bb).real(), 1.0, 1e-10);
        ASSERT_LE(std::abs(trace(ap.varrho_ab) - k), 1e-8);
    }
    EXPECT_NEAR(ap.t, T, 1e-12);
}

TEST(MasterStep, FourthOrder) {
    // Self-convergence: error ratio 16 per halving.
    const double T = 1.0;
    const DriveSpec d = test::even_cat({0.9, -0.2}, T);
    const SystemModel m = test::qubit();
    auto solve = [&](std::size_t n) {
        AprioriState ap = initial_apriori(m, d);
        for (std::size_t j = 0; j < n; ++j) ap = master_step(m, ap, d, T / n);
        return ap.assembled(d.c_alpha, d.c_beta);
    };
    const CMatrix ref = solve(1600);
    const double e1 = max_abs_diff(solve(20), ref), e2 = max_abs_diff(solve(40), ref);
    EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.3);
}

TEST(Average, TrivialCases) {
    std::mt19937_64 gen(13);
    const CMatrix rho = test::random_density(3, gen);
    ConditionalDensity c = single_branch(rho);
    EXPECT_LE(max_abs_diff(average_trajectories({c}), rho), 1e-16);
    EXPECT_LE(max_abs_diff(average_trajectories({c, c}), rho), 1e-16);
    EXPECT_THROW(pairwise_mean({}), Error);
}

TEST(Average, JumpEnsembleApproachesMaster) {
    // Small version of the full check: 300 trajectories, bound 5 / sqrt(300).
    const double T = 1.0, dt = 2e-3;
    const DriveSpec d = test::even_cat(1.0, T);
    const SystemModel m = test::qubit(CVector{1.0, 0.0});
    const SmeSchedule s(m, d, GridSpec::from_horizon(T, dt));
    const int n = 300;
    std::vector<ConditionalDensity> runs;
    for (int i = 0; i < n; ++i) {
        TrajectoryRng rng(1, i);
        ConditionalDensity c = s.initial_state();
        for (std::size_t j = 0; j < s.grid().steps; ++j) jump_sme_step(m, c, s.at(j), rng);
        runs.push_back(c);
    }
    AprioriState ap = initial_apriori(m, d);
    for (std::size_t j = 0; j < s.grid().steps; ++j) ap = master_step(m, ap, d, dt);
    EXPECT_LE(trace_distance(average_trajectories(runs), ap.assembled(d.c_alpha, d.c_beta)),
              5.0 / std::sqrt(n));
}
