#include "support.hpp"

#include "qtraj/collision.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/exact_chain.hpp"

#include <gtest/gtest.h>

using namespace qtraj;
using qtraj::test::max_abs_diff;

namespace {

double completeness_residual(const std::vector<CMatrix>& ks) {
    CMatrix s(ks[0].cols(), ks[0].cols());
    for (const auto& k : ks) s += adjoint(k) * k;
    return one_norm(s - CMatrix::identity(s.rows()));
}

SystemModel free_model() {
    return make_system_model(CMatrix(2, 2), CMatrix(2, 2), CVector{1.0, 0.0});
}

} // namespace

TEST(Kraus, FreeSlotIsTrivial) {
    const KrausPair k = kraus_counting(free_model(), 0.0, 0.1);
    EXPECT_EQ(k.m0, CMatrix::identity(2));
    EXPECT_EQ(k.m1, CMatrix(2, 2));
    const CMatrix r = kraus_homodyne(free_model(), 0.0, 0.1, 1);
    EXPECT_LE(max_abs_diff(r, CMatrix::identity(2) * (1.0 / std::sqrt(2.0))), 1e-16);
}

TEST(Kraus, VacuumUnraveling) {
    const SystemModel m = test::qubit();
    const double tau = 0.02;
    const KrausPair k = kraus_counting(m, 0.0, tau);
    const CMatrix l = m.coupling;
    const CMatrix m0 = CMatrix::identity(2) - tau * (kI * m.hamiltonian + 0.5 * (adjoint(l) * l));
    EXPECT_LE(max_abs_diff(k.m0, m0), 1e-16);
    EXPECT_LE(max_abs_diff(k.m1, std::sqrt(tau) * l), 1e-16);
}

TEST(Kraus, CountingCompleteness) {
    const double tau = 0.01;
    const KrausPair k = kraus_counting(test::qubit(), 1.0, tau);
    EXPECT_LE(completeness_residual({k.m0, k.m1}), 5.0 * tau * tau);
}

TEST(Kraus, HomodyneDifferenceAndCompleteness) {
    const SystemModel m = test::qubit();
    const double tau = 0.01;
    const cplx a = 0.5;
    const CMatrix rp = kraus_homodyne(m, a, tau, 1), rm = kraus_homodyne(m, a, tau, -1);
    CMatrix la = m.coupling;
    la(0, 0) += a;
    la(1, 1) += a;
    EXPECT_LE(max_abs_diff(rp - rm, std::sqrt(2.0 * tau) * la), 1e-15);
    EXPECT_LE(completeness_residual({rp, rm}), 5.0 * std::pow(tau, 1.5));
    EXPECT_THROW(kraus_homodyne(m, a, tau, 0), Error);
}

TEST(CollisionEngine, ReducesBitwiseToCoherentRecurrence) {
    const SystemModel m = test::qubit(CVector{0.6, 0.8});
    const double T = 1.0, tau = 0.01;
    const GridSpec g = GridSpec::from_horizon(T, tau);
    const Waveform alpha = Waveform::gaussian({0.9, 0.3}, 0.5, 0.2, T);
    DriveSpec d;
    d.alpha = alpha;
    d.beta = Waveform::constant(0.7, T);
    d.c_beta = 0.0;
    for (Scheme s : {Scheme::Counting, Scheme::Homodyne}) {
        const CollisionEngine e(m, d, g, s);
        const CoherentEngine ref(m, alpha, g, s);
        TrajectoryRng r1(5, 9), r2(5, 9);
        BranchState b = e.initial_state();
        CVector psi = ref.initial_state();
        int scale = 0;
        for (std::size_t j = 0; j < g.steps; ++j) {
            const StepResult x = e.step(b, r1);
            const StepResult y = ref.step(psi, j, scale, r2);
            ASSERT_EQ(x.outcome, y.outcome) << j;
            ASSERT_EQ(x.probability, y.probability) << j;
            ASSERT_TRUE(b.psi == psi) << "step " << j;
        }
    }
}

TEST(CollisionEngine, FreeFieldClickStatistics) {
    // L = H = 0, single coherent state: clicks per slot with probability
    // |a|^2 tau + O(tau^2), so the total is close to Poisson(|a|^2 T).
    const cplx a{0.6, 0.8};
    const double T = 1.0, tau = 0.01;
    const GridSpec g = GridSpec::from_horizon(T, tau);
    const CollisionEngine e(free_model(), test::coherent(a, T), g, Scheme::Counting);
    const int n = 4000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const Trajectory tr = run_trajectory(e, 17, i);
        for (int o : tr.record.outcomes) s += o;
    }
    const double lambda = std::norm(a) * T;
    EXPECT_NEAR(s / n, lambda, 3.0 * std::sqrt(lambda / n));
    // Per-slot probability.
    const auto w = e.outcome_weights(e.initial_state());
    EXPECT_NEAR(w[1] / (w[0] + w[1]), std::norm(a) * tau, 2.0 * tau * tau);
}

TEST(CollisionEngine, EmptyGridGivesEmptyRecord) {
    const CollisionEngine e(test::qubit(), test::coherent(1.0, 1.0), GridSpec{0.1, 0}, Scheme::Counting);
    const Trajectory tr = run_trajectory(e, 1, 0, true);
    EXPECT_TRUE(tr.record.outcomes.empty());
    EXPECT_EQ(tr.history.size(), 1u);
    BranchState b = e.initial_state();
    TrajectoryRng rng(1, 0);
    EXPECT_THROW(e.step(b, rng), GridExhausted);
}

TEST(CollisionEngine, SameSeedSameRecord) {
    const double T = 1.0;
    const CollisionEngine e(test::qubit(), test::even_cat(1.0, T), GridSpec::from_horizon(T, 0.01),
                            Scheme::Homodyne);
    const Trajectory a = run_trajectory(e, 3, 11), b = run_trajectory(e, 3, 11), c = run_trajectory(e, 3, 12);
    EXPECT_EQ(a.record.outcomes, b.record.outcomes);
    EXPECT_EQ(a.record.log_weight, b.record.log_weight);
    EXPECT_NE(a.record.outcomes, c.record.outcomes);
}

TEST(CollisionEngine, LogWeightOfNoClickRecord) {
    const double T = 0.5;
    const GridSpec g = GridSpec::from_horizon(T, 0.05);
    const CollisionEngine e(test::qubit(), test::even_cat(0.7, T), g, Scheme::Counting);
    const Trajectory tr = replay_trajectory(e, std::vector<int>(g.steps, 0));
    double s = 0.0;
    for (double p : tr.record.probabilities) s += std::log(p);
    EXPECT_NEAR(tr.record.log_weight, s, 1e-14);
    // Independent recomputation of each p_j(0) from the outcome weights.
    BranchState b = e.initial_state();
    double s2 = 0.0;
    for (std::size_t j = 0; j < g.steps; ++j) {
        const auto w = e.outcome_weights(b);
        s2 += std::log(w[0] / (w[0] + w[1]));
        e.step_with_outcome(b, 0);
    }
    EXPECT_NEAR(tr.record.log_weight, s2, 1e-13);
}

TEST(CollisionEngine, InitialConditionalStateIsProduct) {
    const CVector psi{0.6, {0.0, 0.8}};
    const SystemModel m = test::qubit(psi);
    const CMatrix p = outer(psi, psi);
    const GridSpec g = GridSpec::from_horizon(1.0, 0.01);
    const CollisionEngine single(m, test::coherent(1.0, 1.0), g, Scheme::Counting);
    EXPECT_LE(max_abs_diff(single.conditional_density(single.initial_state()).assembled(), p), 1e-15);
    const CollisionEngine cat(m, test::even_cat(1.0, 1.0), g, Scheme::Counting);
    const ConditionalDensity c = cat.conditional_density(cat.initial_state());
    EXPECT_LE(max_abs_diff(c.assembled(), p), 1e-12);
    // K_0 is built from first-order slot overlaps, so the raw weight is only
    // normalized to O(tau).
    EXPECT_NEAR(cat.weight(cat.initial_state()), 1.0, 5.0 * g.tau);
}

TEST(CollisionEngine, AssembledStateStaysPhysical) {
    const double T = 2.0;
    const GridSpec g = GridSpec::from_horizon(T, 0.005);
    for (Scheme s : {Scheme::Counting, Scheme::Homodyne}) {
        const CollisionEngine e(test::qubit(), test::even_cat({0.8, 0.4}, T), g, s);
        for (std::uint64_t i = 0; i < 5; ++i) {
            const Trajectory tr = run_trajectory(e, 21, i, true);
            for (const BranchState& b : tr.history) {
                const ConditionalDensity c = e.conditional_density(b);
                const CMatrix rho = c.assembled();
                ASSERT_LE(hermiticity_defect(rho), 1e-14);
                ASSERT_NEAR(trace(rho).real(), 1.0, 1e-12);
                ASSERT_GE(hermitian_eigenvalues(rho).front(), -1e-12);
                ASSERT_NEAR(purity(c.rho_aa * (1.0 / trace(c.rho_aa).real())), 1.0, 1e-12);
            }
        }
    }
}

TEST(CollisionEngine, WeightRatioTracksTrace) {
    const double T = 0.5;
    const GridSpec g = GridSpec::from_horizon(T, 0.01);
    const CollisionEngine e(test::qubit(), test::even_cat(1.0, T), g, Scheme::Counting);
    BranchState b = e.initial_state();
    TrajectoryRng rng(4, 0);
    for (std::size_t j = 0; j < g.steps; ++j) {
        const double before = e.weight(b);
        const StepResult r = e.step(b, rng);
        EXPECT_NEAR(r.weight_ratio, e.weight(b) / before, 1e-14);
    }
}

TEST(CollisionEngine, FieldStateTraceMatchesWeight) {
    const GridSpec g = GridSpec::from_horizon(1.0, 0.02);
    const CollisionEngine e(test::qubit(), test::even_cat(0.8, 1.0), g, Scheme::Homodyne);
    const Trajectory tr = run_trajectory(e, 8, 0, true);
    for (const BranchState& b : tr.history)
        EXPECT_NEAR(e.field_state(b).trace().real(), e.weight(b), 1e-12);
}

TEST(CollisionEngine, RejectsBadOutcome) {
    const CollisionEngine e(test::qubit(), test::coherent(1.0, 1.0), GridSpec::from_horizon(1.0, 0.1),
                            Scheme::Counting);
    BranchState b = e.initial_state();
    EXPECT_THROW(e.step_with_outcome(b, -1), Error);
}

// --- exact chain -----------------------------------------------------------

TEST(ExactChain, QubitCoherentStateAndUnitary) {
    const CVector q = qubit_coherent_state({0.3, 0.4}, 0.04);
    EXPECT_NEAR(norm_squared(q), 1.0, 1e-15);
    EXPECT_NEAR(q[0].real(), std::cos(0.2 * 0.5), 1e-15);
    const CMatrix v = collision_unitary(test::qubit(), 0.04);
    EXPECT_LE(max_abs_diff(adjoint(v) * v, CMatrix::identity(4)), 1e-13);
}

TEST(ExactChain, FreeSingleSlot) {
    const GridSpec g{0.1, 1};
    const ExactChainResult r = exact_chain(test::coherent(0.0, 0.1), free_model(), g, Scheme::Counting, {0});
    EXPECT_NEAR(r.probability, 1.0, 1e-15);
    EXPECT_LE(max_abs_diff(r.system_state, outer(CVector{1.0, 0.0}, CVector{1.0, 0.0})), 1e-15);
}

TEST(ExactChain, SingleSlotClickProbabilityIsSecondOrder) {
    // p(1) from the exact chain vs nu_0 tau from the recurrence: gap O(tau^2).
    const SystemModel m = test::qubit(CVector{0.6, 0.8});
    std::vector<double> gaps;
    for (double tau : {0.04, 0.02, 0.01}) {
        const GridSpec g{tau, 1};
        const DriveSpec d = test::coherent({0.7, 0.2}, tau);
        const double pe = exact_chain(d, m, g, Scheme::Counting, {1}).probability;
        const CollisionEngine e(m, d, g, Scheme::Counting);
        gaps.push_back(std::abs(pe - e.intensity(e.initial_state()) * tau));
    }
    const double slope1 = std::log2(gaps[0] / gaps[1]), slope2 = std::log2(gaps[1] / gaps[2]);
    EXPECT_NEAR(slope1, 2.0, 0.3);
    EXPECT_NEAR(slope2, 2.0, 0.3);
}

TEST(ExactChain, RecordProbabilitiesSumToOne) {
    const std::size_t n = 6;
    const GridSpec g{0.04, n};
    const DriveSpec d = test::even_cat(1.0, 0.04 * n);
    for (Scheme s : {Scheme::Counting, Scheme::Homodyne}) {
        double sum = 0.0;
        for (std::size_t r = 0; r < (1u << n); ++r) {
            std::vector<int> o;
            for (std::size_t k = 0; k < n; ++k) {
                const int bit = (r >> k) & 1;
                o.push_back(s == Scheme::Counting ? bit : 2 * bit - 1);
            }
            sum += exact_chain(d, test::qubit(), g, s, o).probability;
        }
        EXPECT_NEAR(sum, 1.0, 1e-10);
    }
}

TEST(ExactChain, PrefixMarginalsAgree) {
    // Probability of a prefix equals the sum over its extensions.
    const GridSpec g{0.05, 4};
    const DriveSpec d = test::even_cat(0.9, 0.2);
    const double p = exact_chain(d, test::qubit(), g, Scheme::Counting, {1, 0}).probability;
    double s = 0.0;
    for (int a : {0, 1})
        for (int b : {0, 1}) s += exact_chain(d, test::qubit(), g, Scheme::Counting, {1, 0, a, b}).probability;
    EXPECT_NEAR(p, s, 1e-14);
}

TEST(ExactChain, TooManyQubits) {
    const GridSpec g{0.01, 12};
    EXPECT_THROW(ExactChain(test::even_cat(1.0, 0.12), test::qubit(), g, Scheme::Counting, 10),
                 DimensionOverflow);
}

TEST(ExactChain, RecurrenceStateCloseToOracle) {
    // Conditional system state after a short record agrees to O(tau).
    const std::size_t n = 5;
    const double tau = 0.01;
    const GridSpec g{tau, n};
    const DriveSpec d = test::even_cat(1.0, tau * n);
    const std::vector<int> rec{0, 1, 0, 0, 1};
    const ExactChainResult ex = exact_chain(d, test::qubit(), g, Scheme::Counting, rec);
    const CollisionEngine e(test::qubit(), d, g, Scheme::Counting);
    const Trajectory tr = replay_trajectory(e, rec, true);
    const CMatrix rho = e.conditional_density(tr.history.back()).assembled();
    EXPECT_LE(trace_distance(rho, ex.system_state), 5.0 * tau);
}
