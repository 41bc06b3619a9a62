#include "qtraj/exact_chain.hpp"

#include "qtraj/errors.hpp"
#include "qtraj/operators.hpp"

#include <cmath>
#include <string>

namespace qtraj {

CVector qubit_coherent_state(cplx a, double tau) {
    const double r = std::abs(a);
    if (r == 0.0) return CVector{1.0, 0.0};
    const double angle = std::sqrt(tau) * r;
    return CVector{std::cos(angle), (a / r) * std::sin(angle)};
}

CMatrix collision_unitary(const SystemModel& model, double tau) {
    const CMatrix& L = model.coupling;
    CMatrix h = kron(CMatrix::identity(2), model.hamiltonian);
    const CMatrix coupling =
        kron(ops::sigma_plus(), L) - kron(ops::sigma_minus(), adjoint(L));
    h += (kI / std::sqrt(tau)) * coupling;
    return matexp(h, -kI * tau);
}

ExactChain::ExactChain(const DriveSpec& drive, const SystemModel& model, const GridSpec& grid,
                       Scheme scheme, std::size_t max_qubits)
    : n_(grid.steps), d_(model.dim), scheme_(scheme) {
    if (n_ > max_qubits) {
        throw DimensionOverflow("exact chain with " + std::to_string(n_) +
                                " qubits exceeds the limit of " + std::to_string(max_qubits));
    }
    const std::size_t configs = std::size_t{1} << n_;
    unitary_ = collision_unitary(model, grid.tau);

    const auto a = discretize(drive.alpha, grid);
    const auto b = discretize(drive.beta, grid);
    std::vector<CVector> qa, qb;
    for (std::size_t k = 0; k < n_; ++k) {
        qa.push_back(qubit_coherent_state(a[k], grid.tau));
        qb.push_back(qubit_coherent_state(b[k], grid.tau));
    }

    state_ = CVector(configs * d_);
    for (std::size_t q = 0; q < configs; ++q) {
        cplx amp_a = drive.c_alpha;
        cplx amp_b = drive.c_beta;
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t bit = (q >> (n_ - 1 - k)) & 1u;
            amp_a *= qa[k][bit];
            amp_b *= qb[k][bit];
        }
        const cplx amp = amp_a + amp_b;
        for (std::size_t s = 0; s < d_; ++s) state_[q * d_ + s] = amp * model.initial_state[s];
    }
    const double norm = norm_squared(state_);
    if (!(norm > 0.0)) throw ZeroNorm("exact chain initial state vanishes");
    state_ *= 1.0 / std::sqrt(norm);
}

CVector ExactChain::interacted(std::size_t k) const {
    const std::size_t configs = std::size_t{1} << n_;
    const std::size_t mask = std::size_t{1} << (n_ - 1 - k);
    CVector out(state_.size());
    CVector block(2 * d_);
    for (std::size_t q = 0; q < configs; ++q) {
        if (q & mask) continue;
        const std::size_t q1 = q | mask;
        for (std::size_t s = 0; s < d_; ++s) {
            block[s] = state_[q * d_ + s];
            block[d_ + s] = state_[q1 * d_ + s];
        }
        const CVector r = matvec(unitary_, block);
        for (std::size_t s = 0; s < d_; ++s) {
            out[q * d_ + s] = r[s];
            out[q1 * d_ + s] = r[d_ + s];
        }
    }
    return out;
}

CVector ExactChain::projected(const CVector& v, std::size_t k, int index) const {
    const std::size_t configs = std::size_t{1} << n_;
    const std::size_t mask = std::size_t{1} << (n_ - 1 - k);
    CVector out(v.size());
    for (std::size_t q = 0; q < configs; ++q) {
        if (q & mask) continue;
        const std::size_t q1 = q | mask;
        for (std::size_t s = 0; s < d_; ++s) {
            const cplx x0 = v[q * d_ + s];
            const cplx x1 = v[q1 * d_ + s];
            if (scheme_ == Scheme::Counting) {
                (index == 0 ? out[q * d_ + s] : out[q1 * d_ + s]) = index == 0 ? x0 : x1;
            } else {
                // |zeta><zeta| with |zeta> = (|0> + zeta |1>)/sqrt2
                const double zeta = index == 0 ? -1.0 : 1.0;
                const cplx c = 0.5 * (x0 + zeta * x1);
                out[q * d_ + s] = c;
                out[q1 * d_ + s] = zeta * c;
            }
        }
    }
    return out;
}

std::array<double, 2> ExactChain::outcome_probabilities() const {
    if (index_ >= n_) throw GridExhausted("exact chain has no qubits left");
    const CVector v = interacted(index_);
    return {norm_squared(projected(v, index_, 0)), norm_squared(projected(v, index_, 1))};
}

double ExactChain::collide(int outcome) {
    if (index_ >= n_) throw GridExhausted("exact chain has no qubits left");
    int index = outcome;
    if (scheme_ == Scheme::Homodyne) {
        if (outcome != 1 && outcome != -1) throw Error("homodyne outcome must be -1 or +1");
        index = (outcome + 1) / 2;
    } else if (outcome != 0 && outcome != 1) {
        throw Error("counting outcome must be 0 or 1");
    }
    CVector v = projected(interacted(index_), index_, index);
    const double p = norm_squared(v);
    if (!(p > 0.0)) throw ZeroNorm("exact chain: outcome has zero probability");
    v *= 1.0 / std::sqrt(p);
    state_ = std::move(v);
    ++index_;
    return p;
}

CMatrix ExactChain::reduced_state() const {
    const std::size_t configs = std::size_t{1} << n_;
    CMatrix rho(d_, d_);
    for (std::size_t q = 0; q < configs; ++q) {
        const cplx* v = state_.data() + q * d_;
        for (std::size_t i = 0; i < d_; ++i)
            for (std::size_t j = 0; j < d_; ++j) rho(i, j) += v[i] * std::conj(v[j]);
    }
    return rho;
}

ExactChainResult exact_chain(const DriveSpec& drive, const SystemModel& model,
                             const GridSpec& grid, Scheme scheme,
                             const std::vector<int>& outcomes, std::size_t max_qubits) {
    if (outcomes.size() > grid.steps) throw GridExhausted("record longer than grid");
    ExactChain chain(drive, model, grid, scheme, max_qubits);
    ExactChainResult result;
    for (int o : outcomes) {
        double p = 0.0;
        try {
            p = chain.collide(o);
        } catch (const ZeroNorm&) {
            // Impossible record, e.g. an odd photon number from an even cat.
            result.step_probabilities.push_back(0.0);
            result.probability = 0.0;
            return result;
        }
        result.step_probabilities.push_back(p);
        result.probability *= p;
    }
    result.system_state = chain.reduced_state();
    return result;
}

} // namespace qtraj
