#pragma once

// Brute-force oracle: the full state of n field qubits and the system, with
// exact collision unitaries and exact single-qubit coherent states.
//
// Joint basis index = q * d + s, where q is the n-bit qubit configuration
// (qubit 0 is the most significant bit) and s the system index.

#include "qtraj/collision.hpp"
#include "qtraj/linalg.hpp"
#include "qtraj/model.hpp"

#include <cstddef>
#include <vector>

namespace qtraj {

inline constexpr std::size_t kDefaultMaxQubits = 10;

// exp(sqrt(tau)(a sigma+ - a* sigma-)) |0> = cos(sqrt(tau)|a|)|0> + (a/|a|) sin(sqrt(tau)|a|)|1>.
CVector qubit_coherent_state(cplx a, double tau);

// V = exp(-i tau [1 ⊗ H + (i/sqrt(tau)) (sigma+ ⊗ L - sigma- ⊗ L†)]), qubit ⊗ system.
CMatrix collision_unitary(const SystemModel& model, double tau);

class ExactChain {
public:
    ExactChain(const DriveSpec& drive, const SystemModel& model, const GridSpec& grid,
               Scheme scheme, std::size_t max_qubits = kDefaultMaxQubits);

    std::size_t n_qubits() const noexcept { return n_; }
    std::size_t collision_index() const noexcept { return index_; }
    const CVector& joint_state() const noexcept { return state_; }

    // Probabilities of the two outcomes of the next collision, ordered as in
    // the collision engine.
    std::array<double, 2> outcome_probabilities() const;
    // Collides the next qubit, projects onto `outcome`, renormalizes.
    // Returns the outcome's probability.
    double collide(int outcome);

    // System state with all qubits traced out.
    CMatrix reduced_state() const;

private:
    CVector interacted(std::size_t k) const;
    CVector projected(const CVector& v, std::size_t k, int index) const;

    std::size_t n_;
    std::size_t d_;
    Scheme scheme_;
    CMatrix unitary_;
    CVector state_;
    std::size_t index_ = 0;
};

struct ExactChainResult {
    double probability = 1.0;
    std::vector<double> step_probabilities;
    CMatrix system_state;
};

// Joint probability of `outcomes` (a prefix of the grid is allowed) and the
// post-measurement reduced system state. A record of probability zero stops
// early with probability 0 and an empty state.
ExactChainResult exact_chain(const DriveSpec& drive, const SystemModel& model,
                             const GridSpec& grid, Scheme scheme,
                             const std::vector<int>& outcomes,
                             std::size_t max_qubits = kDefaultMaxQubits);

} // namespace qtraj
