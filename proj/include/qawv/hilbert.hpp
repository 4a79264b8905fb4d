#pragma once

// Finite-dimensional Hilbert-space kernel: pure states, Hermitian observables
// with cached spectral decompositions, and the impulsive back-reaction e^{iAq}.

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace qawv {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kDefaultPoleTol = 1e-12;
inline constexpr double kDefaultGroupTol = 1e-9;

class StateVector {
public:
    // Normalizes the amplitudes; throws on a zero vector.
    explicit StateVector(CVector amplitudes);
    static StateVector basis(std::size_t dim, std::size_t index);
    // Keeps the amplitudes as given. Used for evolved states and test fixtures.
    static StateVector unnormalized(CVector amplitudes);

    std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
    const CVector& amplitudes() const { return amps_; }
    double norm() const { return amps_.norm(); }

private:
    struct Raw {};
    StateVector(CVector amplitudes, Raw) : amps_(std::move(amplitudes)) {}
    CVector amps_;
};

// <a|b>, antilinear in the first argument.
cplx inner(const StateVector& a, const StateVector& b);

struct Eigenspace {
    double eigenvalue;
    CMatrix projector;
    std::size_t rank;
};

class Observable {
public:
    std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
    const CMatrix& matrix() const { return matrix_; }
    // Sorted by ascending eigenvalue, one entry per degenerate group.
    const std::vector<Eigenspace>& spectrum() const { return spectrum_; }
    double min_eigenvalue() const { return spectrum_.front().eigenvalue; }
    double max_eigenvalue() const { return spectrum_.back().eigenvalue; }
    double spectral_range() const { return max_eigenvalue() - min_eigenvalue(); }
    // Smallest separation between distinct eigenvalues; 0 for a multiple of identity.
    double min_gap() const;

    // <psi|A|psi> and <psi|(A - <A>)^2|psi>.
    double expectation(const StateVector& psi) const;
    double variance(const StateVector& psi) const;

private:
    friend Observable spectral_decompose(const CMatrix&, double);
    CMatrix matrix_;
    std::vector<Eigenspace> spectrum_;
};

// Eigenvalues closer than group_tol * (spectral range) share one projector.
Observable spectral_decompose(const CMatrix& matrix, double group_tol = kDefaultGroupTol);

// e^{i a q}. The rounding error of the product a*q is carried as a first-order
// phase correction, which matters when many such phases nearly cancel.
cplx phase(double a, double q);

// Sum_a e^{iaq} Pi_a |psi>.
StateVector evolve(const Observable& obs, double q, const StateVector& psi);

// <psi2| e^{iAq} |psi1>.
cplx transition_amplitude(const StateVector& psi2, const Observable& obs, double q,
                          const StateVector& psi1);

// <psi2|A|psi1> / <psi2|psi1>. Throws PoleError if |<psi2|psi1>| <= pole_tol.
cplx weak_value(const StateVector& psi2, const Observable& obs, const StateVector& psi1,
                double pole_tol = kDefaultPoleTol);

// Orthonormal post-selection basis. Throws unless the Gram matrix is the identity
// within 1e-10.
class PostSelectionBasis {
public:
    explicit PostSelectionBasis(std::vector<StateVector> vectors);
    // Eigenbasis of a non-degenerate observable (one vector per eigenvalue).
    static PostSelectionBasis eigenbasis(const CMatrix& hermitian);

    std::size_t dim() const { return vectors_.size(); }
    const std::vector<StateVector>& vectors() const { return vectors_; }

private:
    std::vector<StateVector> vectors_;
};

// Largest |M - M^dagger| element.
double hermitian_asymmetry(const CMatrix& m);

}  // namespace qawv
