#include "qawv/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qawv/errors.hpp"

namespace qawv {

namespace {

void require_dims(std::size_t a, std::size_t b, const char* where) {
    if (a != b) {
        std::ostringstream os;
        os << where << ": dimension mismatch (" << a << " vs " << b << ")";
        throw DimensionError(os.str());
    }
}

}  // namespace

StateVector::StateVector(CVector amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.size() == 0) throw DimensionError("StateVector: empty amplitude list");
    const double n = amps_.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw PreconditionError("StateVector: cannot normalize a zero or non-finite vector");
    amps_ /= n;
}

StateVector StateVector::basis(std::size_t dim, std::size_t index) {
    if (index >= dim) throw DimensionError("StateVector::basis: index out of range");
    CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
    v[static_cast<Eigen::Index>(index)] = 1.0;
    return StateVector(std::move(v), Raw{});
}

StateVector StateVector::unnormalized(CVector amplitudes) {
    if (amplitudes.size() == 0) throw DimensionError("StateVector: empty amplitude list");
    return StateVector(std::move(amplitudes), Raw{});
}

cplx inner(const StateVector& a, const StateVector& b) {
    require_dims(a.dim(), b.dim(), "inner");
    return a.amplitudes().dot(b.amplitudes());
}

double hermitian_asymmetry(const CMatrix& m) {
    if (m.rows() != m.cols()) return INFINITY;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double Observable::min_gap() const {
    double gap = 0.0;
    for (std::size_t i = 1; i < spectrum_.size(); ++i) {
        const double d = spectrum_[i].eigenvalue - spectrum_[i - 1].eigenvalue;
        gap = (i == 1) ? d : std::min(gap, d);
    }
    return gap;
}

double Observable::expectation(const StateVector& psi) const {
    require_dims(dim(), psi.dim(), "Observable::expectation");
    return psi.amplitudes().dot(matrix_ * psi.amplitudes()).real() / psi.amplitudes().squaredNorm();
}

double Observable::variance(const StateVector& psi) const {
    require_dims(dim(), psi.dim(), "Observable::variance");
    const double mean = expectation(psi);
    const CVector centred = matrix_ * psi.amplitudes() - mean * psi.amplitudes();
    return centred.squaredNorm() / psi.amplitudes().squaredNorm();
}

Observable spectral_decompose(const CMatrix& matrix, double group_tol) {
    if (matrix.rows() == 0 || matrix.rows() != matrix.cols())
        throw DimensionError("spectral_decompose: matrix must be square and non-empty");
    if (!(group_tol > 0.0)) throw PreconditionError("spectral_decompose: group_tol must be positive");
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    const double asym = hermitian_asymmetry(matrix);
    if (!(asym <= 1e-12 * scale)) {
        std::ostringstream os;
        os << "spectral_decompose: matrix is not Hermitian (max |M - M^dagger| = " << asym << ")";
        throw PreconditionError(os.str());
    }

    // Symmetrize so the solver sees an exactly Hermitian input.
    const CMatrix h = 0.5 * (matrix + matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    if (solver.info() != Eigen::Success) throw PreconditionError("spectral_decompose: eigensolver failed");
    const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
    const CMatrix& evecs = solver.eigenvectors();

    const Eigen::Index n = h.rows();
    const double range = evals[n - 1] - evals[0];
    const double merge = group_tol * range;

    Observable obs;
    obs.matrix_ = h;
    Eigen::Index start = 0;
    while (start < n) {
        Eigen::Index stop = start + 1;
        while (stop < n && evals[stop] - evals[stop - 1] <= merge) ++stop;
        const Eigen::Index rank = stop - start;
        const CMatrix block = evecs.middleCols(start, rank);
        Eigenspace space;
        space.eigenvalue = evals.segment(start, rank).mean();
        space.projector = block * block.adjoint();
        space.rank = static_cast<std::size_t>(rank);
        obs.spectrum_.push_back(std::move(space));
        start = stop;
    }
    return obs;
}

cplx phase(double a, double q) {
    const double hi = a * q;
    const double lo = std::fma(a, q, -hi);
    return std::polar(1.0, hi) * cplx(1.0, lo);
}

StateVector evolve(const Observable& obs, double q, const StateVector& psi) {
    require_dims(obs.dim(), psi.dim(), "evolve");
    CVector out = CVector::Zero(psi.amplitudes().size());
    for (const auto& space : obs.spectrum()) {
        out += phase(space.eigenvalue, q) * (space.projector * psi.amplitudes());
    }
    return StateVector::unnormalized(std::move(out));
}

cplx transition_amplitude(const StateVector& psi2, const Observable& obs, double q,
                          const StateVector& psi1) {
    require_dims(psi2.dim(), psi1.dim(), "transition_amplitude");
    return inner(psi2, evolve(obs, q, psi1));
}

cplx weak_value(const StateVector& psi2, const Observable& obs, const StateVector& psi1,
                double pole_tol) {
    require_dims(obs.dim(), psi1.dim(), "weak_value");
    require_dims(psi2.dim(), psi1.dim(), "weak_value");
    const cplx overlap = inner(psi2, psi1);
    if (!(std::abs(overlap) > pole_tol)) {
        std::ostringstream os;
        os << "weak_value: pre- and post-selected states are orthogonal (|<psi2|psi1>| = "
           << std::abs(overlap) << ")";
        throw PoleError(os.str(), std::abs(overlap));
    }
    return psi2.amplitudes().dot(obs.matrix() * psi1.amplitudes()) / overlap;
}

PostSelectionBasis::PostSelectionBasis(std::vector<StateVector> vectors) : vectors_(std::move(vectors)) {
    if (vectors_.empty()) throw DimensionError("PostSelectionBasis: no vectors");
    const std::size_t d = vectors_.front().dim();
    if (vectors_.size() != d) throw DimensionError("PostSelectionBasis: need exactly dim vectors");
    for (std::size_t i = 0; i < d; ++i) {
        require_dims(vectors_[i].dim(), d, "PostSelectionBasis");
        for (std::size_t k = 0; k < d; ++k) {
            const cplx g = inner(vectors_[i], vectors_[k]);
            const double target = (i == k) ? 1.0 : 0.0;
            if (std::abs(g - target) > 1e-10)
                throw PreconditionError("PostSelectionBasis: vectors are not orthonormal");
        }
    }
}

PostSelectionBasis PostSelectionBasis::eigenbasis(const CMatrix& hermitian) {
    const Observable obs = spectral_decompose(hermitian);
    if (obs.spectrum().size() != obs.dim())
        throw PreconditionError("PostSelectionBasis::eigenbasis: observable is degenerate");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(obs.matrix());
    std::vector<StateVector> vs;
    for (Eigen::Index i = 0; i < solver.eigenvectors().cols(); ++i)
        vs.emplace_back(CVector(solver.eigenvectors().col(i)));
    return PostSelectionBasis(std::move(vs));
}

}  // namespace qawv
