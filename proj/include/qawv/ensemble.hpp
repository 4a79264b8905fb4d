#pragma once

// Pointer statistics of von Neumann measurements on pre-selected (PME) and
// pre- and post-selected (PPME) ensembles, expressed through the weak-value
// orbit q -> A_w(q) and the likelihood P12(q) = |<psi2|e^{iAq}|psi1>|^2.

#include <memory>
#include <string>
#include <vector>

#include "qawv/hilbert.hpp"
#include "qawv/pointer.hpp"

namespace qawv {

// Supplies the back-reaction amplitude G(q) = <psi2|e^{iAq}|psi1> and the
// complex weak value W(q) = <psi2|A e^{iAq}|psi1> / G(q) in ratio form.
class AmplitudeSource {
public:
    virtual ~AmplitudeSource() = default;
    virtual cplx amplitude(double q) const = 0;
    // Throws PoleError where G(q) vanishes.
    virtual cplx weak_value(double q) const = 0;
    // G(q) * W(q), finite even where G vanishes.
    virtual cplx numerator(double q) const { return amplitude(q) * weak_value(q); }
};

// <psi2| e^{iAq} |psi1> for a finite-dimensional system, evaluated from the
// cached coefficients <psi2|Pi_a|psi1>. Near-orthogonal states make G a sum of
// O(1) terms cancelling to O(1e-6) or less, so the coefficients and the phase
// sums are carried in extended precision and rounded once on return.
class FiniteAmplitudeSource final : public AmplitudeSource {
public:
    FiniteAmplitudeSource(const StateVector& psi2, const Observable& obs, const StateVector& psi1,
                          double pole_tol = kDefaultPoleTol);

    cplx amplitude(double q) const override;
    cplx weak_value(double q) const override;
    cplx numerator(double q) const override;

    const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    // <psi2|Pi_a|psi1> per eigenvalue.
    const std::vector<cplx>& coefficients() const { return coefficients_; }

private:
    std::vector<double> eigenvalues_;
    std::vector<cplx> coefficients_;
    std::vector<std::complex<long double>> wide_coefficients_;
    double pole_tol_;

    std::complex<long double> wide_sum(double q, bool weighted) const;
};

struct WeakOrbit {
    Grid grid;
    std::vector<double> P12;
    std::vector<double> S12;
    std::vector<double> Aw_re;
    std::vector<double> Aw_im;
    std::vector<bool> valid;
    std::vector<double> Gamma12;
    // delta(q) = integral of Aw_re over [-q, q]; NaN where undefined.
    std::vector<double> delta;
    std::vector<std::string> warnings;
};

// Samples with |G| below kOrbitPoleTol * max|G| are marked invalid.
inline constexpr double kOrbitPoleTol = 1e-12;

WeakOrbit build_orbit(const AmplitudeSource& src, const Grid& grid);

// Terms of <p>_> = <p>_< + <A>_< and
// <dp^2>_> = <dp^2>_< + <{dp, dA}>_< + <dA^2>_<, all in the reassessed state.
struct MomentDecomposition {
    double p_mean = 0.0;
    double aw_mean = 0.0;
    double p_variance = 0.0;
    double cross = 0.0;
    double aw_variance = 0.0;
    double total_mean() const { return p_mean + aw_mean; }
    double total_variance() const { return p_variance + cross + aw_variance; }
};

struct ConditionalResult {
    double P12_phi = 0.0;
    PointerState reassessed;
    PointerState final_q;
    PointerState final_p;
    PdfSummary prior_q;
    PdfSummary prior_p;
    PdfSummary posterior_q;
    PdfSummary pointer;
    MomentDecomposition decomposition;
};

inline constexpr double kMinPostSelection = 1e-14;

// Conditional apparatus state after post-selection; phi in the q-representation.
ConditionalResult ppme_condition(const AmplitudeSource& src, const PointerState& phi);

// Pre-selected pointer distribution sum_a <psi1|Pi_a|psi1> |phi(p - a)|^2.
PdfSummary pme_distribution(const StateVector& psi1, const Observable& obs, const PointerState& phi);

// Final p-wavefunction (unnormalized by P12_phi) by the two equivalent routes:
// Fourier integral of G(q) phi(q), and the superposition of shifted
// wavefunctions sum_a <psi2|Pi_a|psi1> phi(p - a).
std::vector<cplx> final_p_fourier(const AmplitudeSource& src, const PointerState& phi);
std::vector<cplx> final_p_spectral(const FiniteAmplitudeSource& src, const PointerState& phi);

struct OutcomeStats {
    double P1b = 0.0;
    double pointer_mean = 0.0;    // NaN when P1b is negligible
    double weak_value_mean = 0.0; // posterior average of A_w, NaN when negligible
};

struct SumRuleReport {
    double expectation = 0.0;
    double pme_mean = 0.0;
    double pointer_residual = 0.0;   // sum_b P1b <p>_b - <A>
    double weak_residual = 0.0;      // sum_b P1b <A_w>_b - <A>
    double covering_min = 0.0;       // min over p, b of P(p|1) - P1b P(p|1b)
    double pooling_max_dev = 0.0;    // max_p |P(p|1) - sum_b P1b P(p|1b)|
    std::vector<OutcomeStats> outcomes;
    std::vector<double> pme_pdf;
};

SumRuleReport check_sum_rules(const StateVector& psi1, const Observable& obs, const PointerState& phi,
                              const PostSelectionBasis& basis);

// sum_b |<b|psi1>|^2 Re A_w(b) - <psi1|A|psi1>. Outcomes with |<b|psi1>| < 1e-8
// contribute Re(<b|A|psi1><psi1|b>) directly.
double weak_value_sum_residual(const StateVector& psi1, const Observable& obs, const PostSelectionBasis& basis);

struct WeakLimitRow {
    double eps = 0.0;
    double pointer_mean = 0.0;   // Heisenberg-picture mean <p>_< + <A_w>_<
    double pdf_mean = 0.0;       // mean of the sampled p-pdf (tail-truncated)
    double P12_phi = 0.0;
    double mean_error = 0.0;     // pointer_mean - Re W(center)
    double P12_error = 0.0;      // P12_phi - P12(center)
};

struct WeakLimitSweep {
    double center = 0.0;
    double aw_center = 0.0;
    double P12_center = 0.0;
    std::vector<WeakLimitRow> rows;
    // Successive log-ratio estimates of the convergence order.
    std::vector<double> mean_orders;
    std::vector<double> P12_orders;
};

// Window priors of decreasing width about `center`. Each width gets its own
// grid of `points` samples spanning 8 eps, offset so the window holds a
// symmetric set of samples.
WeakLimitSweep weak_limit_sweep(const AmplitudeSource& src, double center, const std::vector<double>& eps_list,
                                std::size_t points = 4096);

}  // namespace qawv
