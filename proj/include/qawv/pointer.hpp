#pragma once

// Apparatus wavefunctions on a uniform q-grid and its FFT-paired p-grid.
//
// Kernel convention (fixed project-wide): <p|q> = (2 pi)^{-1/2} e^{-ipq}, so
//   phi(p) = (2 pi)^{-1/2} sum_k dq e^{-i p q_k} phi(q_k)
// and multiplying phi(q) by e^{icq} moves the p-representation to phi(p - c).
//
// The p-grid is p_m = (m - n/2) dp, m = 0..n-1, dp = 2 pi / (n dq). The first
// sample p_0 = -pi/dq is the Nyquist point; it is aliased with +pi/dq, so odd
// moments (and the first-derivative operator) weight it by zero and even
// moments by (pi/dq)^2.

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace qawv {

using cplx = std::complex<double>;

class Grid {
public:
    Grid(double q_min, double q_max, std::size_t n);
    // [-span/2, span/2) with n points.
    static Grid centered(double span, std::size_t n);

    double q_min() const { return q_min_; }
    double q_max() const { return q_max_; }
    std::size_t size() const { return n_; }
    double dq() const { return dq_; }
    double dp() const { return dp_; }
    double q(std::size_t k) const { return q_min_ + static_cast<double>(k) * dq_; }
    double p(std::size_t m) const {
        return (static_cast<double>(m) - static_cast<double>(n_ / 2)) * dp_;
    }
    double p_nyquist() const { return 3.14159265358979323846 / dq_; }
    // Coordinate weights used for first and second p-moments (Nyquist handling above).
    double p_odd(std::size_t m) const { return m == 0 ? 0.0 : p(m); }
    double p_even_sq(std::size_t m) const {
        const double v = m == 0 ? p_nyquist() : p(m);
        return v * v;
    }
    std::vector<double> q_values() const;
    std::vector<double> p_values() const;
    // Index of the grid point nearest to q (clamped).
    std::size_t nearest_q(double q) const;

    bool operator==(const Grid& o) const {
        return q_min_ == o.q_min_ && q_max_ == o.q_max_ && n_ == o.n_;
    }

private:
    double q_min_;
    double q_max_;
    std::size_t n_;
    double dq_;
    double dp_;
};

enum class Rep { Q, P };

class PointerState {
public:
    // Renormalizes the samples on the grid.
    static PointerState normalized(const Grid& grid, Rep rep, std::vector<cplx> samples);
    // Stores the samples untouched (transform results, intermediate states).
    static PointerState raw(const Grid& grid, Rep rep, std::vector<cplx> samples);

    const Grid& grid() const { return grid_; }
    Rep rep() const { return rep_; }
    const std::vector<cplx>& samples() const { return samples_; }
    double spacing() const { return rep_ == Rep::Q ? grid_.dq() : grid_.dp(); }
    // sum |sample|^2 * spacing
    double norm_squared() const;
    double coordinate(std::size_t i) const { return rep_ == Rep::Q ? grid_.q(i) : grid_.p(i); }

private:
    PointerState(const Grid& grid, Rep rep, std::vector<cplx> samples)
        : grid_(grid), rep_(rep), samples_(std::move(samples)) {}
    Grid grid_;
    Rep rep_;
    std::vector<cplx> samples_;
};

struct PdfSummary {
    double mean = 0.0;
    double variance = 0.0;
    double spacing = 0.0;
    std::vector<double> pdf;
};

// exp(-(q-center)^2 / (4 sigma^2)) amplitude, so the q-pdf has variance sigma^2.
PointerState make_gaussian(const Grid& grid, double center, double sigma);
// 1/sqrt(eps) on [center - eps/2, center + eps/2), zero elsewhere.
PointerState make_window(const Grid& grid, double center, double eps);
// Amplitude (1 + ((q-center)/gamma)^2)^{-1/2}: the q-pdf is a Lorentzian of HWHM gamma.
PointerState make_lorentzian(const Grid& grid, double center, double gamma);

PointerState to_p(const PointerState& state);
PointerState to_q(const PointerState& state);

// p applied through the spectral derivative; result in the q-representation.
PointerState apply_momentum(const PointerState& q_state);

// Mean and variance of |samples|^2 (rep-aware, see the Nyquist note above).
PdfSummary pdf_summary(const PointerState& state);
// Same moments for an arbitrary density sampled on the grid in `rep`.
PdfSummary summarize_pdf(const Grid& grid, Rep rep, std::vector<double> pdf);

// CSV with header "q,re,im" or "p,re,im", 17 significant digits, LF endings.
void write_csv(std::ostream& os, const PointerState& state);
PointerState read_pointer_csv(std::istream& is, const Grid& grid);

// Raw transforms on sample vectors, shared with the ensemble code.
std::vector<cplx> q_to_p_samples(const Grid& grid, std::span<const cplx> q_samples);
std::vector<cplx> p_to_q_samples(const Grid& grid, std::span<const cplx> p_samples);

}  // namespace qawv
