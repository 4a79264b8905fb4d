#include "qawv/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qawv/errors.hpp"

namespace qawv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_q(const PointerState& phi, const char* where) {
    if (phi.rep() != Rep::Q) throw PreconditionError(std::string(where) + ": apparatus state must be in the q-representation");
}

std::vector<cplx> sample_amplitude(const AmplitudeSource& src, const Grid& grid) {
    std::vector<cplx> g(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) g[k] = src.amplitude(grid.q(k));
    return g;
}

// Re(conj(G) H) = P12 * Re W, evaluated without dividing by G.
double weighted_aw(cplx g, cplx h) { return (std::conj(g) * h).real(); }

double log_ratio(double a, double b, double ea, double eb) {
    if (!(std::abs(ea) > 0.0) || !(std::abs(eb) > 0.0)) return kNaN;
    return std::log(std::abs(ea) / std::abs(eb)) / std::log(a / b);
}

// Maximal |p| carrying all but `tail` of the p-probability of phi.
double p_extent(const PointerState& phi_p, double tail) {
    const Grid& g = phi_p.grid();
    const auto& s = phi_p.samples();
    std::vector<std::size_t> order(s.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(g.p(a)) > std::abs(g.p(b));
    });
    double acc = 0.0;
    for (std::size_t i : order) {
        acc += std::norm(s[i]) * g.dp();
        if (acc > tail) return std::abs(g.p(i));
    }
    return 0.0;
}

}  // namespace

FiniteAmplitudeSource::FiniteAmplitudeSource(const StateVector& psi2, const Observable& obs,
                                             const StateVector& psi1, double pole_tol)
    : pole_tol_(pole_tol) {
    if (psi1.dim() != obs.dim() || psi2.dim() != obs.dim())
        throw DimensionError("FiniteAmplitudeSource: dimension mismatch");
    using wide = std::complex<long double>;
    const auto n = psi1.amplitudes().size();
    for (const auto& space : obs.spectrum()) {
        eigenvalues_.push_back(space.eigenvalue);
        wide c = 0.0L;
        for (Eigen::Index r = 0; r < n; ++r) {
            wide row = 0.0L;
            for (Eigen::Index k = 0; k < n; ++k) row += wide(space.projector(r, k)) * wide(psi1.amplitudes()[k]);
            c += std::conj(wide(psi2.amplitudes()[r])) * row;
        }
        wide_coefficients_.push_back(c);
        coefficients_.emplace_back(static_cast<double>(c.real()), static_cast<double>(c.imag()));
    }
}

std::complex<long double> FiniteAmplitudeSource::wide_sum(double q, bool weighted) const {
    std::complex<long double> acc = 0.0L;
    for (std::size_t i = 0; i < eigenvalues_.size(); ++i) {
        const long double a = eigenvalues_[i];
        const long double arg = a * static_cast<long double>(q);
        std::complex<long double> term(std::cos(arg), std::sin(arg));
        term *= wide_coefficients_[i];
        acc += weighted ? a * term : term;
    }
    return acc;
}

cplx FiniteAmplitudeSource::amplitude(double q) const {
    const auto g = wide_sum(q, false);
    return {static_cast<double>(g.real()), static_cast<double>(g.imag())};
}

cplx FiniteAmplitudeSource::numerator(double q) const {
    const auto h = wide_sum(q, true);
    return {static_cast<double>(h.real()), static_cast<double>(h.imag())};
}

cplx FiniteAmplitudeSource::weak_value(double q) const {
    const auto g = wide_sum(q, false);
    if (!(std::abs(g) > pole_tol_)) {
        std::ostringstream os;
        os << "weak value pole at q = " << q << " (|G| = " << static_cast<double>(std::abs(g)) << ")";
        throw PoleError(os.str(), static_cast<double>(std::abs(g)));
    }
    const auto w = wide_sum(q, true) / g;
    return {static_cast<double>(w.real()), static_cast<double>(w.imag())};
}

WeakOrbit build_orbit(const AmplitudeSource& src, const Grid& grid) {
    const std::size_t n = grid.size();
    WeakOrbit orbit{grid, {}, {}, {}, {}, {}, {}, {}, {}};
    const std::vector<cplx> g = sample_amplitude(src, grid);
    orbit.P12.resize(n);
    for (std::size_t k = 0; k < n; ++k) orbit.P12[k] = std::norm(g[k]);
    const double pmax = *std::max_element(orbit.P12.begin(), orbit.P12.end());
    if (!(pmax > 0.0)) throw PreconditionError("build_orbit: transition amplitude vanishes on the whole grid");
    // Compared on P12, so the amplitude-level cut is squared.
    const double threshold = kOrbitPoleTol * kOrbitPoleTol * pmax;

    orbit.valid.resize(n);
    orbit.S12.resize(n);
    orbit.Aw_re.assign(n, kNaN);
    orbit.Aw_im.assign(n, kNaN);
    orbit.Gamma12.assign(n, kNaN);
    std::size_t big_jumps = 0;
    bool have_prev = false;
    double prev_phase = 0.0;
    bool prev_valid = false;
    for (std::size_t k = 0; k < n; ++k) {
        const bool ok = orbit.P12[k] > threshold;
        orbit.valid[k] = ok;
        double s = std::arg(g[k]);
        if (ok) {
            if (have_prev) {
                s += 2.0 * std::numbers::pi * std::round((prev_phase - s) / (2.0 * std::numbers::pi));
                if (prev_valid && std::abs(s - prev_phase) > 0.5 * std::numbers::pi) ++big_jumps;
            }
            prev_phase = s;
            have_prev = true;
            const cplx w = src.weak_value(grid.q(k));
            orbit.Aw_re[k] = w.real();
            orbit.Aw_im[k] = w.imag();
            orbit.Gamma12[k] = s - grid.q(k) * w.real();
        }
        orbit.S12[k] = s;
        prev_valid = ok;
    }
    if (static_cast<double>(big_jumps) > 0.01 * static_cast<double>(n)) {
        std::ostringstream os;
        os << "grid under-resolves the amplitude phase: " << big_jumps << " adjacent jumps exceed pi/2";
        orbit.warnings.push_back(os.str());
    }

    // F(q) = integral_0^q Aw_re, cumulative trapezoid outward from the sample nearest 0.
    std::vector<double> F(n, kNaN);
    const std::size_t k0 = grid.nearest_q(0.0);
    const double q0 = grid.q(k0);
    if (orbit.valid[k0] && grid.q_min() <= 0.0 && grid.q_max() > 0.0) {
        // Short linear piece from 0 to q0 using Aw at k0.
        F[k0] = orbit.Aw_re[k0] * q0;
        for (std::size_t k = k0 + 1; k < n; ++k)
            F[k] = F[k - 1] + 0.5 * grid.dq() * (orbit.Aw_re[k] + orbit.Aw_re[k - 1]);
        for (std::size_t k = k0; k-- > 0;)
            F[k] = F[k + 1] - 0.5 * grid.dq() * (orbit.Aw_re[k] + orbit.Aw_re[k + 1]);
    }
    auto F_at = [&](double q) {
        const double x = (q - grid.q_min()) / grid.dq();
        if (x < -1e-9 || x > static_cast<double>(n - 1) + 1e-9) return kNaN;
        const std::size_t i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(x))), n - 2);
        const double t = x - static_cast<double>(i);
        return (1.0 - t) * F[i] + t * F[i + 1];
    };
    orbit.delta.resize(n);
    for (std::size_t k = 0; k < n; ++k) orbit.delta[k] = F[k] - F_at(-grid.q(k));
    return orbit;
}

ConditionalResult ppme_condition(const AmplitudeSource& src, const PointerState& phi) {
    require_q(phi, "ppme_condition");
    const Grid& grid = phi.grid();
    const std::size_t n = grid.size();
    const auto& f = phi.samples();
    std::vector<cplx> g(n), h(n);
    for (std::size_t k = 0; k < n; ++k) {
        g[k] = src.amplitude(grid.q(k));
        h[k] = src.numerator(grid.q(k));
    }

    double P12_phi = 0.0;
    for (std::size_t k = 0; k < n; ++k) P12_phi += std::norm(g[k]) * std::norm(f[k]);
    P12_phi *= grid.dq();
    if (!(P12_phi > kMinPostSelection)) {
        std::ostringstream os;
        os << "ppme_condition: post-selection probability " << P12_phi << " is negligible";
        throw PreconditionError(os.str());
    }

    const double inv = 1.0 / std::sqrt(P12_phi);
    std::vector<cplx> fin(n), re(n);
    for (std::size_t k = 0; k < n; ++k) {
        fin[k] = g[k] * f[k] * inv;
        re[k] = std::abs(g[k]) * inv * f[k];
    }
    PointerState final_q = PointerState::raw(grid, Rep::Q, fin);
    PointerState final_p = to_p(final_q);
    PointerState reassessed = PointerState::raw(grid, Rep::Q, re);

    // Weak-value moments under the posterior P12 |phi|^2 / P12_phi.
    MomentDecomposition d;
    double aw1 = 0.0, aw2 = 0.0;
    std::vector<double> aw(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double p12 = std::norm(g[k]);
        const double wa = weighted_aw(g[k], h[k]);
        if (p12 > std::numeric_limits<double>::min()) aw[k] = wa / p12;
        const double wt = std::norm(f[k]) / P12_phi;
        aw1 += wa * wt;
        aw2 += (p12 > std::numeric_limits<double>::min() ? wa * wa / p12 : 0.0) * wt;
    }
    aw1 *= grid.dq();
    aw2 *= grid.dq();
    d.aw_mean = aw1;
    d.aw_variance = aw2 - aw1 * aw1;

    // p acting on the reassessed state, with the derivative of |G| taken
    // analytically (G' = i N): |G|' = -Im(conj(G) N) / |G|. The terms below
    // then add up pointwise to |(G phi)'|^2, which stays smooth even where
    // |G| has a sharp dip that the grid does not resolve term by term.
    const PointerState p_phi = apply_momentum(phi);
    double m1 = 0.0, m2 = 0.0, corr = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double abs_g = std::abs(g[k]);
        const double dabs = abs_g > 0.0 ? -(std::conj(g[k]) * h[k]).imag() / abs_g : 0.0;
        const cplx dphi = cplx(0.0, 1.0) * p_phi.samples()[k];
        const cplx p_re = cplx(0.0, -1.0) * (abs_g * dphi + dabs * f[k]) * inv;
        m1 += (std::conj(re[k]) * p_re).real();
        m2 += std::norm(p_re);
        corr += (std::conj(p_re) * (aw[k] * re[k])).real();
    }
    d.p_mean = m1 * grid.dq();
    d.p_variance = m2 * grid.dq() - d.p_mean * d.p_mean;
    d.cross = 2.0 * corr * grid.dq() - 2.0 * d.p_mean * d.aw_mean;

    return ConditionalResult{
        P12_phi,
        std::move(reassessed),
        std::move(final_q),
        final_p,
        pdf_summary(phi),
        pdf_summary(to_p(phi)),
        pdf_summary(PointerState::raw(grid, Rep::Q, re)),
        pdf_summary(final_p),
        d,
    };
}

PdfSummary pme_distribution(const StateVector& psi1, const Observable& obs, const PointerState& phi) {
    require_q(phi, "pme_distribution");
    if (psi1.dim() != obs.dim()) throw DimensionError("pme_distribution: dimension mismatch");
    const Grid& grid = phi.grid();
    const std::size_t n = grid.size();
    const double reach = p_extent(to_p(phi), 1e-10);
    const double amax = std::max(std::abs(obs.min_eigenvalue()), std::abs(obs.max_eigenvalue()));
    if (amax + reach >= grid.p_nyquist()) {
        std::ostringstream os;
        os << "pme_distribution: eigenvalue shift " << amax << " plus prior extent " << reach
           << " exceeds the p-grid half-span " << grid.p_nyquist();
        throw PreconditionError(os.str());
    }
    std::vector<double> pdf(n, 0.0);
    std::vector<cplx> shifted(n);
    for (const auto& space : obs.spectrum()) {
        const double weight = psi1.amplitudes().dot(space.projector * psi1.amplitudes()).real();
        if (weight == 0.0) continue;
        for (std::size_t k = 0; k < n; ++k) shifted[k] = phase(space.eigenvalue, grid.q(k)) * phi.samples()[k];
        const std::vector<cplx> sp = q_to_p_samples(grid, shifted);
        for (std::size_t m = 0; m < n; ++m) pdf[m] += weight * std::norm(sp[m]);
    }
    return summarize_pdf(grid, Rep::P, std::move(pdf));
}

std::vector<cplx> final_p_fourier(const AmplitudeSource& src, const PointerState& phi) {
    require_q(phi, "final_p_fourier");
    const Grid& grid = phi.grid();
    std::vector<cplx> v(grid.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = src.amplitude(grid.q(k)) * phi.samples()[k];
    return q_to_p_samples(grid, v);
}

std::vector<cplx> final_p_spectral(const FiniteAmplitudeSource& src, const PointerState& phi) {
    require_q(phi, "final_p_spectral");
    const Grid& grid = phi.grid();
    const std::size_t n = grid.size();
    std::vector<cplx> out(n, 0.0);
    std::vector<cplx> shifted(n);
    for (std::size_t a = 0; a < src.eigenvalues().size(); ++a) {
        // phi(p - a) by the shift theorem.
        for (std::size_t k = 0; k < n; ++k) shifted[k] = phase(src.eigenvalues()[a], grid.q(k)) * phi.samples()[k];
        const std::vector<cplx> sp = q_to_p_samples(grid, shifted);
        for (std::size_t m = 0; m < n; ++m) out[m] += src.coefficients()[a] * sp[m];
    }
    return out;
}

SumRuleReport check_sum_rules(const StateVector& psi1, const Observable& obs, const PointerState& phi,
                              const PostSelectionBasis& basis) {
    require_q(phi, "check_sum_rules");
    if (basis.dim() != obs.dim()) throw DimensionError("check_sum_rules: basis dimension differs from observable");
    const Grid& grid = phi.grid();
    const std::size_t n = grid.size();

    SumRuleReport r;
    r.expectation = obs.expectation(psi1);
    const PdfSummary pme = pme_distribution(psi1, obs, phi);
    r.pme_mean = pme.mean;
    r.pme_pdf = pme.pdf;

    std::vector<double> pooled(n, 0.0);
    std::vector<std::vector<double>> weighted(basis.dim());
    double mean_sum = 0.0, aw_sum = 0.0;
    for (std::size_t b = 0; b < basis.dim(); ++b) {
        const FiniteAmplitudeSource src(basis.vectors()[b], obs, psi1);
        // Unnormalized conditional pdf P1b * P(p|1b).
        const std::vector<cplx> up = final_p_fourier(src, phi);
        std::vector<double> wpdf(n);
        for (std::size_t m = 0; m < n; ++m) wpdf[m] = std::norm(up[m]);
        const PdfSummary s = summarize_pdf(grid, Rep::P, wpdf);
        double P1b = 0.0;
        for (double v : wpdf) P1b += v;
        P1b *= grid.dp();
        double aw_w = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double q = grid.q(k);
            aw_w += weighted_aw(src.amplitude(q), src.numerator(q)) * std::norm(phi.samples()[k]);
        }
        aw_w *= grid.dq();

        OutcomeStats o;
        o.P1b = P1b;
        const bool resolvable = P1b > kMinPostSelection;
        o.pointer_mean = resolvable ? s.mean : kNaN;
        o.weak_value_mean = resolvable ? aw_w / P1b : kNaN;
        r.outcomes.push_back(o);
        mean_sum += resolvable ? P1b * s.mean : 0.0;
        aw_sum += aw_w;
        for (std::size_t m = 0; m < n; ++m) pooled[m] += wpdf[m];
        weighted[b] = std::move(wpdf);
    }
    r.pointer_residual = mean_sum - r.expectation;
    r.weak_residual = aw_sum - r.expectation;
    r.covering_min = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < n; ++m) {
        r.pooling_max_dev = std::max(r.pooling_max_dev, std::abs(pooled[m] - pme.pdf[m]));
        for (std::size_t b = 0; b < basis.dim(); ++b) r.covering_min = std::min(r.covering_min, pme.pdf[m] - weighted[b][m]);
    }
    return r;
}

double weak_value_sum_residual(const StateVector& psi1, const Observable& obs, const PostSelectionBasis& basis) {
    if (basis.dim() != obs.dim()) throw DimensionError("weak_value_sum_residual: basis dimension differs from observable");
    double acc = 0.0;
    for (const auto& b : basis.vectors()) {
        const cplx ov = inner(b, psi1);
        if (std::abs(ov) < 1e-8) {
            const cplx ab = b.amplitudes().dot(obs.matrix() * psi1.amplitudes());
            acc += (ab * std::conj(ov)).real();
        } else {
            acc += std::norm(ov) * weak_value(b, obs, psi1).real();
        }
    }
    return acc - obs.expectation(psi1);
}

WeakLimitSweep weak_limit_sweep(const AmplitudeSource& src, double center, const std::vector<double>& eps_list,
                                std::size_t points) {
    WeakLimitSweep sweep;
    sweep.center = center;
    const cplx g0 = src.amplitude(center);
    sweep.aw_center = src.weak_value(center).real();
    sweep.P12_center = std::norm(g0);
    for (double eps : eps_list) {
        if (!(eps > 0.0)) throw PreconditionError("weak_limit_sweep: eps must be positive");
        const double span = 8.0 * eps;
        const double dq = span / static_cast<double>(points);
        // Half-cell offset keeps grid points away from the window edges.
        const double q_min = center - 0.5 * span + 0.5 * dq;
        const Grid grid(q_min, q_min + span, points);
        const PointerState phi = make_window(grid, center, eps);
        const ConditionalResult res = ppme_condition(src, phi);
        WeakLimitRow row;
        row.eps = eps;
        row.pointer_mean = res.decomposition.total_mean();
        row.pdf_mean = res.pointer.mean;
        row.P12_phi = res.P12_phi;
        row.mean_error = row.pointer_mean - sweep.aw_center;
        row.P12_error = row.P12_phi - sweep.P12_center;
        sweep.rows.push_back(row);
    }
    for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
        const auto& a = sweep.rows[i - 1];
        const auto& b = sweep.rows[i];
        sweep.mean_orders.push_back(log_ratio(a.eps, b.eps, a.mean_error, b.mean_error));
        sweep.P12_orders.push_back(log_ratio(a.eps, b.eps, a.P12_error, b.P12_error));
    }
    return sweep;
}

}  // namespace qawv
