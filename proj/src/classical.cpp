#include "qawv/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qawv/errors.hpp"

namespace qawv::classical {

namespace {

using std::numbers::pi;

constexpr int kRk4Steps = 4096;  // per segment, even for Simpson

// End velocities of a segment from (ta, xa) to (tb, xb) are affine in the
// endpoints: v(ta) = a0 xa + a1 xb, v(tb) = b0 xa + b1 xb.
struct SegmentMap {
    double a0, a1, b0, b1;
};

SegmentMap segment_map(SystemKind kind, double omega, double T) {
    if (kind == SystemKind::Free) return {-1.0 / T, 1.0 / T, -1.0 / T, 1.0 / T};
    const double s = std::sin(omega * T), c = std::cos(omega * T);
    if (std::abs(s) < 1e-12) {
        std::ostringstream os;
        os << "classical: oscillator segment of duration " << T << " is a focusing interval";
        throw PreconditionError(os.str());
    }
    return {-omega * c / s, omega / s, -omega / s, omega * c / s};
}

double segment_action(SystemKind kind, double mass, double omega, double T, double xa, double xb) {
    if (kind == SystemKind::Free) return mass * (xb - xa) * (xb - xa) / (2.0 * T);
    const double s = std::sin(omega * T), c = std::cos(omega * T);
    return mass * omega / (2.0 * s) * ((xa * xa + xb * xb) * c - 2.0 * xa * xb);
}

double force_over_mass(SystemKind kind, double omega, double x) {
    return kind == SystemKind::Free ? 0.0 : -omega * omega * x;
}

struct Shot {
    double x_end = 0.0;
    double x_i = 0.0;
    double v_end = 0.0;
    double action = 0.0;
};

// RK4 propagation of (x, v) from t1 with initial velocity v0, kick at t_i.
Shot shoot(const ClassicalScenario& s, double q, double x1, double v0) {
    const auto f = [&](double x) { return force_over_mass(s.kind, s.omega, x); };
    const auto lagrangian = [&](double x, double v) {
        return 0.5 * s.mass * v * v - 0.5 * s.mass * s.omega * s.omega * x * x;
    };
    Shot out;
    double x = x1, v = v0;
    for (int seg = 0; seg < 2; ++seg) {
        const double T = s.times[seg + 1] - s.times[seg];
        const double h = T / kRk4Steps;
        double simpson = lagrangian(x, v);
        for (int k = 1; k <= kRk4Steps; ++k) {
            const double k1x = v, k1v = f(x);
            const double k2x = v + 0.5 * h * k1v, k2v = f(x + 0.5 * h * k1x);
            const double k3x = v + 0.5 * h * k2v, k3v = f(x + 0.5 * h * k2x);
            const double k4x = v + h * k3v, k4v = f(x + h * k3x);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            simpson += (k == kRk4Steps ? 1.0 : (k % 2 ? 4.0 : 2.0)) * lagrangian(x, v);
        }
        out.action += simpson * h / 3.0;
        if (seg == 0) {
            out.x_i = x;
            v += q * coupling_slope(s.coupling, x) / s.mass;
        }
    }
    out.x_end = x;
    out.v_end = v;
    out.action += q * coupling_value(s.coupling, out.x_i);
    return out;
}

// Lagrange extrapolation to x = 0 through (xs[k], ys[k]) by Neville's scheme.
double extrapolate_to_zero(const std::vector<double>& xs, std::vector<double> ys) {
    const std::size_t n = ys.size();
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = 0; i + level < n; ++i)
            ys[i] = (xs[i + level] * ys[i] - xs[i] * ys[i + 1]) / (xs[i + level] - xs[i]);
    return ys[0];
}

double gaussian_pdf(double x, double sigma) {
    return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * pi));
}

}  // namespace

void ClassicalScenario::validate() const {
    if (!(times[0] < times[1] && times[1] < times[2])) throw PreconditionError("classical: need t1 < t_i < t2");
    if (!(mass > 0.0)) throw PreconditionError("classical: mass must be positive");
    if (kind == SystemKind::Oscillator) {
        if (!(omega > 0.0)) throw PreconditionError("classical: oscillator frequency must be positive");
        const double turns = omega * (times[2] - times[0]) / pi;
        if (std::abs(turns - std::round(turns)) < 1e-9)
            throw PreconditionError("classical: omega (t2 - t1) is a multiple of pi (focusing)");
    }
    if (!(prior.q_sigma > 0.0) || !(prior.p_sigma > 0.0)) throw PreconditionError("classical: prior widths must be positive");
}

double ClassicalScenario::length_scale() const { return std::max({1.0, std::abs(x1), std::abs(x2)}); }

ClassicalScenario free_particle_preset() {
    ClassicalScenario s;
    s.prior.q_center = 0.5;
    s.prior.q_sigma = 0.5;
    s.prior.p_sigma = 1.0;
    return s;
}

double coupling_value(Coupling c, double x) { return c == Coupling::Linear ? x : x * x; }
double coupling_slope(Coupling c, double x) { return c == Coupling::Linear ? 1.0 : 2.0 * x; }

double ClassicalSolution::segment_position(int seg, double t) const {
    const double ta = times_[seg], tb = times_[seg + 1];
    const double xa = seg == 0 ? x1_ : x_i_, xb = seg == 0 ? x_i_ : x2_;
    if (kind_ == SystemKind::Free) return xa + (xb - xa) * (t - ta) / (tb - ta);
    return (xa * std::sin(omega_ * (tb - t)) + xb * std::sin(omega_ * (t - ta))) / std::sin(omega_ * (tb - ta));
}

double ClassicalSolution::segment_velocity(int seg, double t) const {
    const double ta = times_[seg], tb = times_[seg + 1];
    const double xa = seg == 0 ? x1_ : x_i_, xb = seg == 0 ? x_i_ : x2_;
    if (kind_ == SystemKind::Free) return (xb - xa) / (tb - ta);
    return omega_ * (-xa * std::cos(omega_ * (tb - t)) + xb * std::cos(omega_ * (t - ta))) / std::sin(omega_ * (tb - ta));
}

double ClassicalSolution::position(double t) const {
    if (t < times_[0] || t > times_[2]) throw PreconditionError("ClassicalSolution: time outside [t1, t2]");
    return segment_position(t <= times_[1] ? 0 : 1, t);
}

double ClassicalSolution::velocity(double t) const {
    if (t < times_[0] || t > times_[2]) throw PreconditionError("ClassicalSolution: time outside [t1, t2]");
    return segment_velocity(t <= times_[1] ? 0 : 1, t);
}

ClassicalSolution solve_boundary(const ClassicalScenario& s, double q, SolveMethod method) {
    s.validate();
    ClassicalSolution sol;
    sol.kind_ = s.kind;
    sol.omega_ = s.omega;
    sol.times_ = s.times;
    sol.x1_ = s.x1;
    sol.x2_ = s.x2;
    sol.q_ = q;
    sol.method_ = method;
    const double T1 = s.times[1] - s.times[0], T2 = s.times[2] - s.times[1];
    const double scale = s.length_scale();

    if (method == SolveMethod::Analytic) {
        const SegmentMap m1 = segment_map(s.kind, s.omega, T1);
        const SegmentMap m2 = segment_map(s.kind, s.omega, T2);
        // m (v2(t_i+) - v1(t_i-)) = q A'(x_i), with A'(x) = c0 + c1 x.
        const double c0 = s.coupling == Coupling::Linear ? 1.0 : 0.0;
        const double c1 = s.coupling == Coupling::Linear ? 0.0 : 2.0;
        const double coef = s.mass * (m2.a0 - m1.b1) - q * c1;
        const double rhs = q * c0 - s.mass * (m2.a1 * s.x2 - m1.b0 * s.x1);
        const double ref = s.mass * (std::abs(m2.a0) + std::abs(m1.b1)) + std::abs(q * c1);
        if (std::abs(coef) <= 1e-12 * ref) {
            std::ostringstream os;
            os << "solve_boundary: focusing configuration at q = " << q << " (no unique trajectory)";
            throw PreconditionError(os.str());
        }
        sol.x_i_ = rhs / coef;
        sol.pi1_ = s.mass * (m1.a0 * s.x1 + m1.a1 * sol.x_i_);
        sol.pi2_ = s.mass * (m2.b0 * sol.x_i_ + m2.b1 * s.x2);
        sol.action_ = segment_action(s.kind, s.mass, s.omega, T1, s.x1, sol.x_i_) +
                      segment_action(s.kind, s.mass, s.omega, T2, sol.x_i_, s.x2) +
                      q * coupling_value(s.coupling, sol.x_i_);
    } else {
        // Secant iteration on the initial velocity.
        double v_a = (s.x2 - s.x1) / (s.times[2] - s.times[0]);
        double v_b = v_a + 1.0;
        Shot sa = shoot(s, q, s.x1, v_a), sb = shoot(s, q, s.x1, v_b);
        bool converged = std::abs(sb.x_end - s.x2) < 1e-10 * scale;
        for (int it = 0; it < 50 && !converged; ++it) {
            const double fa = sa.x_end - s.x2, fb = sb.x_end - s.x2;
            if (fb == fa) break;
            const double v_c = v_b - fb * (v_b - v_a) / (fb - fa);
            v_a = v_b;
            sa = sb;
            v_b = v_c;
            sb = shoot(s, q, s.x1, v_b);
            converged = std::abs(sb.x_end - s.x2) < 1e-10 * scale;
        }
        if (!converged) {
            std::ostringstream os;
            os << "solve_boundary: shooting did not converge at q = " << q;
            throw ConvergenceError(os.str());
        }
        sol.x_i_ = sb.x_i;
        sol.pi1_ = s.mass * v_b;
        sol.pi2_ = s.mass * sb.v_end;
        sol.action_ = sb.action;
    }
    sol.a_tilde_ = coupling_value(s.coupling, sol.x_i_);

    const double h = 1e-4 * scale;
    const double mixed = kicked_action(s, q, s.x1 + h, s.x2 + h, method) - kicked_action(s, q, s.x1 + h, s.x2 - h, method) -
                         kicked_action(s, q, s.x1 - h, s.x2 + h, method) + kicked_action(s, q, s.x1 - h, s.x2 - h, method);
    sol.van_vleck_ = std::abs(mixed / (4.0 * h * h));
    return sol;
}

double kicked_action(const ClassicalScenario& s, double q, double x1, double x2, SolveMethod method) {
    ClassicalScenario t = s;
    t.x1 = x1;
    t.x2 = x2;
    const double T1 = s.times[1] - s.times[0], T2 = s.times[2] - s.times[1];
    if (method == SolveMethod::Analytic) {
        const SegmentMap m1 = segment_map(s.kind, s.omega, T1);
        const SegmentMap m2 = segment_map(s.kind, s.omega, T2);
        const double c0 = s.coupling == Coupling::Linear ? 1.0 : 0.0;
        const double c1 = s.coupling == Coupling::Linear ? 0.0 : 2.0;
        const double coef = s.mass * (m2.a0 - m1.b1) - q * c1;
        const double xi = (q * c0 - s.mass * (m2.a1 * x2 - m1.b0 * x1)) / coef;
        return segment_action(s.kind, s.mass, s.omega, T1, x1, xi) + segment_action(s.kind, s.mass, s.omega, T2, xi, x2) +
               q * coupling_value(s.coupling, xi);
    }
    // Shooting: reuse the solver without its own Van Vleck evaluation.
    double v_a = (x2 - x1) / (s.times[2] - s.times[0]);
    double v_b = v_a + 1.0;
    Shot sa = shoot(t, q, x1, v_a), sb = shoot(t, q, x1, v_b);
    for (int it = 0; it < 50 && std::abs(sb.x_end - x2) >= 1e-10 * s.length_scale(); ++it) {
        const double fa = sa.x_end - x2, fb = sb.x_end - x2;
        if (fb == fa) throw ConvergenceError("kicked_action: shooting stalled");
        const double v_c = v_b - fb * (v_b - v_a) / (fb - fa);
        v_a = v_b;
        sa = sb;
        v_b = v_c;
        sb = shoot(t, q, x1, v_b);
    }
    if (std::abs(sb.x_end - x2) >= 1e-10 * s.length_scale()) throw ConvergenceError("kicked_action: shooting did not converge");
    return sb.action;
}

ClassicalPosterior classical_posterior(const ClassicalScenario& s) {
    s.validate();
    const Grid& g = s.grid;
    const std::size_t n = g.size();
    ClassicalPosterior out;
    out.a_tilde.resize(n);
    out.action.resize(n);
    out.van_vleck.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const ClassicalSolution sol = solve_boundary(s, g.q(k));
        out.a_tilde[k] = sol.measured();
        out.action[k] = sol.action();
        out.van_vleck[k] = sol.van_vleck();
    }

    auto normalize = [&](std::vector<double>& v) {
        double mass = 0.0;
        for (double x : v) mass += x;
        mass *= g.dq();
        if (!(mass > 0.0)) throw PreconditionError("classical_posterior: distribution vanishes on the grid");
        for (double& x : v) x /= mass;
    };
    out.likelihood = out.van_vleck;
    normalize(out.likelihood);
    out.prior_q.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.prior_q[k] = gaussian_pdf(g.q(k) - s.prior.q_center, s.prior.q_sigma);
    normalize(out.prior_q);
    out.posterior_q.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.posterior_q[k] = out.likelihood[k] * out.prior_q[k];
    normalize(out.posterior_q);

    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        m1 += out.posterior_q[k] * out.a_tilde[k];
        m2 += out.posterior_q[k] * out.a_tilde[k] * out.a_tilde[k];
    }
    m1 *= g.dq();
    m2 *= g.dq();
    out.decomposition.p_mean = 0.0;
    out.decomposition.aw_mean = m1;
    out.decomposition.p_variance = s.prior.p_sigma * s.prior.p_sigma;
    out.decomposition.cross = 0.0;
    out.decomposition.aw_variance = m2 - m1 * m1;
    out.pointer_mean = m1;

    // p_final = p' + A~(q'), with p' drawn from the prior and q' from the posterior.
    out.pointer_pdf.assign(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        const double p = g.p(m);
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += out.posterior_q[k] * gaussian_pdf(p - out.a_tilde[k], s.prior.p_sigma);
        out.pointer_pdf[m] = acc * g.dq();
    }
    double mass = 0.0, first = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        mass += out.pointer_pdf[m];
        first += g.p(m) * out.pointer_pdf[m];
    }
    out.pointer_pdf_mass = mass * g.dp();
    out.pointer_pdf_mean = first / mass;
    return out;
}

GaussianQuantumAmplitude::GaussianQuantumAmplitude(const ClassicalScenario& s, double smear1, double smear2)
    : m_(s.mass), t_before_(s.times[1] - s.times[0]), t_after_(s.times[2] - s.times[1]), x1_(s.x1), x2_(s.x2), s1_(smear1),
      s2_(smear2) {
    s.validate();
    if (s.kind != SystemKind::Free) throw PreconditionError("gaussian_quantum_amplitude: only the free particle is supported");
    if (s.coupling != Coupling::Linear) throw PreconditionError("gaussian_quantum_amplitude: only linear coupling is supported");
    if (!(smear1 > 0.0) || !(smear2 > 0.0)) throw PreconditionError("gaussian_quantum_amplitude: smear widths must be positive");
    a_ = cplx(s2_ * s2_ + s1_ * s1_, (t_before_ + t_after_) / (2.0 * m_));
    // Momentum-space endpoint normalizations (2 s^2 / pi)^{1/4} each.
    log_norm_ = 0.25 * std::log(2.0 * s1_ * s1_ / pi) + 0.25 * std::log(2.0 * s2_ * s2_ / pi);
}

// Integral over the post-kick momentum u of exp(-a u^2 + b u + c).
cplx GaussianQuantumAmplitude::exponent(double q) const {
    const cplx i(0.0, 1.0);
    const cplx b = i * x2_ + i * q * t_before_ / m_ + 2.0 * s1_ * s1_ * q - i * x1_;
    const cplx c = -i * q * q * t_before_ / (2.0 * m_) - s1_ * s1_ * q * q + i * q * x1_;
    return b * b / (4.0 * a_) + c;
}

cplx GaussianQuantumAmplitude::amplitude(double q) const {
    return std::sqrt(pi / a_) * std::exp(exponent(q) + log_norm_);
}

cplx GaussianQuantumAmplitude::weak_value(double q) const {
    const cplx i(0.0, 1.0);
    const cplx b = i * x2_ + i * q * t_before_ / m_ + 2.0 * s1_ * s1_ * q - i * x1_;
    const cplx db = i * t_before_ / m_ + 2.0 * s1_ * s1_;
    const cplx dc = -i * q * t_before_ / m_ - 2.0 * s1_ * s1_ * q + i * x1_;
    return -i * (b * db / (2.0 * a_) + dc);
}

GaussianQuantumAmplitude gaussian_quantum_amplitude(const ClassicalScenario& s, double smear) {
    return GaussianQuantumAmplitude(s, smear, smear);
}

double richardson(const std::vector<double>& smears, const std::vector<double>& values) {
    if (smears.size() != values.size() || smears.empty()) throw DimensionError("richardson: mismatched samples");
    std::vector<double> xs(smears.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = smears[i] * smears[i];
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t k = i + 1; k < xs.size(); ++k)
            if (xs[i] == xs[k]) throw PreconditionError("richardson: repeated smear width");
    return extrapolate_to_zero(xs, values);
}

CorrespondenceReport correspondence_report(const ClassicalScenario& scenario) {
    if (scenario.kind != SystemKind::Free || scenario.coupling != Coupling::Linear)
        throw PreconditionError("correspondence_report: requires the free particle with linear coupling");
    if (scenario.smears.empty()) throw PreconditionError("correspondence_report: no smear widths given");
    ClassicalScenario s = scenario;
    s.prior.p_sigma = 0.5 / s.prior.q_sigma;
    const Grid& g = s.grid;
    const std::size_t n = g.size();

    const ClassicalPosterior cp = classical_posterior(s);
    const PointerState phi = make_gaussian(g, s.prior.q_center, s.prior.q_sigma);
    double prior_max = 0.0;
    for (double v : cp.prior_q) prior_max = std::max(prior_max, v);

    CorrespondenceReport rep;
    std::vector<std::vector<double>> orbit_rows, posterior_rows;
    std::vector<double> means, variances, aw_vars;
    for (double smear : s.smears) {
        const GaussianQuantumAmplitude src(s, smear, smear);
        const ConditionalResult r = ppme_condition(src, phi);
        SmearSample row;
        row.smear = smear;
        std::vector<double> orbit(n);
        for (std::size_t k = 0; k < n; ++k) {
            orbit[k] = src.weak_value(g.q(k)).real();
            if (cp.prior_q[k] > 1e-12 * prior_max)
                row.orbit_max_dev = std::max(row.orbit_max_dev, std::abs(orbit[k] - cp.a_tilde[k]));
            row.posterior_max_dev = std::max(row.posterior_max_dev, std::abs(r.posterior_q.pdf[k] - cp.posterior_q[k]));
        }
        row.pointer_mean = r.pointer.mean;
        row.pointer_variance = r.pointer.variance;
        row.aw_variance = r.decomposition.aw_variance;
        orbit_rows.push_back(std::move(orbit));
        posterior_rows.push_back(r.posterior_q.pdf);
        means.push_back(row.pointer_mean);
        variances.push_back(row.pointer_variance);
        aw_vars.push_back(row.aw_variance);
        rep.samples.push_back(row);
    }

    std::vector<double> column(s.smears.size());
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < column.size(); ++i) column[i] = orbit_rows[i][k];
        if (cp.prior_q[k] > 1e-12 * prior_max)
            rep.orbit_max_dev = std::max(rep.orbit_max_dev, std::abs(richardson(s.smears, column) - cp.a_tilde[k]));
        for (std::size_t i = 0; i < column.size(); ++i) column[i] = posterior_rows[i][k];
        rep.posterior_max_dev = std::max(rep.posterior_max_dev, std::abs(richardson(s.smears, column) - cp.posterior_q[k]));
    }

    rep.quantum_mean = richardson(s.smears, means);
    rep.classical_mean = cp.pointer_mean;
    rep.mean_dev = std::abs(rep.quantum_mean - rep.classical_mean);
    rep.quantum_variance = richardson(s.smears, variances);
    rep.classical_variance = cp.decomposition.total_variance();
    rep.variance_dev = std::abs(rep.quantum_variance - rep.classical_variance);
    rep.quantum_aw_variance = richardson(s.smears, aw_vars);
    rep.classical_aw_variance = cp.decomposition.aw_variance;
    rep.aw_variance_dev = std::abs(rep.quantum_aw_variance - rep.classical_aw_variance);
    rep.finest_mean_dev = std::abs(means.back() - rep.classical_mean);
    rep.finest_variance_dev = std::abs(variances.back() - rep.classical_variance);

    const double hq = 1e-5;
    const double hx = 1e-5 * s.length_scale();
    for (int k = -20; k <= 20; ++k) {
        const double q = 0.25 * k;
        const ClassicalSolution sol = solve_boundary(s, q);
        const double dsdq = (kicked_action(s, q + hq, s.x1, s.x2) - kicked_action(s, q - hq, s.x1, s.x2)) / (2.0 * hq);
        const double dsdx1 = (kicked_action(s, q, s.x1 + hx, s.x2) - kicked_action(s, q, s.x1 - hx, s.x2)) / (2.0 * hx);
        rep.generating_function_max_dev = std::max(rep.generating_function_max_dev, std::abs(sol.measured() - dsdq));
        rep.momentum_identity_max_dev = std::max(rep.momentum_identity_max_dev, std::abs(sol.initial_momentum() + dsdx1));
    }
    return rep;
}

}  // namespace qawv::classical
