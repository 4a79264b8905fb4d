#include "qawv/spin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qawv/errors.hpp"

namespace qawv::spin {

namespace {

using std::numbers::pi;

std::size_t spin_dim(double j) {
    const double twoj = 2.0 * j;
    if (!(j > 0.0) || std::abs(twoj - std::round(twoj)) > 1e-12) {
        std::ostringstream os;
        os << "spin: j = " << j << " is not a positive half-integer";
        throw PreconditionError(os.str());
    }
    if (j > kMaxJ) throw PreconditionError("spin: j above the supported maximum of 25");
    return static_cast<std::size_t>(std::llround(twoj)) + 1;
}

double parabolic_offset(double left, double mid, double right) {
    const double denom = left - 2.0 * mid + right;
    if (denom == 0.0) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

double refined_position(const std::vector<double>& v, std::size_t i, double x0, double dx) {
    if (i == 0 || i + 1 >= v.size()) return x0 + static_cast<double>(i) * dx;
    return x0 + (static_cast<double>(i) + parabolic_offset(v[i - 1], v[i], v[i + 1])) * dx;
}

}  // namespace

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 normalized(const Vec3& v) {
    const double n = std::sqrt(dot(v, v));
    if (!(n > 0.0)) throw PreconditionError("spin: zero vector");
    return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 rotate(const Vec3& v, const Vec3& axis, double angle) {
    const Vec3 k = normalized(axis);
    const double c = std::cos(angle), s = std::sin(angle);
    const Vec3 kxv{k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]};
    const double kv = dot(k, v);
    Vec3 out;
    for (int i = 0; i < 3; ++i) out[i] = v[i] * c + kxv[i] * s + k[i] * kv * (1.0 - c);
    return out;
}

std::pair<double, double> polar_angles(const Vec3& n) {
    const double theta = std::acos(std::clamp(n[2], -1.0, 1.0));
    const double phi = (n[0] == 0.0 && n[1] == 0.0) ? 0.0 : std::atan2(n[1], n[0]);
    return {theta, phi};
}

SpinOperators build_spin_operators(double j) {
    const std::size_t d = spin_dim(j);
    const auto n = static_cast<Eigen::Index>(d);
    CMatrix jp = CMatrix::Zero(n, n), jz = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = j - static_cast<double>(i);
        jz(i, i) = m;
        // J+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>, and m+1 sits at index i-1.
        if (i > 0) jp(i - 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
    const CMatrix jm = jp.adjoint();
    const CMatrix jx = 0.5 * (jp + jm);
    const CMatrix jy = cplx(0.0, -0.5) * (jp - jm);
    return SpinOperators{j, spectral_decompose(jx), spectral_decompose(jy), spectral_decompose(jz)};
}

StateVector coherent_state(const SpinOperators& ops, double theta, double phi_az) {
    const StateVector top = StateVector::basis(ops.Jz.dim(), 0);
    const StateVector tilted = evolve(ops.Jy, -theta, top);
    return evolve(ops.Jz, -phi_az, tilted);
}

StateVector coherent_state(const SpinOperators& ops, const Vec3& n) {
    const auto [theta, phi] = polar_angles(normalized(n));
    return coherent_state(ops, theta, phi);
}

StateVector coherent_state_closed_form(double j, double theta, double phi_az) {
    const std::size_t d = spin_dim(j);
    const int twoj = static_cast<int>(d) - 1;
    // Evaluated in extended precision and rounded once per component: weak
    // values between nearly orthogonal coherent states amplify per-component
    // rounding by |<n2|n1>|^{-1}.
    CVector v(static_cast<Eigen::Index>(d));
    const long double half = 0.5L * static_cast<long double>(theta);
    const long double c = std::cos(half), s = std::sin(half);
    long double binom = 1.0L;
    for (std::size_t i = 0; i < d; ++i) {
        const long double m = static_cast<long double>(j) - static_cast<long double>(i);
        const int down = static_cast<int>(i);  // j - m
        const int up = twoj - down;            // j + m
        if (i > 0) binom = binom * static_cast<long double>(twoj - down + 1) / static_cast<long double>(down);
        const long double mag = std::sqrt(binom) * std::pow(c, up) * std::pow(s, down);
        const long double arg = -m * static_cast<long double>(phi_az);
        v[static_cast<Eigen::Index>(i)] = cplx(static_cast<double>(mag * std::cos(arg)), static_cast<double>(mag * std::sin(arg)));
    }
    return StateVector::unnormalized(v);
}

Observable measured_component(const SpinOperators& ops, const Vec3& axis) {
    const Vec3 a = normalized(axis);
    const CMatrix m = a[0] * ops.Jx.matrix() + a[1] * ops.Jy.matrix() + a[2] * ops.Jz.matrix();
    return spectral_decompose(m);
}

PointerState make_profile(const Grid& grid, const ProfileSpec& spec) {
    switch (spec.kind) {
        case ProfileSpec::Kind::Gaussian: return make_gaussian(grid, spec.center, spec.width);
        case ProfileSpec::Kind::Window: return make_window(grid, spec.center, spec.width);
        case ProfileSpec::Kind::Lorentzian: return make_lorentzian(grid, spec.center, spec.width);
    }
    throw PreconditionError("make_profile: unknown profile kind");
}

std::string to_string(ProfileSpec::Kind kind) {
    switch (kind) {
        case ProfileSpec::Kind::Gaussian: return "gaussian";
        case ProfileSpec::Kind::Window: return "window";
        case ProfileSpec::Kind::Lorentzian: return "lorentzian";
    }
    return "unknown";
}

void SpinScenario::validate() const {
    spin_dim(j);
    for (const Vec3* v : {&n1, &n2, &axis}) {
        if (std::abs(std::sqrt(dot(*v, *v)) - 1.0) > 1e-12) throw PreconditionError("SpinScenario: vectors must be unit length");
    }
}

bool SpinScenario::is_canonical() const {
    const double r = 1.0 / std::sqrt(2.0);
    auto near = [](const Vec3& a, const Vec3& b) {
        return std::abs(a[0] - b[0]) < 1e-12 && std::abs(a[1] - b[1]) < 1e-12 && std::abs(a[2] - b[2]) < 1e-12;
    };
    return near(n1, {0.0, r, r}) && near(n2, {0.0, -r, r}) && near(axis, {0.0, 0.0, 1.0});
}

SpinScenario canonical_scenario(double j) {
    SpinScenario s;
    const double r = 1.0 / std::sqrt(2.0);
    s.j = j;
    s.n1 = {0.0, r, r};
    s.n2 = {0.0, -r, r};
    s.axis = {0.0, 0.0, 1.0};
    return s;
}

FiniteAmplitudeSource make_source(const SpinScenario& s) {
    s.validate();
    const SpinOperators ops = build_spin_operators(s.j);
    const Observable obs = measured_component(ops, s.axis);
    const auto [t1, f1] = polar_angles(s.n1);
    const auto [t2, f2] = polar_angles(s.n2);
    return FiniteAmplitudeSource(coherent_state_closed_form(s.j, t2, f2), obs, coherent_state_closed_form(s.j, t1, f1));
}

SpinOracle::SpinOracle(const SpinScenario& s) : s_(s), canonical_(s.is_canonical()) { s_.validate(); }

double SpinOracle::overlap_probability(const Vec3& n1, const Vec3& n2) const {
    return std::pow(0.5 * (1.0 + dot(n1, n2)), 2.0 * s_.j);
}

Vec3 SpinOracle::weak_spin_vector(const Vec3& n1, const Vec3& n2) const {
    const double f = s_.j / (1.0 + dot(n1, n2));
    return {f * (n1[0] + n2[0]), f * (n1[1] + n2[1]), f * (n1[2] + n2[2])};
}

Vec3 SpinOracle::n1_at(double q) const { return rotate(s_.n1, s_.axis, -q); }

double SpinOracle::weak_value(double q) const {
    if (canonical_) {
        const double s = std::sin(0.5 * q);
        return s_.j * std::sqrt(2.0) / (1.0 + s * s);
    }
    return dot(weak_spin_vector(n1_at(q), s_.n2), normalized(s_.axis));
}

double SpinOracle::ln_likelihood(double q) const {
    return 2.0 * s_.j * std::log(0.5 * (1.0 + dot(s_.n2, n1_at(q))));
}

double SpinOracle::delta(double q) const {
    if (canonical_) {
        // atan2 form is continuous through q = pi; the 2 pi shift keeps it
        // continuous through q = 2 pi (mod 4 pi).
        const double u = 0.5 * q;
        double th = std::atan2(std::sqrt(2.0) * std::sin(u), std::cos(u));
        th += 2.0 * pi * std::round((u - th) / (2.0 * pi));
        return 4.0 * s_.j * th;
    }
    // Composite Simpson on [-q, q].
    const int intervals = 4000;
    const double h = 2.0 * q / intervals;
    double acc = weak_value(-q) + weak_value(q);
    for (int i = 1; i < intervals; ++i) acc += (i % 2 ? 4.0 : 2.0) * weak_value(-q + i * h);
    return acc * h / 3.0;
}

double SpinOracle::weak_value_second_derivative(double q) const {
    if (canonical_) {
        const double c = std::cos(q), s = std::sin(q), d = 3.0 - c;
        return -2.0 * std::sqrt(2.0) * s_.j * (c * d * d - 2.0 * d * s * s) / std::pow(d, 4);
    }
    const double h = 1e-4;
    return (weak_value(q + h) - 2.0 * weak_value(q) + weak_value(q - h)) / (h * h);
}

double SpinOracle::ln_likelihood_gaussian(double q, double q_ext) const {
    const Vec3 a = normalized(s_.axis);
    // P12 = (j (n1.a + n2.a) / 2)^{2j} * J_a^{-2j} along the orbit.
    const double c = s_.j * (dot(s_.n1, a) + dot(s_.n2, a)) / 2.0;
    const double w = weak_value(q_ext);
    const double ratio = weak_value_second_derivative(q_ext) / w;
    const double u = q - q_ext;
    return 2.0 * s_.j * std::log(c) - 2.0 * s_.j * std::log(std::abs(w)) - s_.j * ratio * u * u;
}

BiasResult bias_fixed_point(const AmplitudeSource& src, double q_i, double sigma_i, const BiasOptions& opt) {
    if (!(sigma_i > 0.0)) throw PreconditionError("bias_fixed_point: sigma must be positive");
    const double s2 = sigma_i * sigma_i;
    auto bias = [&](double q) { return src.weak_value(q).imag(); };
    // d/dq ln posterior for a gaussian prior.
    auto slope = [&](double q) { return -2.0 * bias(q) - (q - q_i) / s2; };

    double half = opt.half_width;
    if (!(half > 0.0)) half = 6.0 * sigma_i + 4.0 * s2 * std::abs(bias(q_i));
    const double lo = q_i - half, hi = q_i + half;

    // Unimodality in the bracket: exactly one + to - sign change of the slope.
    const int samples = 4000;
    int maxima = 0;
    double root_lo = lo, root_hi = hi;
    double prev = slope(lo);
    for (int i = 1; i <= samples; ++i) {
        const double q = lo + (hi - lo) * i / samples;
        const double cur = slope(q);
        if (prev > 0.0 && cur <= 0.0) {
            ++maxima;
            root_lo = q - (hi - lo) / samples;
            root_hi = q;
        }
        prev = cur;
    }
    if (maxima > 1) throw PreconditionError("bias_fixed_point: posterior is multimodal in the bracket");
    if (maxima == 0) throw PreconditionError("bias_fixed_point: posterior maximum lies outside the bracket");

    BiasResult r;
    double q = q_i;
    bool converged = false;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const double target = q_i - 2.0 * s2 * bias(q);
        const double next = (1.0 - opt.relaxation) * q + opt.relaxation * target;
        r.iterations = it;
        if (!std::isfinite(next) || next < lo || next > hi) break;
        if (std::abs(next - q) < opt.tol) {
            q = next;
            converged = true;
            break;
        }
        q = next;
    }
    if (!converged) {
        double a = root_lo, b = root_hi;
        for (int it = 0; it < 200 && b - a > opt.tol; ++it) {
            const double m = 0.5 * (a + b);
            (slope(m) > 0.0 ? a : b) = m;
        }
        q = 0.5 * (a + b);
        r.used_bisection = true;
        if (!(b - a <= opt.tol)) throw ConvergenceError("bias_fixed_point: bisection did not converge");
    }
    r.q_star = q;
    r.sampled_weak_value = src.weak_value(q).real();
    return r;
}

std::vector<std::size_t> detect_peaks(const std::vector<double>& v, double rel_height, std::size_t min_sep) {
    if (v.size() < 3) return {};
    const double top = *std::max_element(v.begin(), v.end());
    if (!(top > 0.0)) return {};
    std::vector<std::size_t> cand;
    for (std::size_t i = 1; i + 1 < v.size(); ++i)
        if (v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= rel_height * top) cand.push_back(i);
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    std::vector<std::size_t> kept;
    for (std::size_t c : cand) {
        bool ok = true;
        for (std::size_t k : kept)
            if ((c > k ? c - k : k - c) < min_sep) ok = false;
        if (ok) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

FringeReport fringe_check(const WeakOrbit& orbit, const ConditionalResult& result, double j) {
    FringeReport rep;
    const Grid& grid = orbit.grid;
    if (!(result.posterior_q.pdf.size() == grid.size())) throw DimensionError("fringe_check: orbit and result grids differ");
    const auto& post = result.posterior_q.pdf;
    std::vector<std::size_t> peaks = detect_peaks(post);
    if (peaks.size() < 2) {
        rep.reason = "posterior has a single peak";
        return rep;
    }
    std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return post[a] > post[b]; });
    const std::size_t a = std::min(peaks[0], peaks[1]);
    const std::size_t b = std::max(peaks[0], peaks[1]);
    const double qa = refined_position(post, a, grid.q_min(), grid.dq());
    const double qb = refined_position(post, b, grid.q_min(), grid.dq());
    if (std::abs(qa + qb) > 2.0 * grid.dq()) {
        rep.reason = "dominant posterior peaks are not mirror images";
        return rep;
    }
    if (post[peaks[1]] < 0.5 * post[peaks[0]]) {
        rep.reason = "dominant posterior peaks differ in height";
        return rep;
    }
    rep.q_star = 0.5 * (qb - qa);
    // delta(q*) by linear interpolation of the orbit table.
    const double x = (rep.q_star - grid.q_min()) / grid.dq();
    const auto i = static_cast<std::size_t>(std::floor(x));
    if (i + 1 >= grid.size()) {
        rep.reason = "q* outside the orbit grid";
        return rep;
    }
    const double t = x - static_cast<double>(i);
    rep.delta_q_star = (1.0 - t) * orbit.delta[i] + t * orbit.delta[i + 1];
    if (!std::isfinite(rep.delta_q_star)) {
        rep.reason = "phase integral undefined at q*";
        return rep;
    }
    rep.applicable = true;
    rep.envelope_center = result.pointer.mean;

    const auto& pdf = result.pointer.pdf;
    for (std::size_t m : detect_peaks(pdf)) {
        FringePeak fp;
        fp.p = refined_position(pdf, m, grid.p(0), grid.dp());
        const double k = std::round((fp.p * rep.q_star - 0.5 * rep.delta_q_star) / pi);
        fp.predicted = (k * pi + 0.5 * rep.delta_q_star) / rep.q_star;
        fp.lattice = j + std::round(fp.p - j);
        rep.max_predicted_dev = std::max(rep.max_predicted_dev, std::abs(fp.p - fp.predicted));
        rep.max_lattice_dev = std::max(rep.max_lattice_dev, std::abs(fp.p - fp.lattice));
        rep.peaks.push_back(fp);
    }
    if (rep.peaks.empty()) {
        rep.applicable = false;
        rep.reason = "no pointer maxima detected";
    }
    return rep;
}

std::vector<TransitionRow> transition_sweep(const SpinScenario& s, std::vector<double> sigma_list) {
    std::sort(sigma_list.begin(), sigma_list.end());
    const FiniteAmplitudeSource src = make_source(s);
    const Grid& grid = s.grid;
    std::vector<TransitionRow> rows;
    for (double sigma : sigma_list) {
        const PointerState phi = make_gaussian(grid, 0.0, sigma);
        const ConditionalResult res = ppme_condition(src, phi);
        TransitionRow row;
        row.sigma = sigma;
        const auto& post = res.posterior_q.pdf;
        for (std::size_t k : detect_peaks(post)) {
            const double q = refined_position(post, k, grid.q_min(), grid.dq());
            row.posterior_peaks.push_back(q);
            row.q_star = std::max(row.q_star, std::abs(q));
        }
        row.sampled_weak_value = src.weak_value(row.q_star).real();
        row.predicted_fringe_spacing = row.posterior_peaks.size() >= 2 && row.q_star > 0.0 ? pi / row.q_star : 0.0;
        const auto pk = detect_peaks(res.pointer.pdf);
        if (pk.size() >= 2) {
            std::vector<double> gaps;
            for (std::size_t i = 1; i < pk.size(); ++i) gaps.push_back(static_cast<double>(pk[i] - pk[i - 1]) * grid.dp());
            std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
            row.measured_fringe_spacing = gaps[gaps.size() / 2];
        }
        row.envelope_center = res.pointer.mean;
        row.pointer_variance = res.pointer.variance;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace qawv::spin
