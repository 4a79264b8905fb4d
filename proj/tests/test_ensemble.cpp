#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qawv/ensemble.hpp"
#include "qawv/errors.hpp"
#include "qawv/scenario.hpp"

using namespace qawv;
using std::numbers::pi;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

Observable sigma_z() {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    return spectral_decompose(m);
}

}  // namespace

TEST_CASE("orbit derivatives match the weak value") {
    // d arg G / dq = Re W and d ln P12 / dq = -2 Im W.
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto rf = scenario::random_finite(2 + seed % 4, seed);
        const FiniteAmplitudeSource src(rf.psi2, rf.obs, rf.psi1);
        const double h = 1e-5;
        for (double q : {-1.3, 0.2, 0.9}) {
            const cplx gp = src.amplitude(q + h), gm = src.amplitude(q - h);
            const double dphase = std::arg(gp / gm) / (2 * h);
            const double dlnp = (std::log(std::norm(gp)) - std::log(std::norm(gm))) / (2 * h);
            const cplx w = src.weak_value(q);
            const double scale = 1.0 + std::abs(w);
            CHECK(std::abs(dphase - w.real()) < 1e-6 * scale);
            CHECK(std::abs(dlnp + 2.0 * w.imag()) < 1e-6 * scale);
        }
    }
}

TEST_CASE("orbit at q = 0 is the plain weak value") {
    const auto rf = scenario::random_finite(4, 21);
    const FiniteAmplitudeSource src(rf.psi2, rf.obs, rf.psi1);
    CHECK(std::abs(src.weak_value(0.0) - weak_value(rf.psi2, rf.obs, rf.psi1)) < 1e-12);
    CHECK(std::abs(src.numerator(0.7) - src.amplitude(0.7) * src.weak_value(0.7)) < 1e-13);
}

TEST_CASE("orbit phase integral and consistency relation") {
    const auto rf = scenario::random_finite(3, 4);
    const FiniteAmplitudeSource src(rf.psi2, rf.obs, rf.psi1);
    const Grid g = Grid::centered(6.0, 2048);
    const WeakOrbit orbit = build_orbit(src, g);
    for (std::size_t k = 0; k < g.size(); k += 97) {
        REQUIRE(orbit.valid[k]);
        CHECK(orbit.S12[k] == doctest::Approx(orbit.Gamma12[k] + g.q(k) * orbit.Aw_re[k]).epsilon(1e-12));
    }
    // delta(q) equals the phase change of G over [-q, q].
    for (double q : {0.5, 1.0, 2.0}) {
        const std::size_t k = g.nearest_q(q);
        const double qk = g.q(k);
        double ref = 0.0;
        const int steps = 20000;
        for (int i = 0; i < steps; ++i) {
            const double a = -qk + 2 * qk * i / steps, b = -qk + 2 * qk * (i + 1) / steps;
            ref += std::arg(src.amplitude(b) / src.amplitude(a));
        }
        CHECK(orbit.delta[k] == doctest::Approx(ref).epsilon(1e-5));
    }
}

TEST_CASE("orthogonal states give an invalid pole sample") {
    const StateVector up = StateVector::basis(2, 0), down = StateVector::basis(2, 1);
    CVector plus(2);
    plus << 1.0, 1.0;
    CVector minus(2);
    minus << 1.0, -1.0;
    // <-|e^{i sz q}|+> vanishes at q = 0 only.
    const FiniteAmplitudeSource src{StateVector(minus), sigma_z(), StateVector(plus)};
    CHECK_THROWS_AS(src.weak_value(0.0), PoleError);
    const Grid g(-1.0, 1.0, 64);
    const WeakOrbit orbit = build_orbit(src, g);
    CHECK_FALSE(orbit.valid[g.nearest_q(0.0)]);
    CHECK(orbit.valid[g.nearest_q(0.5)]);
    CHECK(std::isnan(orbit.Aw_re[g.nearest_q(0.0)]));
    CHECK_THROWS_AS(FiniteAmplitudeSource(up, sigma_z(), StateVector::basis(3, 0)), DimensionError);
    (void)down;
}

TEST_CASE("eigenstate pre-selection shifts the pointer rigidly") {
    const Observable z = sigma_z();
    CVector v(2);
    v << 0.6, 0.8;
    const FiniteAmplitudeSource src(StateVector(v), z, StateVector::basis(2, 0));
    const Grid g = Grid::centered(40.0, 2048);
    const PointerState phi = make_gaussian(g, 0.3, 1.0);
    const ConditionalResult r = ppme_condition(src, phi);
    CHECK(r.P12_phi == doctest::Approx(0.36).epsilon(1e-12));
    const auto prior_p = pdf_summary(to_p(phi));
    CHECK(r.pointer.mean == doctest::Approx(prior_p.mean + 1.0).epsilon(1e-10));
    CHECK(r.pointer.variance == doctest::Approx(prior_p.variance).epsilon(1e-10));
    CHECK(r.posterior_q.mean == doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("conditional pdfs are normalized and decomposition matches moments") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto rf = scenario::random_finite(2 + seed % 3, 40 + seed);
        const FiniteAmplitudeSource src(rf.psi2, rf.obs, rf.psi1);
        const Grid g = Grid::centered(120.0, 4096);
        const auto phi = make_gaussian(g, 0.4, 0.5 + 0.3 * seed);
        const auto r = ppme_condition(src, phi);
        double mass = 0.0;
        for (double v : r.pointer.pdf) mass += v * r.pointer.spacing;
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.decomposition.total_mean() == doctest::Approx(r.pointer.mean).epsilon(1e-8));
        CHECK(r.decomposition.total_variance() == doctest::Approx(r.pointer.variance).epsilon(1e-8));
        CHECK(std::abs(r.decomposition.cross) < 1e-8);  // real gaussian prior
        CHECK(std::abs(r.decomposition.p_mean) < 1e-10);
    }
}

TEST_CASE("complex prior produces a cross term") {
    const auto rf = scenario::random_finite(3, 77);
    const FiniteAmplitudeSource src(rf.psi2, rf.obs, rf.psi1);
    const Grid g = Grid::centered(60.0, 4096);
    std::vector<cplx> s(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
        s[k] = std::exp(-std::pow(g.q(k), 2) / 4.0 + cplx(0, 0.3 * g.q(k) * g.q(k)));
    const auto r = ppme_condition(src, PointerState::normalized(g, Rep::Q, s));
    CHECK(r.decomposition.total_mean() == doctest::Approx(r.pointer.mean).epsilon(1e-8));
    CHECK(r.decomposition.total_variance() == doctest::Approx(r.pointer.variance).epsilon(1e-8));
    CHECK(std::abs(r.decomposition.cross) > 1e-4);
}

TEST_CASE("Fourier and spectral routes agree") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const auto rf = scenario::random_finite(1 + seed % 6, seed * 7);
        const FiniteAmplitudeSource src(rf.psi2, rf.obs, rf.psi1);
        const Grid g = Grid::centered(80.0, 4096);
        const auto phi = make_gaussian(g, -0.2, 0.8);
        const auto a = final_p_fourier(src, phi);
        const auto b = final_p_spectral(src, phi);
        double dev = 0.0;
        for (std::size_t m = 0; m < a.size(); ++m) dev = std::max(dev, std::abs(std::norm(a[m]) - std::norm(b[m])));
        CHECK(dev < 1e-10);
    }
}

TEST_CASE("pre-selected distribution has the spectral moments") {
    const auto rf = scenario::random_finite(5, 9);
    const Grid g = Grid::centered(100.0, 4096);
    const auto phi = make_gaussian(g, 0.0, 0.7);
    const auto pme = pme_distribution(rf.psi1, rf.obs, phi);
    const auto prior_p = pdf_summary(to_p(phi));
    CHECK(pme.mean == doctest::Approx(rf.obs.expectation(rf.psi1)).epsilon(1e-10));
    CHECK(pme.variance == doctest::Approx(prior_p.variance + rf.obs.variance(rf.psi1)).epsilon(1e-10));
}

TEST_CASE("sum rules, covering and pooling on random scenarios") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const std::size_t dim = 2 + seed % 5;
        const auto rf = scenario::random_finite(dim, 500 + seed);
        CHECK(std::abs(weak_value_sum_residual(rf.psi1, rf.obs, rf.basis)) < 1e-10);
        const Grid g = Grid::centered(120.0, 4096);
        const auto phi = make_gaussian(g, 0.0, seed % 2 ? 0.3 : 2.0);
        const auto rep = check_sum_rules(rf.psi1, rf.obs, phi, rf.basis);
        double total = 0.0;
        for (const auto& o : rep.outcomes) total += o.P1b;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(rep.pointer_residual) < 1e-6);
        CHECK(std::abs(rep.weak_residual) < 1e-6);
        CHECK(rep.covering_min > -1e-10);
        CHECK(rep.pooling_max_dev < 1e-9);
    }
}

TEST_CASE("weak limit converges with second order") {
    const auto rf = scenario::random_finite(3, 12);
    const FiniteAmplitudeSource src(rf.psi2, rf.obs, rf.psi1);
    const auto sweep = weak_limit_sweep(src, 0.4, {0.2, 0.1, 0.05, 0.025});
    CHECK(sweep.aw_center == doctest::Approx(src.weak_value(0.4).real()).epsilon(1e-12));
    REQUIRE(sweep.mean_orders.size() == 3);
    for (double o : sweep.mean_orders) CHECK(o > 1.8);
    CHECK(std::abs(sweep.rows.back().mean_error) < 1e-3 * rf.obs.spectral_range());
    CHECK_THROWS_AS(weak_limit_sweep(src, 0.0, {0.1, -0.1}), PreconditionError);
}

TEST_CASE("negligible post-selection is rejected") {
    // <-| e^{i sz q} |+> = i sin q vanishes on a narrow window about 0.
    CVector plus(2), minus(2);
    plus << 1.0, 1.0;
    minus << 1.0, -1.0;
    const FiniteAmplitudeSource src{StateVector(minus), sigma_z(), StateVector(plus)};
    const Grid g = Grid::centered(4e-7, 64);
    CHECK_THROWS_AS(ppme_condition(src, make_window(g, 0.0, 1e-7)), PreconditionError);
}

TEST_CASE("orbit of identical states starts at the expectation") {
    const auto rf = scenario::random_finite(4, 2);
    const FiniteAmplitudeSource src(rf.psi1, rf.obs, rf.psi1);
    const Grid g = Grid::centered(0.5, 64);
    const WeakOrbit orbit = build_orbit(src, g);
    const std::size_t k0 = g.nearest_q(0.0);
    CHECK(orbit.Aw_re[k0] == doctest::Approx(rf.obs.expectation(rf.psi1)).epsilon(1e-12));
    CHECK(std::abs(orbit.Aw_im[k0]) < 1e-12);
    CHECK(max_abs_diff(orbit.P12, orbit.P12) == 0.0);
}

TEST_CASE("posterior is the prior reweighted by the likelihood") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto rf = scenario::random_finite(2 + seed % 4, 90 + seed);
        const FiniteAmplitudeSource src(rf.psi2, rf.obs, rf.psi1);
        const Grid g = Grid::centered(40.0, 2048);
        const auto r = ppme_condition(src, make_gaussian(g, -0.2, 1.1));
        double dev = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double p12 = std::norm(src.amplitude(g.q(k)));
            dev = std::max(dev, std::abs(r.posterior_q.pdf[k] - p12 / r.P12_phi * r.prior_q.pdf[k]));
        }
        CHECK(dev < 1e-10);
    }
}
