#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qawv/classical.hpp"
#include "qawv/errors.hpp"

using namespace qawv;
using namespace qawv::classical;
using std::numbers::pi;

namespace {

ClassicalScenario oscillator(Coupling c) {
    ClassicalScenario s;
    s.kind = SystemKind::Oscillator;
    s.omega = 0.7;
    s.coupling = c;
    s.times = {0.0, 0.9, 2.0};
    s.x1 = 0.3;
    s.x2 = -0.4;
    return s;
}

}  // namespace

TEST_CASE("free particle with linear coupling: closed-form trajectory") {
    const ClassicalScenario s = free_particle_preset();
    for (double q : {-2.0, 0.0, 1.0, 3.5}) {
        const auto sol = solve_boundary(s, q);
        // Symmetric endpoints at 0, unit mass, kick q at t = 1: x_i = -q/2.
        CHECK(sol.x_i() == doctest::Approx(-q / 2).epsilon(1e-14));
        CHECK(sol.measured() == doctest::Approx(-q / 2).epsilon(1e-14));
        CHECK(sol.initial_momentum() == doctest::Approx(-q / 2).epsilon(1e-14));
        CHECK(sol.final_momentum() == doctest::Approx(q / 2).epsilon(1e-14));
        CHECK(sol.action() == doctest::Approx(-q * q / 4).epsilon(1e-13));
        CHECK(sol.van_vleck() == doctest::Approx(0.5).epsilon(1e-8));
        CHECK(sol.position(0.0) == doctest::Approx(0.0));
        CHECK(sol.position(2.0) == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("jump condition and boundary values hold") {
    for (Coupling c : {Coupling::Linear, Coupling::Quadratic}) {
        const auto s = oscillator(c);
        for (double q : {-0.8, 0.4, 1.2}) {
            const auto sol = solve_boundary(s, q);
            const double ti = s.times[1];
            const double jump = sol.velocity(ti + 1e-12) - sol.velocity(ti);
            CHECK(s.mass * jump == doctest::Approx(q * coupling_slope(c, sol.x_i())).epsilon(1e-8));
            CHECK(sol.position(s.times[0]) == doctest::Approx(s.x1).epsilon(1e-12));
            CHECK(sol.position(s.times[2]) == doctest::Approx(s.x2).epsilon(1e-12));
            CHECK(sol.measured() == doctest::Approx(coupling_value(c, sol.x_i())).epsilon(1e-14));
        }
    }
}

TEST_CASE("shooting agrees with the analytic segments") {
    for (Coupling c : {Coupling::Linear, Coupling::Quadratic}) {
        for (const ClassicalScenario& s : {free_particle_preset(), oscillator(c)}) {
            auto sc = s;
            sc.coupling = c;
            for (double q : {-0.6, 0.25, 0.9}) {
                const auto a = solve_boundary(sc, q, SolveMethod::Analytic);
                const auto b = solve_boundary(sc, q, SolveMethod::Shooting);
                CHECK(b.x_i() == doctest::Approx(a.x_i()).epsilon(1e-9));
                CHECK(b.action() == doctest::Approx(a.action()).epsilon(1e-9));
                CHECK(b.initial_momentum() == doctest::Approx(a.initial_momentum()).epsilon(1e-9));
                CHECK(b.method() == SolveMethod::Shooting);
            }
        }
    }
}

TEST_CASE("generating-function identities") {
    for (Coupling c : {Coupling::Linear, Coupling::Quadratic}) {
        const auto s = oscillator(c);
        const double h = 1e-5;
        for (double q : {-0.7, 0.3}) {
            const auto sol = solve_boundary(s, q);
            const double dSdq = (kicked_action(s, q + h, s.x1, s.x2) - kicked_action(s, q - h, s.x1, s.x2)) / (2 * h);
            const double dSdx1 = (kicked_action(s, q, s.x1 + h, s.x2) - kicked_action(s, q, s.x1 - h, s.x2)) / (2 * h);
            const double dSdx2 = (kicked_action(s, q, s.x1, s.x2 + h) - kicked_action(s, q, s.x1, s.x2 - h)) / (2 * h);
            CHECK(dSdq == doctest::Approx(sol.measured()).epsilon(1e-7));
            CHECK(-dSdx1 == doctest::Approx(sol.initial_momentum()).epsilon(1e-7));
            CHECK(dSdx2 == doctest::Approx(sol.final_momentum()).epsilon(1e-7));
        }
    }
}

TEST_CASE("focusing configurations are rejected") {
    ClassicalScenario s;
    s.kind = SystemKind::Oscillator;
    s.omega = 1.0;
    s.times = {0.0, 1.0, pi};  // half period: conjugate endpoints
    CHECK_THROWS_AS(solve_boundary(s, 0.2), PreconditionError);

    // Quadratic kick with unit segments: x2 = v0 (2 + 2q), so q = -1 refocuses.
    ClassicalScenario f = free_particle_preset();
    f.coupling = Coupling::Quadratic;
    CHECK_THROWS_AS(solve_boundary(f, -1.0), PreconditionError);
}

TEST_CASE("scenario validation") {
    ClassicalScenario s;
    s.times = {0.0, 2.0, 1.0};
    CHECK_THROWS_AS(s.validate(), PreconditionError);
    s = ClassicalScenario{};
    s.mass = -1.0;
    CHECK_THROWS_AS(s.validate(), PreconditionError);
    s = ClassicalScenario{};
    s.prior.q_sigma = 0.0;
    CHECK_THROWS_AS(s.validate(), PreconditionError);
}

TEST_CASE("richardson extrapolation removes even powers") {
    const std::vector<double> h{0.1, 0.05, 0.025};
    std::vector<double> v;
    for (double x : h) v.push_back(3.0 + 2.0 * x * x - 5.0 * x * x * x * x);
    CHECK(richardson(h, v) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(richardson({0.1}, {7.0}) == 7.0);
}

TEST_CASE("classical posterior of the free particle") {
    const auto s = free_particle_preset();
    const auto post = classical_posterior(s);
    CHECK(post.pointer_pdf_mass == doctest::Approx(1.0).epsilon(1e-9));
    // Constant Van Vleck density: the posterior equals the prior up to
    // finite-difference noise in the density.
    double dev = 0.0;
    for (std::size_t k = 0; k < post.prior_q.size(); ++k) dev = std::max(dev, std::abs(post.prior_q[k] - post.posterior_q[k]));
    CHECK(dev < 1e-7);
    CHECK(post.pointer_mean == doctest::Approx(-s.prior.q_center / 2).epsilon(1e-9));
    CHECK(post.pointer_pdf_mean == doctest::Approx(post.pointer_mean).epsilon(1e-8));
    CHECK(post.decomposition.aw_variance == doctest::Approx(s.prior.q_sigma * s.prior.q_sigma / 4).epsilon(1e-9));
}

TEST_CASE("gaussian quantum amplitude: symmetric weak orbit") {
    const auto s = free_particle_preset();
    const auto amp = gaussian_quantum_amplitude(s, 0.05);
    for (double q : {-2.0, 0.5, 3.0}) CHECK(amp.weak_value(q).real() == doctest::Approx(-q / 2).epsilon(1e-12));
    // ln P12 derivative against the weak value's imaginary part.
    const double h = 1e-5, q = 0.7;
    const double dlnp = (std::log(std::norm(amp.amplitude(q + h))) - std::log(std::norm(amp.amplitude(q - h)))) / (2 * h);
    CHECK(dlnp == doctest::Approx(-2 * amp.weak_value(q).imag()).epsilon(1e-6));
    ClassicalScenario osc = oscillator(Coupling::Linear);
    CHECK_THROWS_AS(gaussian_quantum_amplitude(osc, 0.05), PreconditionError);
}

TEST_CASE("quantum and classical statistics coincide for the free particle") {
    const auto rep = correspondence_report(free_particle_preset());
    CHECK(rep.orbit_max_dev < 1e-6);
    CHECK(rep.posterior_max_dev < 1e-5);
    CHECK(rep.mean_dev < 1e-5);
    // Smeared endpoints of width w give |G|^2 ~ exp(-w^2 q^2), which pulls the
    // posterior mean toward 0 by a known amount; extrapolation removes it.
    const auto s = free_particle_preset();
    const double w = s.smears.back(), sig2 = s.prior.q_sigma * s.prior.q_sigma;
    const double bias = 0.5 * s.prior.q_center * (1.0 - 1.0 / (1.0 + 2.0 * w * w * sig2));
    CHECK(std::abs(rep.finest_mean_dev) == doctest::Approx(bias).epsilon(1e-4));
    CHECK(rep.variance_dev < 1e-5);
    CHECK(rep.aw_variance_dev < 1e-5);
    CHECK(rep.generating_function_max_dev < 1e-6);
    CHECK(rep.momentum_identity_max_dev < 1e-6);
    CHECK(rep.samples.size() == 3);
}
