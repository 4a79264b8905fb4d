#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qawv/errors.hpp"
#include "qawv/spin.hpp"

using namespace qawv;
using namespace qawv::spin;
using std::numbers::pi;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    return normalized({g(rng), g(rng), g(rng)});
}

}  // namespace

TEST_CASE("angular momentum algebra") {
    for (double j : {0.5, 1.0, 1.5, 3.0, 7.5, 20.0}) {
        const auto ops = build_spin_operators(j);
        const CMatrix& x = ops.Jx.matrix();
        const CMatrix& y = ops.Jy.matrix();
        const CMatrix& z = ops.Jz.matrix();
        const auto n = x.rows();
        CHECK(n == static_cast<Eigen::Index>(2 * j + 1));
        CHECK((x * y - y * x - cplx(0, 1) * z).norm() < 1e-11 * j * j);
        CHECK((y * z - z * y - cplx(0, 1) * x).norm() < 1e-11 * j * j);
        const CMatrix casimir = x * x + y * y + z * z;
        CHECK((casimir - j * (j + 1) * CMatrix::Identity(n, n)).norm() < 1e-10 * j * j);
        CHECK(ops.Jz.max_eigenvalue() == doctest::Approx(j));
        CHECK(ops.Jx.min_gap() == doctest::Approx(1.0));
    }
}

TEST_CASE("invalid spin quantum numbers") {
    CHECK_THROWS_AS(build_spin_operators(0.0), PreconditionError);
    CHECK_THROWS_AS(build_spin_operators(0.7), PreconditionError);
    CHECK_THROWS_AS(build_spin_operators(25.5), PreconditionError);
    CHECK_NOTHROW(build_spin_operators(25.0));
}

TEST_CASE("closed-form coherent state matches the rotated state") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ut(0.0, pi), up(-pi, pi);
    for (double j : {0.5, 1.0, 2.5, 10.0, 20.0}) {
        const auto ops = build_spin_operators(j);
        for (int t = 0; t < 5; ++t) {
            const double th = ut(rng), ph = up(rng);
            const auto a = coherent_state(ops, th, ph);
            const auto b = coherent_state_closed_form(j, th, ph);
            CHECK((a.amplitudes() - b.amplitudes()).norm() < 1e-13 * (1.0 + j));
        }
    }
}

TEST_CASE("coherent state is the top eigenvector of J.n") {
    std::mt19937_64 rng(4);
    for (double j : {0.5, 3.0, 12.0}) {
        const auto ops = build_spin_operators(j);
        const Vec3 n = random_unit(rng);
        const auto psi = coherent_state(ops, n);
        const Observable jn = measured_component(ops, n);
        CHECK(jn.expectation(psi) == doctest::Approx(j).epsilon(1e-12));
        CHECK(jn.variance(psi) < 1e-10 * j);
        CHECK(ops.Jx.variance(psi) + ops.Jy.variance(psi) + ops.Jz.variance(psi) == doctest::Approx(j).epsilon(1e-10));
    }
}

TEST_CASE("vector helpers") {
    const Vec3 x{1, 0, 0}, z{0, 0, 1};
    const Vec3 r = rotate(x, z, pi / 2);
    CHECK(r[1] == doctest::Approx(1.0));
    CHECK(std::abs(r[0]) < 1e-15);
    const auto [th, ph] = polar_angles(normalized({1, 1, 0}));
    CHECK(th == doctest::Approx(pi / 2));
    CHECK(ph == doctest::Approx(pi / 4));
    CHECK(dot(x, z) == 0.0);
}

TEST_CASE("overlap and weak spin vector agree with matrix elements") {
    std::mt19937_64 rng(9);
    for (double j : {0.5, 1.0, 4.0}) {
        const auto ops = build_spin_operators(j);
        SpinScenario s;
        s.j = j;
        const SpinOracle oracle(s);
        for (int t = 0; t < 5; ++t) {
            const Vec3 n1 = random_unit(rng), n2 = random_unit(rng);
            const auto a = coherent_state(ops, n1), b = coherent_state(ops, n2);
            CHECK(std::norm(inner(b, a)) == doctest::Approx(oracle.overlap_probability(n1, n2)).epsilon(1e-11));
            const Vec3 w = oracle.weak_spin_vector(n1, n2);
            CHECK(weak_value(b, ops.Jx, a).real() == doctest::Approx(w[0]).epsilon(1e-10));
            CHECK(weak_value(b, ops.Jy, a).real() == doctest::Approx(w[1]).epsilon(1e-10));
            CHECK(weak_value(b, ops.Jz, a).real() == doctest::Approx(w[2]).epsilon(1e-10));
        }
    }
}

TEST_CASE("spin-half weak value with tilted states") {
    const double th = 11 * pi / 24;
    SpinScenario s;
    s.j = 0.5;
    const SpinOracle oracle(s);
    const Vec3 w = oracle.weak_spin_vector({std::sin(th), 0, std::cos(th)}, {-std::sin(th), 0, std::cos(th)});
    CHECK(w[2] == doctest::Approx(0.5 / std::cos(th)).epsilon(1e-14));
    CHECK(std::abs(w[0]) < 1e-15);
}

TEST_CASE("canonical orbit closed form") {
    for (double j : {0.5, 1.0, 20.0}) {
        const auto s = canonical_scenario(j);
        REQUIRE(s.is_canonical());
        const SpinOracle oracle(s);
        CHECK(oracle.weak_value(0.0) == doctest::Approx(j * std::sqrt(2.0)).epsilon(1e-14));
        CHECK(oracle.weak_value(pi) == doctest::Approx(j / std::sqrt(2.0)).epsilon(1e-14));
        CHECK(oracle.ln_likelihood(pi) - oracle.ln_likelihood(0.0) == doctest::Approx(2 * j * std::log(2.0)).epsilon(1e-12));
        const auto src = make_source(s);
        for (double q : {-2.0, -0.3, 0.0, 1.1, pi, 5.0}) {
            CHECK(std::abs(src.weak_value(q).real() - oracle.weak_value(q)) < 1e-9);
            CHECK(std::log(std::norm(src.amplitude(q))) == doctest::Approx(oracle.ln_likelihood(q)).epsilon(1e-9));
        }
    }
}

TEST_CASE("non-canonical orientation uses the vector oracle") {
    SpinScenario s;
    s.j = 3.0;
    s.n1 = normalized({0.3, 0.5, 0.8});
    s.n2 = normalized({-0.2, -0.6, 0.7});
    s.axis = normalized({0.1, 0.2, 1.0});
    s.validate();
    CHECK_FALSE(s.is_canonical());
    const SpinOracle oracle(s);
    const auto src = make_source(s);
    for (double q : {-1.0, 0.0, 0.4, 2.0}) {
        CHECK(src.weak_value(q).real() == doctest::Approx(oracle.weak_value(q)).epsilon(1e-10));
        CHECK(std::log(std::norm(src.amplitude(q))) == doctest::Approx(oracle.ln_likelihood(q)).epsilon(1e-10));
    }
    const double d = oracle.delta(1.0);
    const double ref = std::arg(src.amplitude(1.0) / src.amplitude(-1.0));
    CHECK(std::remainder(d - ref, 2 * pi) == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("phase integral closed form against the sampled orbit") {
    const auto s = canonical_scenario(20.0);
    const SpinOracle oracle(s);
    const auto src = make_source(s);
    const Grid g = Grid::centered(8 * pi, 8192);
    const WeakOrbit orbit = build_orbit(src, g);
    for (double q : {0.5, 2.0, pi, 4.0}) {
        const std::size_t k = g.nearest_q(q);
        CHECK(orbit.delta[k] == doctest::Approx(oracle.delta(g.q(k))).epsilon(1e-6));
    }
    // Continuation across the branch at q = pi keeps delta monotone.
    CHECK(oracle.delta(pi + 0.1) > oracle.delta(pi - 0.1));
    CHECK(oracle.delta(pi) == doctest::Approx(4 * 20.0 * pi / 2).epsilon(1e-12));
}

TEST_CASE("large-j gaussian approximation near the extrema") {
    const auto s = canonical_scenario(20.0);
    const SpinOracle oracle(s);
    for (double q_ext : {0.0, pi})
        for (double u : {0.02, -0.05, 0.099, -0.099})
            CHECK(oracle.ln_likelihood_gaussian(q_ext + u, q_ext) ==
                  doctest::Approx(oracle.ln_likelihood(q_ext + u)).epsilon(1e-2));
    const double h = 1e-3;
    const double fd = (oracle.weak_value(0.3 + h) - 2 * oracle.weak_value(0.3) + oracle.weak_value(0.3 - h)) / (h * h);
    CHECK(oracle.weak_value_second_derivative(0.3) == doctest::Approx(fd).epsilon(1e-5));
}

TEST_CASE("bias fixed point locates the posterior maximum") {
    const auto s = canonical_scenario(20.0);
    const auto src = make_source(s);
    const Grid g = Grid::centered(8 * pi, 8192);
    for (double qi : {0.0, 0.5, 2.5})
        for (double sigma : {0.05, 0.15}) {
            const BiasResult b = bias_fixed_point(src, qi, sigma);
            const auto r = ppme_condition(src, make_gaussian(g, qi, sigma));
            std::size_t arg = 0;
            for (std::size_t k = 1; k < r.posterior_q.pdf.size(); ++k)
                if (r.posterior_q.pdf[k] > r.posterior_q.pdf[arg]) arg = k;
            CHECK(std::abs(b.q_star - g.q(arg)) <= g.dq());
            // Fixed-point equation.
            CHECK(b.q_star == doctest::Approx(qi - 2 * sigma * sigma * src.weak_value(b.q_star).imag()).epsilon(1e-8));
        }
}

TEST_CASE("peak detection") {
    const std::vector<double> v{0, 1, 0, 0.05, 0, 3, 2.9, 3, 0, 2, 0};
    const auto peaks = detect_peaks(v, 0.1, 1);
    REQUIRE(peaks.size() == 4);
    CHECK(peaks[0] == 1);
    CHECK(peaks[1] == 5);
    CHECK(peaks[3] == 9);
    const auto sparse = detect_peaks(v, 0.1, 3);
    CHECK(sparse.size() == 3);
}

TEST_CASE("squeeze: narrowed at q = 0 and broadened at q = pi") {
    auto s = canonical_scenario(20.0);
    const auto src = make_source(s);
    for (double qi : {0.0, pi}) {
        const auto phi = make_gaussian(s.grid, qi, pi / 24);
        const auto r = ppme_condition(src, phi);
        const double ratio = r.pointer.variance / r.prior_p.variance;
        if (qi == 0.0)
            CHECK(ratio < 0.95);
        else
            CHECK(ratio > 1.05);
    }
}

TEST_CASE("fringes of the broad window sit on the integer lattice") {
    auto s = canonical_scenario(20.0);
    s.profile = {ProfileSpec::Kind::Window, 0.0, 3 * pi};
    const auto src = make_source(s);
    const auto orbit = build_orbit(src, s.grid);
    const auto r = ppme_condition(src, make_profile(s.grid, s.profile));
    const FringeReport rep = fringe_check(orbit, r, s.j);
    REQUIRE(rep.applicable);
    CHECK(rep.q_star == doctest::Approx(pi).epsilon(0.02));
    CHECK(rep.max_lattice_dev <= s.grid.dp());
    CHECK(rep.envelope_center == doctest::Approx(20.0 / std::sqrt(2.0)).epsilon(0.05));
}

TEST_CASE("transition from a single posterior peak to two") {
    const auto s = canonical_scenario(20.0);
    const auto rows = transition_sweep(s, {1.0, 0.1});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].sigma == 0.1);  // sorted
    CHECK(rows[0].posterior_peaks.size() == 1);
    CHECK(rows[0].predicted_fringe_spacing == 0.0);
    CHECK(rows[1].posterior_peaks.size() == 2);
    CHECK(rows[1].predicted_fringe_spacing == doctest::Approx(pi / rows[1].q_star));
    CHECK(rows[0].envelope_center > rows[1].envelope_center);
}

TEST_CASE("spin j behaves as a product of 2j spin-halves") {
    std::mt19937_64 rng(17);
    const auto half = build_spin_operators(0.5);
    for (double j : {1.0, 2.5, 5.0}) {
        const auto ops = build_spin_operators(j);
        for (int t = 0; t < 3; ++t) {
            const Vec3 n1 = random_unit(rng), n2 = random_unit(rng);
            const auto a = coherent_state(ops, n1), b = coherent_state(ops, n2);
            const auto ah = coherent_state(half, n1), bh = coherent_state(half, n2);
            const double single = std::norm(inner(bh, ah));
            CHECK(std::norm(inner(b, a)) == doctest::Approx(std::pow(single, 2 * j)).epsilon(1e-9));
            const Observable* full[] = {&ops.Jx, &ops.Jy, &ops.Jz};
            const Observable* one[] = {&half.Jx, &half.Jy, &half.Jz};
            for (int c = 0; c < 3; ++c) {
                const cplx wj = weak_value(b, *full[c], a);
                const cplx wh = weak_value(bh, *one[c], ah);
                CHECK(std::abs(wj - 2 * j * wh) < 1e-9 * (1.0 + std::abs(wj)));
            }
        }
    }
}

TEST_CASE("likelihood times the weak value to the power 2j is constant") {
    for (double j : {0.5, 3.0, 20.0}) {
        const auto src = make_source(canonical_scenario(j));
        auto invariant = [&](double q) {
            return 2 * j * std::log(src.weak_value(q).real()) + std::log(std::norm(src.amplitude(q)));
        };
        const double ref = invariant(0.0);
        for (double q : {-2.5, 0.7, 1.9, pi, 4.4}) CHECK(std::abs(invariant(q) - ref) < 1e-8);
    }
}
