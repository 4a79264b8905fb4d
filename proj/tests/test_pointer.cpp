#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "qawv/errors.hpp"
#include "qawv/pointer.hpp"

using namespace qawv;
using std::numbers::pi;

TEST_CASE("grid geometry") {
    const Grid g = Grid::centered(8.0, 64);
    CHECK(g.q_min() == -4.0);
    CHECK(g.dq() == doctest::Approx(0.125));
    CHECK(g.dp() == doctest::Approx(2 * pi / 8.0));
    CHECK(g.p(32) == 0.0);
    CHECK(g.p(0) == doctest::Approx(-g.p_nyquist()));
    CHECK(g.p_odd(0) == 0.0);
    CHECK(g.nearest_q(-100.0) == 0);
    CHECK(g.nearest_q(0.126) == 33);
    CHECK_THROWS_AS(Grid(0.0, 1.0, 100), PreconditionError);  // not a power of two
    CHECK_THROWS_AS(Grid(1.0, 0.0, 64), PreconditionError);
}

TEST_CASE("transform sign agrees with direct quadrature") {
    const Grid g = Grid::centered(20.0, 256);
    const PointerState phi = make_gaussian(g, 0.7, 0.9);
    const PointerState ph = to_p(phi);
    for (std::size_t m : {100u, 128u, 131u, 150u}) {
        const double p = g.p(m);
        cplx sum = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            sum += std::polar(1.0, -p * g.q(k)) * phi.samples()[k];
        sum *= g.dq() / std::sqrt(2 * pi);
        CHECK(std::abs(ph.samples()[m] - sum) < 1e-12);
    }
}

TEST_CASE("round trip and Parseval") {
    const Grid g = Grid::centered(30.0, 1024);
    const PointerState phi = make_lorentzian(g, -1.0, 0.8);
    const PointerState ph = to_p(phi);
    CHECK(ph.norm_squared() == doctest::Approx(phi.norm_squared()).epsilon(1e-12));
    const PointerState back = to_q(ph);
    double dev = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) dev = std::max(dev, std::abs(back.samples()[k] - phi.samples()[k]));
    CHECK(dev < 1e-13);
}

TEST_CASE("phase factor e^{icq} shifts the p-distribution by c") {
    const Grid g = Grid::centered(40.0, 2048);
    const PointerState phi = make_gaussian(g, 0.0, 1.5);
    std::vector<cplx> shifted(phi.samples());
    const double c = 2.0;
    for (std::size_t k = 0; k < g.size(); ++k) shifted[k] *= std::polar(1.0, c * g.q(k));
    const auto base = pdf_summary(to_p(phi));
    const auto moved = pdf_summary(to_p(PointerState::raw(g, Rep::Q, shifted)));
    CHECK(moved.mean - base.mean == doctest::Approx(c).epsilon(1e-10));
    CHECK(moved.variance == doctest::Approx(base.variance).epsilon(1e-10));
}

TEST_CASE("gaussian moments are the uncertainty pair") {
    const Grid g = Grid::centered(40.0, 4096);
    const double sigma = 1.3;
    const auto q = pdf_summary(make_gaussian(g, 0.5, sigma));
    const auto p = pdf_summary(to_p(make_gaussian(g, 0.5, sigma)));
    CHECK(q.mean == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(q.variance == doctest::Approx(sigma * sigma).epsilon(1e-12));
    CHECK(std::abs(p.mean) < 1e-12);
    CHECK(p.variance == doctest::Approx(1.0 / (4 * sigma * sigma)).epsilon(1e-12));
}

TEST_CASE("momentum operator matches the spectral mean") {
    const Grid g = Grid::centered(40.0, 2048);
    std::vector<cplx> s(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
        s[k] = std::exp(-0.25 * std::pow(g.q(k) - 1.0, 2)) * std::polar(1.0, 0.8 * g.q(k));
    const PointerState phi = PointerState::normalized(g, Rep::Q, s);
    const PointerState dphi = apply_momentum(phi);
    cplx expect = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) expect += std::conj(phi.samples()[k]) * dphi.samples()[k] * g.dq();
    CHECK(expect.real() == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(std::abs(expect.imag()) < 1e-12);
    CHECK(pdf_summary(to_p(phi)).mean == doctest::Approx(0.8).epsilon(1e-10));
}

TEST_CASE("window and Lorentzian defining properties") {
    const Grid g = Grid::centered(16.0, 4096);
    const auto w = make_window(g, 0.0, 1.0);
    std::size_t support = 0;
    for (const auto& v : w.samples()) support += std::abs(v) > 0.0;
    CHECK(static_cast<double>(support) * g.dq() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.norm_squared() == doctest::Approx(1.0));

    const double gamma = 0.5;
    const Grid wide = Grid::centered(4000.0, 1 << 18);
    const auto l = make_lorentzian(wide, 0.0, gamma);
    const std::size_t k0 = wide.nearest_q(0.0);
    const double peak = std::norm(l.samples()[k0]);
    std::size_t k = k0;
    while (std::norm(l.samples()[k]) > 0.5 * peak) ++k;
    CHECK(std::abs(wide.q(k) - gamma) <= 2.0 * wide.dq());
}

TEST_CASE("unresolvable widths are rejected") {
    const Grid g = Grid::centered(8.0, 64);
    CHECK_THROWS_AS(make_gaussian(g, 0.0, 0.2), PreconditionError);
    CHECK_THROWS_AS(make_gaussian(g, 0.0, 3.0), PreconditionError);  // truncated at the edges
    CHECK_THROWS_AS(make_window(g, 0.0, 0.1), PreconditionError);
}

TEST_CASE("CSV round trip is lossless") {
    const Grid g = Grid::centered(10.0, 128);
    const auto phi = make_gaussian(g, 0.3, 0.7);
    std::stringstream ss;
    write_csv(ss, phi);
    CHECK(ss.str().rfind("q,re,im\n", 0) == 0);
    const auto back = read_pointer_csv(ss, g);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(back.samples()[k] == phi.samples()[k]);
}

TEST_CASE("every constructor gives unit mass in both representations") {
    const Grid g = Grid::centered(60.0, 4096);
    const PointerState states[] = {
        make_gaussian(g, 0.7, 1.3),
        make_window(g, -2.0, 3.0),
        make_lorentzian(g, 0.0, 0.05),
    };
    for (const auto& phi : states) {
        const PointerState ph = to_p(phi);
        CHECK(std::abs(phi.norm_squared() - 1.0) < 1e-9);
        CHECK(std::abs(ph.norm_squared() - 1.0) < 1e-9);
        double mass = 0.0;
        for (double v : pdf_summary(ph).pdf) mass += v * g.dp();
        CHECK(std::abs(mass - 1.0) < 1e-9);
    }
}
