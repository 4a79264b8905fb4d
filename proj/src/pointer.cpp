#include "qawv/pointer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fftw3.h>

#include "qawv/csv.hpp"
#include "qawv/errors.hpp"

namespace qawv {

namespace {

using std::numbers::pi;

// FFTW planning is not thread-safe; execution on fresh buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// Unnormalized DFT. sign = FFTW_FORWARD (e^{-i}) or FFTW_BACKWARD (e^{+i}).
std::vector<cplx> dft(std::span<const cplx> in, int sign) {
    const int n = static_cast<int>(in.size());
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * in.size()));
    if (buf == nullptr) throw std::bad_alloc();
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < in.size(); ++i) {
        buf[i][0] = in[i].real();
        buf[i][1] = in[i].imag();
    }
    fftw_execute(plan);
    std::vector<cplx> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = {buf[i][0], buf[i][1]};
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(buf);
    return out;
}

double sum_sq(std::span<const cplx> s) {
    double acc = 0.0;
    for (const auto& z : s) acc += std::norm(z);
    return acc;
}

}  // namespace

Grid::Grid(double q_min, double q_max, std::size_t n) : q_min_(q_min), q_max_(q_max), n_(n) {
    if (n < 2 || !std::has_single_bit(n)) throw PreconditionError("Grid: n must be a power of two >= 2");
    if (!(q_max > q_min) || !std::isfinite(q_min) || !std::isfinite(q_max))
        throw PreconditionError("Grid: need finite q_max > q_min");
    dq_ = (q_max - q_min) / static_cast<double>(n);
    dp_ = 2.0 * pi / (static_cast<double>(n) * dq_);
}

Grid Grid::centered(double span, std::size_t n) { return Grid(-0.5 * span, 0.5 * span, n); }

std::vector<double> Grid::q_values() const {
    std::vector<double> v(n_);
    for (std::size_t k = 0; k < n_; ++k) v[k] = q(k);
    return v;
}

std::vector<double> Grid::p_values() const {
    std::vector<double> v(n_);
    for (std::size_t m = 0; m < n_; ++m) v[m] = p(m);
    return v;
}

std::size_t Grid::nearest_q(double qv) const {
    const double idx = std::round((qv - q_min_) / dq_);
    if (idx <= 0.0) return 0;
    if (idx >= static_cast<double>(n_ - 1)) return n_ - 1;
    return static_cast<std::size_t>(idx);
}

PointerState PointerState::normalized(const Grid& grid, Rep rep, std::vector<cplx> samples) {
    if (samples.size() != grid.size()) throw DimensionError("PointerState: sample count differs from grid size");
    const double spacing = rep == Rep::Q ? grid.dq() : grid.dp();
    const double n2 = sum_sq(samples) * spacing;
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw PreconditionError("PointerState: cannot normalize a zero or non-finite state");
    const double s = 1.0 / std::sqrt(n2);
    for (auto& z : samples) z *= s;
    return PointerState(grid, rep, std::move(samples));
}

PointerState PointerState::raw(const Grid& grid, Rep rep, std::vector<cplx> samples) {
    if (samples.size() != grid.size()) throw DimensionError("PointerState: sample count differs from grid size");
    return PointerState(grid, rep, std::move(samples));
}

double PointerState::norm_squared() const { return sum_sq(samples_) * spacing(); }

PointerState make_gaussian(const Grid& grid, double center, double sigma) {
    if (!(sigma > 3.0 * grid.dq())) {
        std::ostringstream os;
        os << "make_gaussian: sigma " << sigma << " is not resolved by grid spacing " << grid.dq();
        throw PreconditionError(os.str());
    }
    const double s = sigma * std::sqrt(2.0);
    const double outside = 0.5 * std::erfc((grid.q_max() - center) / s) + 0.5 * std::erfc((center - grid.q_min()) / s);
    if (outside > 1e-10) {
        std::ostringstream os;
        os << "make_gaussian: grid truncates " << outside << " of the probability mass";
        throw PreconditionError(os.str());
    }
    std::vector<cplx> v(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = grid.q(k) - center;
        v[k] = std::exp(-x * x / (4.0 * sigma * sigma));
    }
    return PointerState::normalized(grid, Rep::Q, std::move(v));
}

PointerState make_window(const Grid& grid, double center, double eps) {
    if (!(eps >= 4.0 * grid.dq())) throw PreconditionError("make_window: eps must span at least 4 grid cells");
    const double lo = center - 0.5 * eps;
    const double hi = center + 0.5 * eps;
    const double slack = 1e-9 * grid.dq();
    if (lo < grid.q_min() - slack || hi > grid.q_max() + slack)
        throw PreconditionError("make_window: window extends beyond the grid");
    std::vector<cplx> v(grid.size());
    const double height = 1.0 / std::sqrt(eps);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = grid.q(k);
        if (x >= lo && x < hi) v[k] = height;
    }
    return PointerState::normalized(grid, Rep::Q, std::move(v));
}

PointerState make_lorentzian(const Grid& grid, double center, double gamma) {
    if (!(gamma > 2.0 * grid.dq())) throw PreconditionError("make_lorentzian: gamma is not resolved by the grid");
    std::vector<cplx> v(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = (grid.q(k) - center) / gamma;
        v[k] = 1.0 / std::sqrt(1.0 + x * x);
    }
    return PointerState::normalized(grid, Rep::Q, std::move(v));
}

std::vector<cplx> q_to_p_samples(const Grid& grid, std::span<const cplx> q_samples) {
    const std::size_t n = grid.size();
    if (q_samples.size() != n) throw DimensionError("to_p: sample count differs from grid size");
    std::vector<cplx> work(q_samples.begin(), q_samples.end());
    for (std::size_t k = 1; k < n; k += 2) work[k] = -work[k];
    std::vector<cplx> out = dft(work, FFTW_FORWARD);
    const double scale = grid.dq() / std::sqrt(2.0 * pi);
    for (std::size_t m = 0; m < n; ++m) out[m] *= scale * std::polar(1.0, -grid.p(m) * grid.q_min());
    return out;
}

std::vector<cplx> p_to_q_samples(const Grid& grid, std::span<const cplx> p_samples) {
    const std::size_t n = grid.size();
    if (p_samples.size() != n) throw DimensionError("to_q: sample count differs from grid size");
    std::vector<cplx> work(n);
    for (std::size_t m = 0; m < n; ++m) work[m] = p_samples[m] * std::polar(1.0, grid.p(m) * grid.q_min());
    std::vector<cplx> out = dft(work, FFTW_BACKWARD);
    const double scale = grid.dp() / std::sqrt(2.0 * pi);
    for (std::size_t k = 0; k < n; ++k) out[k] *= (k % 2 ? -scale : scale);
    return out;
}

PointerState to_p(const PointerState& state) {
    if (state.rep() != Rep::Q) throw PreconditionError("to_p: state is already in the p-representation");
    return PointerState::raw(state.grid(), Rep::P, q_to_p_samples(state.grid(), state.samples()));
}

PointerState to_q(const PointerState& state) {
    if (state.rep() != Rep::P) throw PreconditionError("to_q: state is already in the q-representation");
    return PointerState::raw(state.grid(), Rep::Q, p_to_q_samples(state.grid(), state.samples()));
}

PointerState apply_momentum(const PointerState& q_state) {
    const Grid& g = q_state.grid();
    std::vector<cplx> ps = q_to_p_samples(g, q_state.samples());
    for (std::size_t m = 0; m < ps.size(); ++m) ps[m] *= g.p_odd(m);
    return PointerState::raw(g, Rep::Q, p_to_q_samples(g, ps));
}

PdfSummary summarize_pdf(const Grid& grid, Rep rep, std::vector<double> pdf) {
    if (pdf.size() != grid.size()) throw DimensionError("summarize_pdf: size differs from grid");
    PdfSummary s;
    s.spacing = rep == Rep::Q ? grid.dq() : grid.dp();
    double mass = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < pdf.size(); ++i) {
        mass += pdf[i];
        if (rep == Rep::Q) {
            const double x = grid.q(i);
            m1 += x * pdf[i];
            m2 += x * x * pdf[i];
        } else {
            m1 += grid.p_odd(i) * pdf[i];
            m2 += grid.p_even_sq(i) * pdf[i];
        }
    }
    mass *= s.spacing;
    m1 *= s.spacing;
    m2 *= s.spacing;
    s.mean = m1 / mass;
    s.variance = m2 / mass - s.mean * s.mean;
    s.pdf = std::move(pdf);
    return s;
}

PdfSummary pdf_summary(const PointerState& state) {
    std::vector<double> pdf(state.samples().size());
    for (std::size_t i = 0; i < pdf.size(); ++i) pdf[i] = std::norm(state.samples()[i]);
    return summarize_pdf(state.grid(), state.rep(), std::move(pdf));
}

void write_csv(std::ostream& os, const PointerState& state) {
    const std::size_t n = state.samples().size();
    std::vector<double> x(n), re(n), im(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = state.coordinate(i);
        re[i] = state.samples()[i].real();
        im[i] = state.samples()[i].imag();
    }
    csv::write(os, {state.rep() == Rep::Q ? "q" : "p", "re", "im"}, {x, re, im});
}

PointerState read_pointer_csv(std::istream& is, const Grid& grid) {
    const csv::Table t = csv::read(is);
    if (t.header.size() != 3 || (t.header[0] != "q" && t.header[0] != "p") || t.header[1] != "re" || t.header[2] != "im")
        throw ConfigError("csv", "pointer CSV must have columns q|p, re, im");
    const Rep rep = t.header[0] == "q" ? Rep::Q : Rep::P;
    if (t.columns[0].size() != grid.size()) throw ConfigError("csv", "pointer CSV row count differs from grid size");
    std::vector<cplx> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double expect = rep == Rep::Q ? grid.q(i) : grid.p(i);
        if (std::abs(t.columns[0][i] - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
            throw ConfigError("csv", "pointer CSV coordinates do not match the grid");
        v[i] = {t.columns[1][i], t.columns[2][i]};
    }
    return PointerState::raw(grid, rep, std::move(v));
}

}  // namespace qawv
