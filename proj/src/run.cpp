#include "qawv/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>

#include "qawv/classical.hpp"
#include "qawv/csv.hpp"
#include "qawv/ensemble.hpp"
#include "qawv/errors.hpp"
#include "qawv/scenario.hpp"
#include "qawv/spin.hpp"

namespace qawv::cli {

namespace {

using scenario::Json;
using scenario::Kind;
using scenario::Scenario;
using std::numbers::pi;

class ToleranceViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Collects named pass/fail checks for the summary and the exit status.
class Checks {
public:
    explicit Checks(double scale) : scale_(scale) {}

    // |value| <= tol * scale
    void at_most(const std::string& name, double value, double tol) { add(name, value, tol * scale_, std::abs(value) <= tol * scale_, "abs_max"); }
    // value >= bound, unscaled
    void at_least(const std::string& name, double value, double bound) { add(name, value, bound, value >= bound, "min"); }
    // value >= -slack * scale
    void not_below(const std::string& name, double value, double slack) {
        add(name, value, -slack * scale_, value >= -slack * scale_, "min");
    }

    bool all_passed() const { return failed_.empty(); }
    const std::vector<std::string>& failed() const { return failed_; }
    Json json() const { return table_; }

private:
    void add(const std::string& name, double value, double limit, bool ok, const char* kind) {
        table_[name] = Json{{"value", value}, {"limit", limit}, {"kind", kind}, {"passed", ok}};
        if (!ok) failed_.push_back(name);
    }
    double scale_;
    Json table_ = Json::object();
    std::vector<std::string> failed_;
};

class Output {
public:
    Output(const std::string& dir, std::string stem, std::ostream& log) : dir_(dir), stem_(std::move(stem)), log_(log) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_)) throw ConfigError("out", "cannot create output directory '" + dir + "'");
        const auto probe = dir_ / ".qawv-write-test";
        {
            std::ofstream t(probe);
            if (!t) throw ConfigError("out", "output directory '" + dir + "' is not writable");
        }
        std::filesystem::remove(probe, ec);
    }

    void csv(const std::string& suffix, const std::vector<std::string>& header, const std::vector<std::vector<double>>& cols) {
        std::ostringstream os;
        csv::write(os, header, cols);
        put(suffix + ".csv", os.str());
    }
    void json(const std::string& suffix, const Json& j) { put(suffix + ".json", j.dump(2) + "\n"); }

private:
    void put(const std::string& name, const std::string& content) {
        const auto path = dir_ / (stem_ + "_" + name);
        std::ofstream f(path, std::ios::binary);
        f << content;
        if (!f) throw ConfigError("out", "failed writing '" + path.string() + "'");
        log_ << "wrote " << path.string() << "\n";
    }
    std::filesystem::path dir_;
    std::string stem_;
    std::ostream& log_;
};

// Every emitted pdf is re-validated: finite, nonnegative, unit mass.
void check_pdf(const std::string& name, const std::vector<double>& pdf, double spacing, double mass = 1.0) {
    double total = 0.0;
    for (double v : pdf) {
        if (!std::isfinite(v) || v < 0.0) throw PreconditionError("emitted pdf '" + name + "' has a negative or non-finite entry");
        total += v;
    }
    total *= spacing;
    if (std::abs(total - mass) > 1e-9 * std::max(1.0, mass)) {
        std::ostringstream os;
        os << "emitted pdf '" << name << "' integrates to " << total << " instead of " << mass;
        throw PreconditionError(os.str());
    }
}

Json vec_json(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(x);
    return a;
}

Json decomposition_json(const MomentDecomposition& d) {
    return Json{{"p_mean", d.p_mean},   {"aw_mean", d.aw_mean},       {"p_variance", d.p_variance},
                {"cross", d.cross},     {"aw_variance", d.aw_variance}, {"total_mean", d.total_mean()},
                {"total_variance", d.total_variance()}};
}

struct Problem {
    std::unique_ptr<AmplitudeSource> src;
    std::optional<PointerState> phi;
    std::optional<Observable> obs;     // finite-dimensional cases
    std::optional<StateVector> psi1;
    Grid grid = Grid(0.0, 1.0, 2);
};

Problem build_problem(const Scenario& sc) {
    Problem pr;
    switch (sc.kind) {
        case Kind::Spin: {
            const auto& s = *sc.spin;
            const spin::SpinOperators ops = spin::build_spin_operators(s.j);
            pr.obs = spin::measured_component(ops, s.axis);
            const auto [t1, f1] = spin::polar_angles(s.n1);
            pr.psi1 = spin::coherent_state_closed_form(s.j, t1, f1);
            pr.src = std::make_unique<FiniteAmplitudeSource>(spin::make_source(s));
            pr.grid = s.grid;
            pr.phi = spin::make_profile(s.grid, s.profile);
            break;
        }
        case Kind::Finite: {
            const auto& f = *sc.finite;
            pr.obs = f.obs;
            pr.psi1 = f.psi1;
            pr.src = std::make_unique<FiniteAmplitudeSource>(f.psi2, f.obs, f.psi1);
            pr.grid = f.grid;
            pr.phi = spin::make_profile(f.grid, f.profile);
            break;
        }
        case Kind::Classical: {
            const auto& c = *sc.classical;
            double finest = c.smears.front();
            for (double s : c.smears) finest = std::min(finest, s);
            pr.src = std::make_unique<classical::GaussianQuantumAmplitude>(classical::gaussian_quantum_amplitude(c, finest));
            pr.grid = c.grid;
            pr.phi = make_gaussian(c.grid, c.prior.q_center, c.prior.q_sigma);
            break;
        }
    }
    return pr;
}

bool gaussian_prior(const Scenario& sc) {
    switch (sc.kind) {
        case Kind::Spin: return sc.spin->profile.kind == spin::ProfileSpec::Kind::Gaussian;
        case Kind::Finite: return sc.finite->profile.kind == spin::ProfileSpec::Kind::Gaussian;
        case Kind::Classical: return true;
    }
    return false;
}

void emit_orbit(Output& out, const WeakOrbit& orbit) {
    const std::size_t n = orbit.grid.size();
    std::vector<double> valid(n);
    for (std::size_t k = 0; k < n; ++k) valid[k] = orbit.valid[k] ? 1.0 : 0.0;
    out.csv("orbit", {"q", "P12", "S12", "Aw_re", "Aw_im", "Gamma12", "delta", "valid"},
            {orbit.grid.q_values(), orbit.P12, orbit.S12, orbit.Aw_re, orbit.Aw_im, orbit.Gamma12, orbit.delta, valid});
}

Json emit_conditional(Output& out, const ConditionalResult& r) {
    const Grid& g = r.final_q.grid();
    check_pdf("prior_q", r.prior_q.pdf, g.dq());
    check_pdf("posterior_q", r.posterior_q.pdf, g.dq());
    check_pdf("prior_p", r.prior_p.pdf, g.dp());
    check_pdf("final_p", r.pointer.pdf, g.dp());
    out.csv("q", {"q", "prior_pdf", "posterior_pdf"}, {g.q_values(), r.prior_q.pdf, r.posterior_q.pdf});
    out.csv("p", {"p", "prior_pdf", "final_pdf"}, {g.p_values(), r.prior_p.pdf, r.pointer.pdf});
    return Json{{"P12_phi", r.P12_phi},
                {"prior_q", {{"mean", r.prior_q.mean}, {"variance", r.prior_q.variance}}},
                {"posterior_q", {{"mean", r.posterior_q.mean}, {"variance", r.posterior_q.variance}}},
                {"prior_p", {{"mean", r.prior_p.mean}, {"variance", r.prior_p.variance}}},
                {"final_p", {{"mean", r.pointer.mean}, {"variance", r.pointer.variance}}},
                {"decomposition", decomposition_json(r.decomposition)}};
}

Json peaks_json(const AmplitudeSource& src, const ConditionalResult& r) {
    const Grid& g = r.final_q.grid();
    Json peaks = Json::array();
    for (std::size_t k : spin::detect_peaks(r.posterior_q.pdf)) {
        Json e{{"q", g.q(k)}, {"posterior_pdf", r.posterior_q.pdf[k]}};
        try {
            e["sampled_weak_value"] = src.weak_value(g.q(k)).real();
        } catch (const PoleError&) {
            e["sampled_weak_value"] = nullptr;
        }
        peaks.push_back(e);
    }
    return peaks;
}

Json fringe_json(const spin::FringeReport& f) {
    Json j{{"applicable", f.applicable}};
    if (!f.applicable) {
        j["reason"] = f.reason;
        return j;
    }
    j["q_star"] = f.q_star;
    j["delta_q_star"] = f.delta_q_star;
    j["envelope_center"] = f.envelope_center;
    j["max_predicted_dev"] = f.max_predicted_dev;
    j["max_lattice_dev"] = f.max_lattice_dev;
    Json peaks = Json::array();
    for (const auto& p : f.peaks) peaks.push_back(Json{{"p", p.p}, {"predicted", p.predicted}, {"lattice", p.lattice}});
    j["peaks"] = peaks;
    return j;
}

Json transition_outputs(Output& out, const spin::SpinScenario& s, const std::vector<double>& sigmas) {
    const auto rows = spin::transition_sweep(s, sigmas);
    std::vector<double> sig, npk, qs, wv, pred, meas, env, var;
    Json table = Json::array();
    for (const auto& r : rows) {
        sig.push_back(r.sigma);
        npk.push_back(static_cast<double>(r.posterior_peaks.size()));
        qs.push_back(r.q_star);
        wv.push_back(r.sampled_weak_value);
        pred.push_back(r.predicted_fringe_spacing);
        meas.push_back(r.measured_fringe_spacing);
        env.push_back(r.envelope_center);
        var.push_back(r.pointer_variance);
        table.push_back(Json{{"sigma", r.sigma},
                             {"posterior_peaks", vec_json(r.posterior_peaks)},
                             {"q_star", r.q_star},
                             {"sampled_weak_value", r.sampled_weak_value},
                             {"predicted_fringe_spacing", r.predicted_fringe_spacing},
                             {"measured_fringe_spacing", r.measured_fringe_spacing},
                             {"envelope_center", r.envelope_center},
                             {"pointer_variance", r.pointer_variance}});
    }
    out.csv("transition",
            {"sigma", "posterior_peaks", "q_star", "sampled_weak_value", "predicted_fringe_spacing", "measured_fringe_spacing",
             "envelope_center", "pointer_variance"},
            {sig, npk, qs, wv, pred, meas, env, var});
    return table;
}

Scenario load(const RunConfig& cfg, bool allow_positional) {
    int sources = (cfg.preset ? 1 : 0) + (cfg.config_path ? 1 : 0) + (allow_positional && cfg.positional ? 1 : 0);
    if (!allow_positional && cfg.positional) throw ConfigError("arguments", "command '" + cfg.command + "' takes no positional argument");
    if (sources != 1) throw ConfigError("scenario", "exactly one scenario source is required (a preset or --config)");
    const scenario::GridOverride ov{cfg.grid_n, cfg.grid_span};
    if (cfg.config_path) return scenario::load_config(*cfg.config_path, cfg.seed, ov);
    return scenario::load_preset(cfg.preset ? *cfg.preset : *cfg.positional, cfg.seed, ov);
}

Json base_summary(const RunConfig& cfg, const Scenario& sc) {
    Json run{{"command", cfg.command}, {"seed", cfg.seed}, {"tol_scale", cfg.tol_scale}};
    if (cfg.grid_n) run["grid_n"] = *cfg.grid_n;
    if (cfg.grid_span) run["grid_span"] = *cfg.grid_span;
    return Json{{"run", run}, {"config", sc.echo}};
}

void finish(Output& out, Json summary, const Checks& checks, std::ostream& log) {
    summary["checks"] = checks.json();
    summary["passed"] = checks.all_passed();
    out.json("summary", summary);
    if (!checks.all_passed()) {
        std::string names;
        for (const auto& n : checks.failed()) names += (names.empty() ? "" : ", ") + n;
        log << "tolerance violation: " << names << "\n";
        throw ToleranceViolation(names);
    }
}

int cmd_orbit(const RunConfig& cfg, std::ostream& log) {
    const Scenario sc = load(cfg, false);
    Problem pr = build_problem(sc);
    Output out(cfg.out_dir, sc.name + "_" + cfg.command, log);
    const WeakOrbit orbit = build_orbit(*pr.src, pr.grid);
    emit_orbit(out, orbit);
    Json summary = base_summary(cfg, sc);
    summary["warnings"] = orbit.warnings;
    std::size_t invalid = 0;
    for (bool v : orbit.valid) invalid += v ? 0 : 1;
    summary["invalid_samples"] = invalid;
    finish(out, summary, Checks(cfg.tol_scale), log);
    return kExitOk;
}

int cmd_ppme(const RunConfig& cfg, std::ostream& log) {
    const Scenario sc = load(cfg, false);
    Problem pr = build_problem(sc);
    Output out(cfg.out_dir, sc.name + "_" + cfg.command, log);
    const ConditionalResult r = ppme_condition(*pr.src, *pr.phi);
    Json summary = base_summary(cfg, sc);
    summary["result"] = emit_conditional(out, r);
    summary["posterior_peaks"] = peaks_json(*pr.src, r);
    Checks checks(cfg.tol_scale);
    // Sampled moments of window and Lorentzian priors are truncation-limited
    // (slowly decaying p-tails), so the identity is only checked for gaussians.
    if (gaussian_prior(sc)) {
        checks.at_most("moment_decomposition_mean", r.pointer.mean - r.decomposition.total_mean(), 1e-8);
        checks.at_most("moment_decomposition_variance", r.pointer.variance - r.decomposition.total_variance(), 1e-8);
    }
    finish(out, summary, checks, log);
    return kExitOk;
}

int cmd_pme(const RunConfig& cfg, std::ostream& log) {
    const Scenario sc = load(cfg, false);
    Problem pr = build_problem(sc);
    if (!pr.obs) throw ConfigError("type", "pme needs a finite-dimensional scenario");
    Output out(cfg.out_dir, sc.name + "_" + cfg.command, log);
    const PdfSummary pme = pme_distribution(*pr.psi1, *pr.obs, *pr.phi);
    const PdfSummary prior = pdf_summary(to_p(*pr.phi));
    check_pdf("pme_pdf", pme.pdf, pr.grid.dp());
    check_pdf("prior_pdf", prior.pdf, pr.grid.dp());
    out.csv("pme", {"p", "prior_pdf", "pme_pdf"}, {pr.grid.p_values(), prior.pdf, pme.pdf});
    Json summary = base_summary(cfg, sc);
    const double expect = pr.obs->expectation(*pr.psi1);
    summary["pme"] = Json{{"mean", pme.mean}, {"variance", pme.variance}, {"expectation", expect},
                          {"prior_mean", prior.mean}, {"prior_variance", prior.variance}};
    Checks checks(cfg.tol_scale);
    checks.at_most("mean_minus_prior_minus_expectation", pme.mean - prior.mean - expect, 1e-6);
    finish(out, summary, checks, log);
    return kExitOk;
}

Json sum_rule_section(const scenario::FiniteScenario& f, const PointerState& phi, Checks& checks, Output& out, bool outcome_pdfs) {
    const SumRuleReport rep = check_sum_rules(f.psi1, f.obs, phi, *f.basis);
    const double weak = weak_value_sum_residual(f.psi1, f.obs, *f.basis);
    const Grid& g = phi.grid();
    Json outcomes = Json::array();
    std::vector<std::vector<double>> cols{g.p_values(), rep.pme_pdf};
    std::vector<std::string> header{"p", "pme_pdf"};
    std::vector<double> pooled(g.size(), 0.0);
    for (std::size_t b = 0; b < rep.outcomes.size(); ++b) {
        const auto& o = rep.outcomes[b];
        Json e{{"P1b", o.P1b}};
        e["pointer_mean"] = std::isfinite(o.pointer_mean) ? Json(o.pointer_mean) : Json(nullptr);
        e["weak_value_mean"] = std::isfinite(o.weak_value_mean) ? Json(o.weak_value_mean) : Json(nullptr);
        try {
            const cplx w = weak_value(f.basis->vectors()[b], f.obs, f.psi1);
            e["weak_value"] = Json{{"re", w.real()}, {"im", w.imag()}};
        } catch (const PoleError&) {
            e["weak_value"] = nullptr;
        }
        outcomes.push_back(e);
        if (outcome_pdfs) {
            std::vector<double> weighted(g.size(), 0.0);
            if (o.P1b > kMinPostSelection) {
                const FiniteAmplitudeSource src(f.basis->vectors()[b], f.obs, f.psi1);
                const ConditionalResult r = ppme_condition(src, phi);
                check_pdf("outcome_" + std::to_string(b), r.pointer.pdf, g.dp());
                for (std::size_t m = 0; m < g.size(); ++m) weighted[m] = o.P1b * r.pointer.pdf[m];
            }
            for (std::size_t m = 0; m < g.size(); ++m) pooled[m] += weighted[m];
            header.push_back("outcome_" + std::to_string(b) + "_weighted_pdf");
            cols.push_back(std::move(weighted));
        }
    }
    check_pdf("pme_pdf", rep.pme_pdf, g.dp());
    if (outcome_pdfs) {
        header.insert(header.begin() + 2, "pooled_pdf");
        cols.insert(cols.begin() + 2, pooled);
        out.csv("outcomes", header, cols);
    }
    checks.at_most("weak_value_sum_rule", weak, 1e-10);
    checks.at_most("pointer_sum_rule", rep.pointer_residual, 1e-6);
    checks.at_most("posterior_weak_value_sum_rule", rep.weak_residual, 1e-6);
    checks.not_below("covering_min", rep.covering_min, 1e-10);
    checks.at_most("pooling_max_dev", rep.pooling_max_dev, 1e-9);
    return Json{{"expectation", rep.expectation},         {"pme_mean", rep.pme_mean},
                {"weak_value_sum_residual", weak},        {"pointer_residual", rep.pointer_residual},
                {"posterior_weak_residual", rep.weak_residual}, {"covering_min", rep.covering_min},
                {"pooling_max_dev", rep.pooling_max_dev}, {"outcomes", outcomes}};
}


int cmd_sumrules(const RunConfig& cfg, std::ostream& log) {
    const Scenario sc = load(cfg, false);
    if (sc.kind != Kind::Finite || !sc.finite->basis) throw ConfigError("finite.post_selection", "sumrules needs a finite scenario with a post-selection basis");
    Problem pr = build_problem(sc);
    Output out(cfg.out_dir, sc.name + "_" + cfg.command, log);
    Checks checks(cfg.tol_scale);
    Json summary = base_summary(cfg, sc);
    summary["sum_rules"] = sum_rule_section(*sc.finite, *pr.phi, checks, out, true);
    finish(out, summary, checks, log);
    return kExitOk;
}

Json spin_figure_spin(const RunConfig& cfg, const Scenario& sc, Output& out, Checks& checks) {
    const spin::SpinScenario& s = *sc.spin;
    Problem pr = build_problem(sc);
    Json summary = base_summary(cfg, sc);
    const WeakOrbit orbit = build_orbit(*pr.src, s.grid);
    emit_orbit(out, orbit);
    summary["warnings"] = orbit.warnings;

    const spin::SpinOracle oracle(s);
    double max_dev = 0.0;
    for (std::size_t k = 0; k < s.grid.size(); ++k)
        if (orbit.valid[k]) max_dev = std::max(max_dev, std::abs(orbit.Aw_re[k] - oracle.weak_value(s.grid.q(k))));
    Json orbit_j{{"Aw_re_at_0", pr.src->weak_value(0.0).real()},
                 {"Aw_re_at_pi", pr.src->weak_value(pi).real()},
                 {"oracle_Aw_at_0", oracle.weak_value(0.0)},
                 {"oracle_Aw_at_pi", oracle.weak_value(pi)},
                 {"oracle_max_dev", max_dev},
                 {"ln_P12_ratio_pi_over_0", std::log(std::norm(pr.src->amplitude(pi))) - std::log(std::norm(pr.src->amplitude(0.0)))},
                 {"oracle_ln_P12_ratio", oracle.ln_likelihood(pi) - oracle.ln_likelihood(0.0)}};
    summary["orbit"] = orbit_j;
    checks.at_most("orbit_vs_oracle", max_dev, 1e-9);

    if (sc.name == "fig6-sweep") {
        summary["transition"] = transition_outputs(out, s, sc.sigmas);
        return summary;
    }
    const ConditionalResult r = ppme_condition(*pr.src, *pr.phi);
    summary["result"] = emit_conditional(out, r);
    summary["posterior_peaks"] = peaks_json(*pr.src, r);
    if (s.profile.kind == spin::ProfileSpec::Kind::Gaussian) {
        try {
            const spin::BiasResult b = spin::bias_fixed_point(*pr.src, s.profile.center, s.profile.width);
            summary["bias_fixed_point"] = Json{{"q_star", b.q_star},
                                               {"iterations", b.iterations},
                                               {"used_bisection", b.used_bisection},
                                               {"sampled_weak_value", b.sampled_weak_value},
                                               {"prior_weak_value", pr.src->weak_value(s.profile.center).real()}};
        } catch (const PreconditionError& e) {
            summary["bias_fixed_point"] = Json{{"applicable", false}, {"reason", e.what()}};
        }
    }
    summary["fringes"] = fringe_json(spin::fringe_check(orbit, r, s.j));
    if (gaussian_prior(sc))
        checks.at_most("moment_decomposition_mean", r.pointer.mean - r.decomposition.total_mean(), 1e-8);
    return summary;
}

int cmd_spin_figure(const RunConfig& cfg, std::ostream& log) {
    const Scenario sc = load(cfg, true);
    Output out(cfg.out_dir, sc.name + "_" + cfg.command, log);
    Checks checks(cfg.tol_scale);
    Json summary;
    if (sc.kind == Kind::Spin) {
        summary = spin_figure_spin(cfg, sc, out, checks);
    } else if (sc.kind == Kind::Finite && sc.finite->basis) {
        // Pooling figure: PME distribution and its decomposition over outcomes.
        Problem pr = build_problem(sc);
        summary = base_summary(cfg, sc);
        const PdfSummary pme = pme_distribution(*pr.psi1, *pr.obs, *pr.phi);
        summary["pme"] = Json{{"mean", pme.mean}, {"variance", pme.variance}};
        summary["sum_rules"] = sum_rule_section(*sc.finite, *pr.phi, checks, out, true);
    } else {
        throw ConfigError("type", "spin-figure needs a spin preset or a finite scenario with a post-selection basis");
    }
    finish(out, summary, checks, log);
    return kExitOk;
}

int cmd_weak_sweep(const RunConfig& cfg, std::ostream& log) {
    const Scenario sc = load(cfg, false);
    Problem pr = build_problem(sc);
    if (!pr.obs) throw ConfigError("type", "weak-sweep needs a finite-dimensional observable");
    Output out(cfg.out_dir, sc.name + "_" + cfg.command, log);
    const WeakLimitSweep w = weak_limit_sweep(*pr.src, sc.weak_sweep.center, sc.weak_sweep.eps);
    std::vector<double> eps, pm, pdfm, p12, me, pe;
    for (const auto& r : w.rows) {
        eps.push_back(r.eps);
        pm.push_back(r.pointer_mean);
        pdfm.push_back(r.pdf_mean);
        p12.push_back(r.P12_phi);
        me.push_back(r.mean_error);
        pe.push_back(r.P12_error);
    }
    out.csv("weak_sweep", {"eps", "pointer_mean", "pdf_mean", "P12_phi", "mean_error", "P12_error"}, {eps, pm, pdfm, p12, me, pe});
    Json summary = base_summary(cfg, sc);
    summary["weak_sweep"] = Json{{"center", w.center},
                                 {"aw_center", w.aw_center},
                                 {"P12_center", w.P12_center},
                                 {"mean_orders", vec_json(w.mean_orders)},
                                 {"P12_orders", vec_json(w.P12_orders)},
                                 {"spectral_range", pr.obs->spectral_range()}};
    Checks checks(cfg.tol_scale);
    double min_order = std::numeric_limits<double>::infinity();
    for (double o : w.mean_orders) min_order = std::min(min_order, o);
    checks.at_least("min_mean_order", min_order, 1.8);
    checks.at_most("final_mean_error", w.rows.back().mean_error, 1e-3 * pr.obs->spectral_range());
    finish(out, summary, checks, log);
    return kExitOk;
}

int cmd_transition_sweep(const RunConfig& cfg, std::ostream& log) {
    const Scenario sc = load(cfg, false);
    if (sc.kind != Kind::Spin) throw ConfigError("type", "transition-sweep needs a spin scenario");
    Output out(cfg.out_dir, sc.name + "_" + cfg.command, log);
    Json summary = base_summary(cfg, sc);
    summary["transition"] = transition_outputs(out, *sc.spin, sc.sigmas);
    finish(out, summary, Checks(cfg.tol_scale), log);
    return kExitOk;
}

int cmd_classical_compare(const RunConfig& cfg, std::ostream& log) {
    const Scenario sc = load(cfg, false);
    if (sc.kind != Kind::Classical) throw ConfigError("type", "classical-compare needs a classical scenario");
    const classical::ClassicalScenario& c = *sc.classical;
    Output out(cfg.out_dir, sc.name + "_" + cfg.command, log);
    const classical::CorrespondenceReport rep = classical::correspondence_report(c);
    classical::ClassicalScenario matched = c;
    matched.prior.p_sigma = 0.5 / c.prior.q_sigma;
    const classical::ClassicalPosterior cp = classical::classical_posterior(matched);
    check_pdf("posterior", cp.posterior_q, c.grid.dq());
    check_pdf("pointer", cp.pointer_pdf, c.grid.dp());
    out.csv("classical", {"q", "A_tilde", "S_tilde", "van_vleck", "posterior"},
            {c.grid.q_values(), cp.a_tilde, cp.action, cp.van_vleck, cp.posterior_q});
    out.csv("classical_p", {"p", "pointer_pdf"}, {c.grid.p_values(), cp.pointer_pdf});

    Json samples = Json::array();
    for (const auto& s : rep.samples)
        samples.push_back(Json{{"smear", s.smear},
                               {"orbit_max_dev", s.orbit_max_dev},
                               {"posterior_max_dev", s.posterior_max_dev},
                               {"pointer_mean", s.pointer_mean},
                               {"pointer_variance", s.pointer_variance},
                               {"aw_variance", s.aw_variance}});
    Json summary = base_summary(cfg, sc);
    summary["correspondence"] = Json{
        {"method", "quantum quantities extrapolated to sharp endpoints (polynomial in smear^2 through all smear widths)"},
        {"samples", samples},
        {"quantum_mean", rep.quantum_mean},
        {"classical_mean", rep.classical_mean},
        {"quantum_variance", rep.quantum_variance},
        {"classical_variance", rep.classical_variance},
        {"quantum_aw_variance", rep.quantum_aw_variance},
        {"classical_aw_variance", rep.classical_aw_variance},
        {"finest_mean_dev", rep.finest_mean_dev},
        {"finest_variance_dev", rep.finest_variance_dev},
        {"classical_pointer_pdf_mean", cp.pointer_pdf_mean}};
    Checks checks(cfg.tol_scale);
    checks.at_most("orbit_max_dev", rep.orbit_max_dev, 1e-6);
    checks.at_most("posterior_max_dev", rep.posterior_max_dev, 1e-5);
    checks.at_most("mean_dev", rep.mean_dev, 1e-5);
    checks.at_most("variance_dev", rep.variance_dev, 1e-5);
    checks.at_most("aw_variance_dev", rep.aw_variance_dev, 1e-5);
    checks.at_most("generating_function_max_dev", rep.generating_function_max_dev, 1e-6);
    checks.at_most("momentum_identity_max_dev", rep.momentum_identity_max_dev, 1e-6);
    finish(out, summary, checks, log);
    return kExitOk;
}

using Handler = int (*)(const RunConfig&, std::ostream&);

const std::vector<std::pair<std::string, Handler>>& table() {
    static const std::vector<std::pair<std::string, Handler>> t{
        {"orbit", cmd_orbit},
        {"ppme", cmd_ppme},
        {"pme", cmd_pme},
        {"sumrules", cmd_sumrules},
        {"spin-figure", cmd_spin_figure},
        {"weak-sweep", cmd_weak_sweep},
        {"transition-sweep", cmd_transition_sweep},
        {"classical-compare", cmd_classical_compare},
    };
    return t;
}

}  // namespace

std::vector<std::string> commands() {
    std::vector<std::string> v;
    for (const auto& [name, h] : table()) v.push_back(name);
    return v;
}

int run(const RunConfig& cfg, std::ostream& log) {
    try {
        if (!(cfg.tol_scale > 0.0) || !std::isfinite(cfg.tol_scale)) throw ConfigError("tol-scale", "must be a positive number");
        for (const auto& [name, handler] : table())
            if (name == cfg.command) return handler(cfg, log);
        throw ConfigError("command", "unknown command '" + cfg.command + "'");
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ToleranceViolation&) {
        return kExitTolerance;
    } catch (const PreconditionError& e) {
        log << "numerical precondition failed: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        log << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace qawv::cli
