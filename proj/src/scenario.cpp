#include "qawv/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "qawv/errors.hpp"

namespace qawv::scenario {

namespace {

using std::numbers::pi;

// Read-only view of a JSON node that remembers where it came from.
class Node {
public:
    Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    Node at(const std::string& key) const {
        if (!j_.is_object()) fail("expected an object");
        if (!j_.contains(key)) throw ConfigError(child_path(key), "required field is missing");
        return Node(j_.at(key), child_path(key));
    }
    Node at(std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

    void allow(std::initializer_list<const char*> keys) const {
        if (!j_.is_object()) fail("expected an object");
        const std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, v] : j_.items())
            if (!ok.count(k)) throw ConfigError(child_path(k), "unknown field");
    }

    double number() const {
        if (j_.is_null()) fail("required value is not set; provide it in a config file (see docs/config.md)");
        if (!j_.is_number()) fail("expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }
    double positive() const {
        const double v = number();
        if (!(v > 0.0)) fail("must be positive");
        return v;
    }
    std::size_t count() const {
        if (!j_.is_number_integer() || j_.get<long long>() <= 0) fail("expected a positive integer");
        return static_cast<std::size_t>(j_.get<long long>());
    }
    std::string string() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }
    std::size_t size() const {
        if (!j_.is_array()) fail("expected an array");
        return j_.size();
    }
    std::vector<double> numbers() const {
        std::vector<double> v(size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = at(i).number();
        return v;
    }
    spin::Vec3 vec3() const {
        if (size() != 3) fail("expected three components");
        return {at(0).number(), at(1).number(), at(2).number()};
    }

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_, what); }

private:
    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const Json& j_;
    std::string path_;
};

Json vec(double a, double b, double c) { return Json::array({a, b, c}); }

Json spin_preset(double j, const Json& profile) {
    const double r = 1.0 / std::sqrt(2.0);
    return Json{{"type", "spin"},
                {"spin", {{"j", j}, {"n1", vec(0.0, r, r)}, {"n2", vec(0.0, -r, r)}, {"axis", vec(0.0, 0.0, 1.0)}}},
                {"profile", profile},
                {"grid", {{"q_min", -4.0 * pi}, {"q_max", 4.0 * pi}, {"n", 4096}}},
                {"weak_sweep", {{"center", 0.0}, {"eps", {0.2, 0.1, 0.05, 0.025}}}},
                {"transition", {{"sigmas", {0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0, 1.5}}}}};
}

Json profile(const char* kind, const Json& center, double width) {
    return Json{{"kind", kind}, {"center", center}, {"width", width}};
}

const std::map<std::string, Json>& presets() {
    static const std::map<std::string, Json> table = [] {
        std::map<std::string, Json> t;
        const Json required = nullptr;

        // sigma_z between +1 eigenstates of sigma.n1 and sigma.n2,
        // n1,2 = (+-sin theta, 0, cos theta). The apparatus spread of pi is taken
        // on the reading variable p, so the q-width is 1/(2 pi): a weak measurement.
        const double th = 11.0 * pi / 24.0;
        t["fig1-spin-half"] = Json{
            {"type", "finite"},
            {"finite",
             {{"observable", {{"re", {{1.0, 0.0}, {0.0, -1.0}}}}},
              {"psi1", {{"re", {std::cos(0.5 * th), std::sin(0.5 * th)}}}},
              {"post_selection",
               {{"kind", "eigenbasis"},
                {"re", {{std::cos(th), -std::sin(th)}, {-std::sin(th), -std::cos(th)}}},
                {"select", 1}}}}},
            {"profile", profile("gaussian", 0.0, 0.5 / pi)},
            {"grid", {{"span", 8.0}, {"n", 4096}}},
            {"weak_sweep", {{"center", 0.0}, {"eps", {0.2, 0.1, 0.05, 0.025}}}}};

        t["fig4-j20"] = spin_preset(20.0, profile("gaussian", 0.0, pi / 24.0));
        t["fig5-a"] = spin_preset(20.0, profile("window", 0.0, pi / 12.0));
        t["fig5-b"] = spin_preset(20.0, profile("window", required, pi / 12.0));
        t["fig5-c"] = spin_preset(20.0, profile("gaussian", required, pi / 24.0));
        t["fig5-d"] = spin_preset(20.0, profile("gaussian", required, pi / 24.0));
        t["fig5-e"] = spin_preset(20.0, profile("gaussian", required, pi / 24.0));
        t["fig5-f"] = spin_preset(20.0, profile("window", 0.0, 3.0 * pi));
        t["fig5-g"] = spin_preset(20.0, profile("lorentzian", 0.0, pi / 24.0));
        t["fig6-sweep"] = spin_preset(20.0, profile("gaussian", 0.0, 0.1));

        t["free-particle"] = Json{
            {"type", "classical"},
            {"classical",
             {{"system", "free"},
              {"mass", 1.0},
              {"coupling", "linear"},
              {"times", {0.0, 1.0, 2.0}},
              {"endpoints", {0.0, 0.0}},
              {"prior", {{"q_center", 0.5}, {"q_sigma", 0.5}, {"p_sigma", 1.0}}},
              {"smears", {0.1, 0.05, 0.025}}}},
            {"grid", {{"span", 16.0}, {"n", 4096}}}};

        t["random-finite"] = Json{{"type", "finite"},
                                  {"finite", {{"random", {{"dim", 4}}}}},
                                  {"profile", profile("gaussian", 0.0, 1.0)},
                                  {"grid", {{"span", 64.0}, {"n", 4096}}},
                                  {"weak_sweep", {{"center", 0.0}, {"eps", {0.2, 0.1, 0.05, 0.025}}}}};
        return t;
    }();
    return table;
}

Grid parse_grid(const Node& n, const GridOverride& ov) {
    double lo = 0.0, hi = 0.0;
    std::size_t points = 0;
    if (n.has("span")) {
        n.allow({"span", "center", "n"});
        const double span = n.at("span").positive();
        const double c = n.has("center") ? n.at("center").number() : 0.0;
        lo = c - 0.5 * span;
        hi = c + 0.5 * span;
    } else {
        n.allow({"q_min", "q_max", "n"});
        lo = n.at("q_min").number();
        hi = n.at("q_max").number();
        if (!(hi > lo)) n.at("q_max").fail("must exceed q_min");
    }
    points = n.at("n").count();
    if (ov.span) {
        const double c = 0.5 * (lo + hi);
        lo = c - 0.5 * *ov.span;
        hi = c + 0.5 * *ov.span;
    }
    if (ov.n) points = *ov.n;
    try {
        return Grid(lo, hi, points);
    } catch (const PreconditionError& e) {
        throw ConfigError(n.path(), e.what());
    }
}

spin::ProfileSpec parse_profile(const Node& n) {
    n.allow({"kind", "center", "width"});
    spin::ProfileSpec p;
    const std::string kind = n.at("kind").string();
    if (kind == "gaussian") p.kind = spin::ProfileSpec::Kind::Gaussian;
    else if (kind == "window") p.kind = spin::ProfileSpec::Kind::Window;
    else if (kind == "lorentzian") p.kind = spin::ProfileSpec::Kind::Lorentzian;
    else n.at("kind").fail("expected gaussian, window or lorentzian");
    p.center = n.at("center").number();
    p.width = n.at("width").positive();
    return p;
}

CVector parse_vector(const Node& n) {
    n.allow({"re", "im"});
    const std::vector<double> re = n.at("re").numbers();
    std::vector<double> im(re.size(), 0.0);
    if (n.has("im")) {
        im = n.at("im").numbers();
        if (im.size() != re.size()) n.at("im").fail("length differs from re");
    }
    CVector v(static_cast<Eigen::Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i) v[static_cast<Eigen::Index>(i)] = {re[i], im[i]};
    return v;
}

CMatrix parse_matrix_part(const Node& n) {
    const std::size_t rows = n.size();
    CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::vector<double> row = n.at(r).numbers();
        if (row.size() != rows) n.at(r).fail("matrix must be square");
        for (std::size_t c = 0; c < rows; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
    return m;
}

CMatrix parse_matrix(const Node& n) {
    CMatrix m = parse_matrix_part(n.at("re"));
    if (n.has("im")) {
        const CMatrix im = parse_matrix_part(n.at("im"));
        if (im.rows() != m.rows()) n.at("im").fail("size differs from re");
        m += cplx(0.0, 1.0) * im;
    }
    return m;
}

template <class F>
auto wrap(const Node& n, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const PreconditionError& e) {
        throw ConfigError(n.path(), e.what());
    }
}

FiniteScenario parse_finite(const Node& n, const Node& root, std::uint64_t seed, const GridOverride& ov) {
    const Grid grid = parse_grid(root.at("grid"), ov);
    const spin::ProfileSpec prof = parse_profile(root.at("profile"));
    if (n.has("random")) {
        n.allow({"random"});
        const Node r = n.at("random");
        r.allow({"dim"});
        const std::size_t dim = r.at("dim").count();
        if (dim < 2 || dim > 200) r.at("dim").fail("expected 2 <= dim <= 200");
        RandomFinite rf = random_finite(dim, seed);
        return FiniteScenario{std::move(rf.obs), std::move(rf.psi1), std::move(rf.psi2), std::move(rf.basis), prof, grid};
    }
    n.allow({"observable", "psi1", "psi2", "post_selection"});
    const CMatrix a = parse_matrix(n.at("observable"));
    Observable obs = wrap(n.at("observable"), [&] { return spectral_decompose(a); });
    const std::size_t dim = obs.dim();
    auto state = [&](const Node& s) {
        CVector v = parse_vector(s);
        if (static_cast<std::size_t>(v.size()) != dim) s.fail("dimension differs from the observable");
        return wrap(s, [&] { return StateVector(std::move(v)); });
    };
    StateVector psi1 = state(n.at("psi1"));
    std::optional<PostSelectionBasis> basis;
    std::optional<StateVector> psi2;
    if (n.has("psi2")) psi2 = state(n.at("psi2"));
    if (n.has("post_selection")) {
        const Node ps = n.at("post_selection");
        ps.allow({"kind", "re", "im", "select"});
        const std::string kind = ps.at("kind").string();
        const CMatrix m = parse_matrix(ps);
        if (static_cast<std::size_t>(m.rows()) != dim) ps.fail("dimension differs from the observable");
        if (kind == "eigenbasis") {
            basis = wrap(ps, [&] { return PostSelectionBasis::eigenbasis(m); });
        } else if (kind == "columns") {
            std::vector<StateVector> cols;
            for (Eigen::Index c = 0; c < m.cols(); ++c) cols.push_back(StateVector::unnormalized(m.col(c)));
            basis = wrap(ps, [&] { return PostSelectionBasis(std::move(cols)); });
        } else {
            ps.at("kind").fail("expected eigenbasis or columns");
        }
        if (ps.has("select")) {
            if (psi2) ps.at("select").fail("psi2 is already given explicitly");
            const Node sel = ps.at("select");
            const double idx = sel.number();
            if (idx < 0 || idx >= static_cast<double>(dim) || idx != std::floor(idx)) sel.fail("index out of range");
            psi2 = basis->vectors()[static_cast<std::size_t>(idx)];
        }
    }
    if (!psi2) n.fail("psi2 or post_selection.select is required");
    return FiniteScenario{std::move(obs), std::move(psi1), std::move(*psi2), std::move(basis), prof, grid};
}

spin::SpinScenario parse_spin(const Node& n, const Node& root, const GridOverride& ov) {
    n.allow({"j", "n1", "n2", "axis"});
    spin::SpinScenario s;
    s.j = n.at("j").positive();
    s.n1 = n.at("n1").vec3();
    s.n2 = n.at("n2").vec3();
    s.axis = n.has("axis") ? n.at("axis").vec3() : spin::Vec3{0.0, 0.0, 1.0};
    s.profile = parse_profile(root.at("profile"));
    s.grid = parse_grid(root.at("grid"), ov);
    wrap(n, [&] { s.validate(); return 0; });
    return s;
}

classical::ClassicalScenario parse_classical(const Node& n, const Node& root, const GridOverride& ov) {
    n.allow({"system", "mass", "omega", "coupling", "times", "endpoints", "prior", "smears"});
    classical::ClassicalScenario s;
    const std::string sys = n.at("system").string();
    if (sys == "free") s.kind = classical::SystemKind::Free;
    else if (sys == "oscillator") s.kind = classical::SystemKind::Oscillator;
    else n.at("system").fail("expected free or oscillator");
    s.mass = n.at("mass").positive();
    if (s.kind == classical::SystemKind::Oscillator) s.omega = n.at("omega").positive();
    const std::string cpl = n.at("coupling").string();
    if (cpl == "linear") s.coupling = classical::Coupling::Linear;
    else if (cpl == "quadratic") s.coupling = classical::Coupling::Quadratic;
    else n.at("coupling").fail("expected linear or quadratic");
    const std::vector<double> t = n.at("times").numbers();
    if (t.size() != 3) n.at("times").fail("expected [t1, t_i, t2]");
    s.times = {t[0], t[1], t[2]};
    const std::vector<double> x = n.at("endpoints").numbers();
    if (x.size() != 2) n.at("endpoints").fail("expected [x1, x2]");
    s.x1 = x[0];
    s.x2 = x[1];
    const Node pr = n.at("prior");
    pr.allow({"q_center", "q_sigma", "p_sigma"});
    s.prior.q_center = pr.at("q_center").number();
    s.prior.q_sigma = pr.at("q_sigma").positive();
    s.prior.p_sigma = pr.at("p_sigma").positive();
    if (n.has("smears")) {
        s.smears = n.at("smears").numbers();
        for (double v : s.smears)
            if (!(v > 0.0)) n.at("smears").fail("smear widths must be positive");
    }
    s.grid = parse_grid(root.at("grid"), ov);
    wrap(n, [&] { s.validate(); return 0; });
    return s;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> v;
    for (const auto& [k, doc] : presets()) v.push_back(k);
    return v;
}

Json preset_document(const std::string& name) {
    const auto it = presets().find(name);
    if (it == presets().end()) {
        std::ostringstream os;
        os << "unknown preset '" << name << "'; available:";
        for (const auto& n : preset_names()) os << ' ' << n;
        throw ConfigError("preset", os.str());
    }
    Json doc = it->second;
    doc["name"] = name;
    return doc;
}

Scenario from_json(const Json& input, std::uint64_t seed, const GridOverride& ov) {
    if (!input.is_object()) throw ConfigError("", "configuration must be a JSON object");
    Json doc = input;
    if (doc.contains("base_preset")) {
        if (!doc["base_preset"].is_string()) throw ConfigError("base_preset", "expected a preset name");
        Json base = preset_document(doc["base_preset"].get<std::string>());
        doc.erase("base_preset");
        base.merge_patch(doc);
        doc = std::move(base);
    }
    const Node root(doc, "");
    root.allow({"name", "type", "spin", "finite", "classical", "profile", "grid", "weak_sweep", "transition"});

    Scenario sc;
    sc.name = root.has("name") ? root.at("name").string() : "config";
    const std::string type = root.at("type").string();
    if (type == "spin") {
        sc.kind = Kind::Spin;
        sc.spin = parse_spin(root.at("spin"), root, ov);
    } else if (type == "finite") {
        sc.kind = Kind::Finite;
        sc.finite = parse_finite(root.at("finite"), root, seed, ov);
    } else if (type == "classical") {
        sc.kind = Kind::Classical;
        sc.classical = parse_classical(root.at("classical"), root, ov);
    } else {
        root.at("type").fail("expected spin, finite or classical");
    }
    if (root.has("weak_sweep")) {
        const Node w = root.at("weak_sweep");
        w.allow({"center", "eps"});
        sc.weak_sweep.center = w.at("center").number();
        sc.weak_sweep.eps = w.at("eps").numbers();
        if (sc.weak_sweep.eps.size() < 2) w.at("eps").fail("need at least two widths");
        for (double e : sc.weak_sweep.eps)
            if (!(e > 0.0)) w.at("eps").fail("widths must be positive");
    }
    if (root.has("transition")) {
        const Node t = root.at("transition");
        t.allow({"sigmas"});
        sc.sigmas = t.at("sigmas").numbers();
        for (double s : sc.sigmas)
            if (!(s > 0.0)) t.at("sigmas").fail("widths must be positive");
    }
    sc.echo = std::move(doc);
    return sc;
}

Scenario load_preset(const std::string& name, std::uint64_t seed, const GridOverride& grid) {
    return from_json(preset_document(name), seed, grid);
}

Scenario load_config(const std::string& path, std::uint64_t seed, const GridOverride& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config", std::string("malformed JSON: ") + e.what());
    }
    return from_json(doc, seed, grid);
}

RandomFinite random_finite(std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(dim);
    auto gaussian_matrix = [&] {
        CMatrix m(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) m(r, c) = cplx(nd(rng), nd(rng));
        return m;
    };
    auto gaussian_state = [&] {
        CVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(nd(rng), nd(rng));
        return StateVector(v);
    };
    const CMatrix m = gaussian_matrix();
    Observable obs = spectral_decompose(0.5 * (m + m.adjoint()));
    StateVector psi1 = gaussian_state();
    StateVector psi2 = gaussian_state();
    const CMatrix q = Eigen::HouseholderQR<CMatrix>(gaussian_matrix()).householderQ();
    std::vector<StateVector> cols;
    for (Eigen::Index c = 0; c < n; ++c) cols.push_back(StateVector(q.col(c)));
    return RandomFinite{std::move(obs), std::move(psi1), std::move(psi2), PostSelectionBasis(std::move(cols))};
}

}  // namespace qawv::scenario
