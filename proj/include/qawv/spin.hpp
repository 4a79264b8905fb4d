#pragma once

// Spin-j coherent-state scenarios: J_n measurements between coherent states,
// the closed-form weak spin vector / likelihood oracles, the posterior bias
// fixed point, and fringe / transition analysis of the conditional pointer pdf.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qawv/ensemble.hpp"
#include "qawv/hilbert.hpp"
#include "qawv/pointer.hpp"

namespace qawv::spin {

using Vec3 = std::array<double, 3>;

inline constexpr double kMaxJ = 25.0;

struct SpinOperators {
    double j;
    Observable Jx, Jy, Jz;
};

// Basis index i holds m = j - i. Throws unless 2j is a positive integer and j <= 25.
SpinOperators build_spin_operators(double j);

// e^{-i Jz phi} e^{-i Jy theta} |j,j> through spectral exponentials.
StateVector coherent_state(const SpinOperators& ops, double theta, double phi_az);
StateVector coherent_state(const SpinOperators& ops, const Vec3& n);
// <j,m|n;j> from the Wigner small-d closed form (test oracle).
StateVector coherent_state_closed_form(double j, double theta, double phi_az);

double dot(const Vec3& a, const Vec3& b);
Vec3 normalized(const Vec3& v);
// Rotation of v by `angle` about the unit axis (right-handed).
Vec3 rotate(const Vec3& v, const Vec3& axis, double angle);
// Polar and azimuthal angles of a unit vector.
std::pair<double, double> polar_angles(const Vec3& n);

struct ProfileSpec {
    enum class Kind { Gaussian, Window, Lorentzian };
    Kind kind = Kind::Gaussian;
    double center = 0.0;
    double width = 1.0;  // sigma | eps | gamma
};

PointerState make_profile(const Grid& grid, const ProfileSpec& spec);
std::string to_string(ProfileSpec::Kind kind);

struct SpinScenario {
    double j = 0.5;
    Vec3 n1{0.0, 0.0, 1.0};
    Vec3 n2{0.0, 0.0, 1.0};
    Vec3 axis{0.0, 0.0, 1.0};
    ProfileSpec profile;
    Grid grid = Grid(-4.0 * 3.14159265358979323846, 4.0 * 3.14159265358979323846, 4096);

    // Throws PreconditionError on non-unit vectors or invalid j.
    void validate() const;
    // n1 = (0, 1/sqrt2, 1/sqrt2), n2 = (0, -1/sqrt2, 1/sqrt2), axis z.
    bool is_canonical() const;
};

SpinScenario canonical_scenario(double j);

// Finite-dimensional amplitude source for J_axis between |n1;j> and |n2;j>.
FiniteAmplitudeSource make_source(const SpinScenario& s);
Observable measured_component(const SpinOperators& ops, const Vec3& axis);

// Closed-form evaluators along the back-reaction orbit n1(q) = R_axis(-q) n1.
class SpinOracle {
public:
    explicit SpinOracle(const SpinScenario& s);

    // |<n2;j|n1;j>|^2 = ((1 + n1.n2)/2)^{2j}
    double overlap_probability(const Vec3& n1, const Vec3& n2) const;
    // Re <n2|J|n1>/<n2|n1> = j (n1 + n2) / (1 + n1.n2)
    Vec3 weak_spin_vector(const Vec3& n1, const Vec3& n2) const;

    Vec3 n1_at(double q) const;
    double weak_value(double q) const;      // axis component of the weak spin vector on the orbit
    double ln_likelihood(double q) const;   // ln P12(q)
    // delta(q) = integral_{-q}^{q} weak_value, continued across branches.
    // Closed form 4j atan(sqrt2 tan(q/2)) for the canonical setup, quadrature otherwise.
    double delta(double q) const;
    double weak_value_second_derivative(double q) const;
    // Large-j gaussian approximation of ln P12 about an extremum q_ext of the orbit.
    double ln_likelihood_gaussian(double q, double q_ext) const;

private:
    SpinScenario s_;
    bool canonical_;
};

// Fixed point of q* = q_i - 2 sigma^2 Im W(q*) for a gaussian prior.
struct BiasResult {
    double q_star = 0.0;
    int iterations = 0;
    bool used_bisection = false;
    double sampled_weak_value = 0.0;
};

struct BiasOptions {
    double relaxation = 0.5;
    double tol = 1e-10;
    int max_iterations = 500;
    // Search bracket [q_i - half_width, q_i + half_width]; <= 0 picks one automatically.
    double half_width = 0.0;
};

BiasResult bias_fixed_point(const AmplitudeSource& src, double q_i, double sigma_i, const BiasOptions& opt = {});

// Local maxima above `rel_height` of the global max, at least `min_sep`
// samples apart, in ascending index order.
std::vector<std::size_t> detect_peaks(const std::vector<double>& values, double rel_height = 0.1,
                                      std::size_t min_sep = 3);

struct FringePeak {
    double p = 0.0;
    double predicted = 0.0;   // nearest maximum of cos^2(p q* - delta(q*)/2)
    double lattice = 0.0;     // nearest point of j + Z
};

struct FringeReport {
    bool applicable = false;
    std::string reason;
    double q_star = 0.0;
    double delta_q_star = 0.0;
    double envelope_center = 0.0;
    double max_predicted_dev = 0.0;
    double max_lattice_dev = 0.0;
    std::vector<FringePeak> peaks;
};

// Two dominant, mirror-symmetric posterior peaks at +/- q* are required; the
// pointer pdf maxima are compared with the maxima of cos^2(p q* - delta(q*)/2).
FringeReport fringe_check(const WeakOrbit& orbit, const ConditionalResult& result, double j);

struct TransitionRow {
    double sigma = 0.0;
    std::vector<double> posterior_peaks;
    double q_star = 0.0;
    double sampled_weak_value = 0.0;
    double predicted_fringe_spacing = 0.0;  // pi / q*, 0 for a single peak
    double measured_fringe_spacing = 0.0;   // median gap of p-pdf maxima, 0 if < 2
    double envelope_center = 0.0;
    double pointer_variance = 0.0;
};

std::vector<TransitionRow> transition_sweep(const SpinScenario& s, std::vector<double> sigma_list);

}  // namespace qawv::spin
