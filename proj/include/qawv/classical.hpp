#pragma once

#include <array>
#include <vector>

#include "qawv/ensemble.hpp"
#include "qawv/pointer.hpp"

namespace qawv::classical {

enum class SystemKind { Free, Oscillator };
enum class Coupling { Linear, Quadratic };  // A(x) = x or x^2

// Factorized apparatus prior: gaussian in q, gaussian in p with zero mean.
struct ClassicalPrior {
    double q_center = 0.0;
    double q_sigma = 1.0;
    double p_sigma = 0.5;
};

struct ClassicalScenario {
    SystemKind kind = SystemKind::Free;
    double mass = 1.0;
    double omega = 0.0;
    Coupling coupling = Coupling::Linear;
    std::array<double, 3> times{0.0, 1.0, 2.0};  // t1 < t_i < t2
    double x1 = 0.0;
    double x2 = 0.0;
    ClassicalPrior prior;
    Grid grid = Grid::centered(16.0, 4096);
    std::vector<double> smears{0.1, 0.05, 0.025};

    // Throws PreconditionError on ordering, mass or prior violations.
    void validate() const;
    // Characteristic length for finite-difference steps.
    double length_scale() const;
};

ClassicalScenario free_particle_preset();

double coupling_value(Coupling c, double x);
double coupling_slope(Coupling c, double x);

enum class SolveMethod { Analytic, Shooting };

class ClassicalSolution {
public:
    double position(double t) const;
    double velocity(double t) const;  // one-sided from the left at t_i

    double q() const { return q_; }
    double x_i() const { return x_i_; }
    double initial_momentum() const { return pi1_; }
    double final_momentum() const { return pi2_; }
    double action() const { return action_; }
    double measured() const { return a_tilde_; }  // A(x(t_i))
    double van_vleck() const { return van_vleck_; }
    SolveMethod method() const { return method_; }

private:
    friend ClassicalSolution solve_boundary(const ClassicalScenario&, double, SolveMethod);

    double segment_position(int seg, double t) const;
    double segment_velocity(int seg, double t) const;

    SystemKind kind_ = SystemKind::Free;
    double omega_ = 0.0;
    std::array<double, 3> times_{};
    double x1_ = 0.0, x2_ = 0.0;
    double q_ = 0.0;
    double x_i_ = 0.0;
    double pi1_ = 0.0, pi2_ = 0.0;
    double action_ = 0.0;
    double a_tilde_ = 0.0;
    double van_vleck_ = 0.0;
    SolveMethod method_ = SolveMethod::Analytic;
};

// Boundary-value trajectory x(t1) = x1, x(t2) = x2 under the impulsive kick
// p -> p + q A'(x) at t_i. Throws PreconditionError at focusing (conjugate)
// configurations and ConvergenceError if shooting fails.
ClassicalSolution solve_boundary(const ClassicalScenario& s, double q, SolveMethod method = SolveMethod::Analytic);

// Action of the kicked trajectory as a function of q and the endpoints.
double kicked_action(const ClassicalScenario& s, double q, double x1, double x2,
                     SolveMethod method = SolveMethod::Analytic);

struct ClassicalPosterior {
    std::vector<double> a_tilde;     // A~12(q) on the grid
    std::vector<double> action;      // S~12(q)
    std::vector<double> van_vleck;
    std::vector<double> likelihood;  // van_vleck normalized over the grid
    std::vector<double> prior_q;
    std::vector<double> posterior_q;
    std::vector<double> pointer_pdf; // over grid.p(m)
    double pointer_mean = 0.0;       // <p> + <A~> over the posterior
    double pointer_pdf_mean = 0.0;   // first moment of the tabulated pointer pdf
    double pointer_pdf_mass = 0.0;
    MomentDecomposition decomposition;
};

ClassicalPosterior classical_posterior(const ClassicalScenario& s);

// <x2-smeared| U(t2,t_i) e^{iqx} U(t_i,t1) |x1-smeared>, gaussian endpoints of
// position widths s1, s2, evaluated by the closed-form gaussian integral.
class GaussianQuantumAmplitude final : public AmplitudeSource {
public:
    GaussianQuantumAmplitude(const ClassicalScenario& s, double smear1, double smear2);

    cplx amplitude(double q) const override;
    cplx weak_value(double q) const override;

private:
    cplx exponent(double q) const;

    double m_, t_before_, t_after_, x1_, x2_, s1_, s2_;
    cplx a_;
    double log_norm_;
};

GaussianQuantumAmplitude gaussian_quantum_amplitude(const ClassicalScenario& s, double smear);

struct SmearSample {
    double smear = 0.0;
    double orbit_max_dev = 0.0;      // max |Re W - A~| over the prior support
    double posterior_max_dev = 0.0;
    double pointer_mean = 0.0;
    double pointer_variance = 0.0;
    double aw_variance = 0.0;
};

struct CorrespondenceReport {
    std::vector<SmearSample> samples;
    // Sharp-endpoint limit by Richardson extrapolation in smear^2.
    double orbit_max_dev = 0.0;
    double posterior_max_dev = 0.0;
    double quantum_mean = 0.0;
    double classical_mean = 0.0;
    double mean_dev = 0.0;
    double quantum_variance = 0.0;
    double classical_variance = 0.0;
    double variance_dev = 0.0;
    double quantum_aw_variance = 0.0;
    double classical_aw_variance = 0.0;
    double aw_variance_dev = 0.0;
    // Same quantities at the finest smear without extrapolation.
    double finest_mean_dev = 0.0;
    double finest_variance_dev = 0.0;
    double generating_function_max_dev = 0.0;  // max |A~ - dS~/dq| over q in [-5, 5]
    double momentum_identity_max_dev = 0.0;    // max |pi1 + dS~/dx1| over q in [-5, 5]
};

// Requires the free kind with linear coupling. The quantum prior is the
// gaussian wavefunction with q-width q_sigma; the classical p-prior width is
// taken as 1/(2 q_sigma) so both priors carry the same phase-space density.
CorrespondenceReport correspondence_report(const ClassicalScenario& s);

// Limit h -> 0 of f(h) = f0 + c1 h^2 + c2 h^4 + ..., by polynomial
// extrapolation in h^2 through all given samples.
double richardson(const std::vector<double>& smears, const std::vector<double>& values);

}  // namespace qawv::classical
