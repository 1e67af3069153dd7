#pragma once

#include "qsio/bath.hpp"
#include "qsio/fluctuations.hpp"
#include "qsio/model.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qsio {

/// Full dynamical state except the noise channels, which live in NoiseGenerator.
struct SimState {
    double X = 0.0;
    double P = 0.0;
    double z = 0.0;  ///< memory auxiliary, -int gamma(t-t') P(t') dt'
    MomentState moments;
    double t = 0.0;
};

/// Time derivative of a SimState (the t slot is unused).
using SimDerivative = SimState;

/// Everything the right-hand side depends on besides state and noise.
struct Dynamics {
    SystemParams sys;
    BathParams bath;
    ClosureOptions closure;
    bool quantum_correction = true;
};

constexpr double kBlowUpBound = 1e6;
/// Moments smaller than this in magnitude are set to zero after each step.
constexpr double kMomentFlush = 1e-250;

class BlowUpError : public std::runtime_error {
public:
    BlowUpError(const std::string& what, SimState s) : std::runtime_error(what), state(std::move(s)) {}
    SimState state;
};

/// Throws BlowUpError if the state is non-finite or |X|,|P| exceed the guard.
void check_state(const SimState& s);

SimDerivative rhs(const SimState& s, double f, const Dynamics& dyn);

/// One step with the noise force held at f: Heun for X, P, z and an
/// implicit-midpoint step for the moment hierarchy.
SimState step_with_force(const SimState& s, double f, double dt, const Dynamics& dyn,
                         std::uint64_t step_index);

/// Advances the noise by one step, then the system with that force.
SimState step(const SimState& s, NoiseGenerator& gen, double dt, const Dynamics& dyn,
              std::uint64_t step_index);

/// Euclidean distance over (X, P, z, moments); noise channels excluded.
double state_distance(const SimState& a, const SimState& b);

/// b + h * d, component-wise (t untouched).
SimState add_scaled(const SimState& b, const SimDerivative& d, double h);

struct RunSettings {
    Dynamics dyn;
    NoiseModel noise;
    std::uint64_t seed = 1;
    int steps_per_cycle = 1257;
    long n_transient_cycles = 1000;
    long n_record_cycles = 3000;
    long sample_stride = 1;  ///< steps between recorded samples
    bool record_extras = false;  ///< also record z, f, q2, q3, q4
    bool use_noise = true;

    double dt() const { return dyn.sys.period() / steps_per_cycle; }
    void validate() const;
};

struct Trajectory {
    std::vector<double> t, X, P;
    std::vector<double> z, f, q2, q3, q4;  ///< empty unless extras were recorded
    std::vector<std::pair<std::string, std::string>> metadata;
    bool complete = true;
    bool extras = false;

    std::size_t size() const { return t.size(); }
    std::optional<std::string> meta(const std::string& key) const;
};

/// Key/value description of a run: every parameter needed to reproduce it.
std::vector<std::pair<std::string, std::string>> run_metadata(const RunSettings& rs);

class RunAborted : public BlowUpError {
public:
    RunAborted(const BlowUpError& e, Trajectory partial)
        : BlowUpError(e), partial(std::move(partial)) {}
    Trajectory partial;
};

/// Integrates transient plus recording cycles from X = P = z = 0 with
/// stationary noise and minimum-uncertainty moments.
Trajectory run(const RunSettings& rs);

/// Initial state shared by run() and the Lyapunov twins.
SimState initial_state(const Dynamics& dyn);

/// Build identifier embedded into metadata.
const char* build_id();

/// Round-trip decimal formatting of a double.
std::string format_double(double v);

}  // namespace qsio
