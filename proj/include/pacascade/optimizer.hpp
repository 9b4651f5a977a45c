#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pacascade/cascade.hpp"
#include "pacascade/sigproc.hpp"
#include "pacascade/types.hpp"

namespace pacascade {

/// Which of (p0, g1..gK) the solver is allowed to move.
///
///   PowerOnly          [p0]            gains fixed by the config
///   EqualGains         [g]             p0 fixed, g1 = .. = gK = g
///   UnequalGains       [g1 .. gK]      p0 fixed
///   JointEqualGains    [p0, g]
///   JointUnequalGains  [p0, g1 .. gK]
enum class Mode { PowerOnly, EqualGains, UnequalGains, JointEqualGains, JointUnequalGains };

inline constexpr Mode kAllModes[] = {Mode::PowerOnly, Mode::EqualGains, Mode::UnequalGains, Mode::JointEqualGains,
                                     Mode::JointUnequalGains};

/// CLI spelling: power, equal-gains, unequal-gains, joint-equal, joint-unequal.
std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

std::size_t parameter_dimension(Mode mode, std::size_t stages);
bool optimizes_power(Mode mode);

enum class Scenario { One, Two };

/// Full physical parameter set of a cascade.
struct CascadeParams {
    double input_power = 1.0;
    std::vector<double> gains;
};

/// Scenario One: unit gains. Scenario Two: every gain at scenario2_gain(alpha).
/// Both start at p0 = 1.
CascadeParams scenario_start(Scenario scenario, std::size_t stages, Complex alpha);

/// Copy of `config` carrying the scenario's gains and p0.
CascadeConfig with_scenario(CascadeConfig config, Scenario scenario);

/// Projects the full parameter set onto the mode's coordinates.
std::vector<double> to_parameters(Mode mode, const CascadeParams& params);

struct BoxBounds {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t size() const { return lower.size(); }
    std::vector<double> project(std::span<const double> theta) const;
    bool contains(std::span<const double> theta, double tolerance = 0.0) const;
};

struct SolverOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;  ///< relative to the starting projected gradient
    double step_tolerance = 1e-10;
    double initial_damping = 1e-3;
    double fd_relative_step = 1e-6;
};

inline constexpr double kMinInputPower = 1e-6;

struct OptimizationSpec {
    Mode mode = Mode::JointUnequalGains;
    std::variant<Scenario, std::vector<double>> start = Scenario::One;
    double power_lower = kMinInputPower;
    double power_upper = 1.0;
    double gain_lower = 0.7;
    double gain_upper = 1.3;
    SolverOptions options{};

    /// Gain box taken from the config's G and epsilon.
    static OptimizationSpec for_config(Mode mode, const CascadeConfig& config, Scenario start = Scenario::One);
    BoxBounds bounds(std::size_t stages) const;
};

enum class Status { Converged, MaxIterations, StalledAtBound };
std::string_view to_string(Status status);

struct OptimizationResult {
    std::vector<double> parameters;
    double objective = 0.0;
    std::vector<double> objective_history;  ///< start value, then one entry per accepted step
    Status status = Status::Converged;
    int iterations = 0;
};

/// Writes the residual vector for parameters theta into `out` (resized as needed).
using ResidualFunction = std::function<void(std::span<const double> theta, std::vector<double>& out)>;

double sum_squares(std::span<const double> r);

/// Sum-of-squares cascade fit against the desired output G * x0_unit,
/// with the noise realization frozen for the object's lifetime.
class CascadeObjective {
public:
    CascadeObjective(Signal x0_unit, CascadeConfig config, NoiseRealization noise, Mode mode);

    Mode mode() const { return mode_; }
    std::size_t dimension() const { return parameter_dimension(mode_, config_.size()); }
    std::size_t residual_size() const { return 2 * x0_.size(); }
    const CascadeConfig& config() const { return config_; }
    const Signal& excitation() const { return x0_; }
    const NoiseRealization& noise() const { return noise_; }

    /// Mode coordinates -> (p0, gains), filling fixed entries from the config.
    CascadeParams expand(std::span<const double> theta) const;
    /// Config with p0 and gains replaced by theta's values.
    CascadeConfig configure(std::span<const double> theta) const;

    /// Re(G x0 - y^(K)) for every sample, then Im(...).
    void residual(std::span<const double> theta, std::vector<double>& out) const;
    double objective(std::span<const double> theta) const;
    /// Objective as an NMSE in dB relative to the desired output energy.
    double objective_db(double objective) const;

    ResidualFunction as_function() const;

private:
    Signal x0_;
    CascadeConfig config_;
    NoiseRealization noise_;
    Mode mode_;
    double desired_energy_ = 0.0;
};

CascadeObjective build_residual(const Signal& x0_unit, const CascadeConfig& config, const NoiseRealization& noise,
                                Mode mode);

/// Projected Levenberg-Marquardt on a box. Central-difference Jacobian,
/// Marquardt-scaled damping, and strict-decrease acceptance so the
/// objective history never increases.
OptimizationResult solve(const ResidualFunction& residual, std::vector<double> start, const BoxBounds& bounds,
                         const SolverOptions& options = {});

OptimizationResult solve(const OptimizationSpec& spec, const CascadeObjective& objective);

struct GridResult {
    std::vector<double> parameters;
    double objective = 0.0;
};

using ScalarObjective = std::function<double(std::span<const double>)>;

/// Exhaustive search over a uniform grid (endpoints included) on a box of
/// dimension 1 or 2. Ties keep the first point visited.
GridResult grid_oracle(const ScalarObjective& objective, const BoxBounds& bounds, int resolution);

/// Grid search of the cascade objective over the same box the solver uses.
GridResult grid_oracle(const CascadeObjective& objective, const OptimizationSpec& spec, int resolution);

}  // namespace pacascade
