#include "pacascade/optimizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pacascade {

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::PowerOnly: return "power";
        case Mode::EqualGains: return "equal-gains";
        case Mode::UnequalGains: return "unequal-gains";
        case Mode::JointEqualGains: return "joint-equal";
        case Mode::JointUnequalGains: return "joint-unequal";
    }
    return "unknown";
}

Mode parse_mode(std::string_view name) {
    for (Mode m : kAllModes)
        if (to_string(m) == name) return m;
    throw std::invalid_argument("unknown optimization mode '" + std::string(name) + "'");
}

std::string_view to_string(Status status) {
    switch (status) {
        case Status::Converged: return "converged";
        case Status::MaxIterations: return "max-iterations";
        case Status::StalledAtBound: return "stalled-at-bound";
    }
    return "unknown";
}

std::size_t parameter_dimension(Mode mode, std::size_t stages) {
    switch (mode) {
        case Mode::PowerOnly: return 1;
        case Mode::EqualGains: return 1;
        case Mode::UnequalGains: return stages;
        case Mode::JointEqualGains: return 2;
        case Mode::JointUnequalGains: return stages + 1;
    }
    return 0;
}

bool optimizes_power(Mode mode) {
    return mode == Mode::PowerOnly || mode == Mode::JointEqualGains || mode == Mode::JointUnequalGains;
}

CascadeParams scenario_start(Scenario scenario, std::size_t stages, Complex alpha) {
    if (stages < 1) throw std::invalid_argument("scenario_start: K must be >= 1");
    const double g = scenario == Scenario::One ? 1.0 : scenario2_gain(alpha);
    return {1.0, std::vector<double>(stages, g)};
}

CascadeConfig with_scenario(CascadeConfig config, Scenario scenario) {
    if (config.stages.empty()) throw std::invalid_argument("with_scenario: config has no stages");
    const auto start = scenario_start(scenario, config.size(), config.stages.front().alpha);
    for (std::size_t k = 0; k < config.size(); ++k) config.stages[k].gain = start.gains[k];
    config.input_power = start.input_power;
    return config;
}

std::vector<double> to_parameters(Mode mode, const CascadeParams& params) {
    if (params.gains.empty()) throw std::invalid_argument("to_parameters: no gains");
    switch (mode) {
        case Mode::PowerOnly: return {params.input_power};
        case Mode::EqualGains: return {params.gains.front()};
        case Mode::UnequalGains: return params.gains;
        case Mode::JointEqualGains: return {params.input_power, params.gains.front()};
        case Mode::JointUnequalGains: {
            std::vector<double> theta{params.input_power};
            theta.insert(theta.end(), params.gains.begin(), params.gains.end());
            return theta;
        }
    }
    return {};
}

std::vector<double> BoxBounds::project(std::span<const double> theta) const {
    std::vector<double> out(theta.begin(), theta.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lower[i], upper[i]);
    return out;
}

bool BoxBounds::contains(std::span<const double> theta, double tolerance) const {
    if (theta.size() != lower.size()) return false;
    for (std::size_t i = 0; i < theta.size(); ++i)
        if (theta[i] < lower[i] - tolerance || theta[i] > upper[i] + tolerance) return false;
    return true;
}

OptimizationSpec OptimizationSpec::for_config(Mode mode, const CascadeConfig& config, Scenario start) {
    OptimizationSpec spec;
    spec.mode = mode;
    spec.start = start;
    spec.gain_lower = config.gain_lower();
    spec.gain_upper = config.gain_upper();
    return spec;
}

BoxBounds OptimizationSpec::bounds(std::size_t stages) const {
    BoxBounds b;
    const auto add = [&](double lo, double hi) {
        b.lower.push_back(lo);
        b.upper.push_back(hi);
    };
    if (optimizes_power(mode)) add(power_lower, power_upper);
    const std::size_t gain_dims = parameter_dimension(mode, stages) - (optimizes_power(mode) ? 1 : 0);
    for (std::size_t i = 0; i < gain_dims; ++i) add(gain_lower, gain_upper);
    return b;
}

double sum_squares(std::span<const double> r) {
    double acc = 0.0;
    for (double v : r) acc += v * v;
    return acc;
}

// ---------------------------------------------------------------------------
// Cascade objective

CascadeObjective::CascadeObjective(Signal x0_unit, CascadeConfig config, NoiseRealization noise, Mode mode)
    : x0_(std::move(x0_unit)), config_(std::move(config)), noise_(std::move(noise)), mode_(mode) {
    config_.validate();
    if (noise_.stages() < config_.size())
        throw std::invalid_argument("build_residual: noise realization has too few stages");
    if (noise_.length() != x0_.size()) throw std::invalid_argument("build_residual: noise length != signal length");
    const double G = config_.reference_gain;
    for (const auto& s : x0_.samples) desired_energy_ += std::norm(s * G);
    if (desired_energy_ == 0.0) throw DegenerateSignal("build_residual: excitation has zero energy");
}

CascadeParams CascadeObjective::expand(std::span<const double> theta) const {
    const std::size_t K = config_.size();
    if (theta.size() != dimension())
        throw std::invalid_argument("parameter vector has dimension " + std::to_string(theta.size()) + ", mode " +
                                    std::string(to_string(mode_)) + " expects " + std::to_string(dimension()));
    CascadeParams p{config_.input_power, config_.gains()};
    switch (mode_) {
        case Mode::PowerOnly: p.input_power = theta[0]; break;
        case Mode::EqualGains: p.gains.assign(K, theta[0]); break;
        case Mode::UnequalGains: p.gains.assign(theta.begin(), theta.end()); break;
        case Mode::JointEqualGains:
            p.input_power = theta[0];
            p.gains.assign(K, theta[1]);
            break;
        case Mode::JointUnequalGains:
            p.input_power = theta[0];
            p.gains.assign(theta.begin() + 1, theta.end());
            break;
    }
    return p;
}

CascadeConfig CascadeObjective::configure(std::span<const double> theta) const {
    const auto p = expand(theta);
    CascadeConfig cfg = config_;
    cfg.input_power = p.input_power;
    for (std::size_t k = 0; k < cfg.size(); ++k) cfg.stages[k].gain = p.gains[k];
    return cfg;
}

void CascadeObjective::residual(std::span<const double> theta, std::vector<double>& out) const {
    const auto p = expand(theta);
    if (!(p.input_power >= 0.0)) throw std::invalid_argument("residual: input power must be >= 0");
    const std::size_t N = x0_.size();
    const std::size_t K = config_.size();
    const double drive = std::sqrt(p.input_power);
    const double G = config_.reference_gain;
    const double sigma = config_.sigma;

    std::vector<PaStage> stages = config_.stages;
    for (std::size_t k = 0; k < K; ++k) stages[k].gain = p.gains[k];

    out.resize(2 * N);
    // Same per-sample arithmetic as scaled() followed by cascade_forward().
    for (std::size_t n = 0; n < N; ++n) {
        const Complex x = x0_.samples[n];
        Complex y = x;
        y *= drive;
        for (std::size_t k = 0; k < K; ++k) y = stage_sample(y, stages[k], sigma, noise_.stage_noise[k][n]);
        const Complex d = x * G;
        out[n] = d.real() - y.real();
        out[N + n] = d.imag() - y.imag();
    }
}

double CascadeObjective::objective(std::span<const double> theta) const {
    thread_local std::vector<double> r;
    residual(theta, r);
    return sum_squares(r);
}

double CascadeObjective::objective_db(double objective) const {
    if (objective == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(objective / desired_energy_);
}

ResidualFunction CascadeObjective::as_function() const {
    return [this](std::span<const double> theta, std::vector<double>& out) { residual(theta, out); };
}

CascadeObjective build_residual(const Signal& x0_unit, const CascadeConfig& config, const NoiseRealization& noise,
                                Mode mode) {
    return CascadeObjective(x0_unit, config, noise, mode);
}

// ---------------------------------------------------------------------------
// Projected Levenberg-Marquardt

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr double kMaxDamping = 1e16;

struct Linearization {
    Matrix normal;    // J^T J
    Vector gradient;  // J^T r
};

// Central differences, switching to a one-sided stencil where the central
// one would leave the box.
Linearization linearize(const ResidualFunction& residual, const std::vector<double>& theta,
                        const std::vector<double>& r0, const BoxBounds& bounds, double rel_step) {
    const std::size_t d = theta.size();
    const std::size_t m = r0.size();
    Matrix J(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    std::vector<double> probe = theta;
    std::vector<double> plus, minus;

    for (std::size_t j = 0; j < d; ++j) {
        const double h = rel_step * std::max(1.0, std::abs(theta[j]));
        const bool room_below = theta[j] - h >= bounds.lower[j];
        const bool room_above = theta[j] + h <= bounds.upper[j];

        double width;
        if (room_below && room_above) {
            probe[j] = theta[j] + h;
            residual(probe, plus);
            probe[j] = theta[j] - h;
            residual(probe, minus);
            width = 2.0 * h;
        } else if (room_above) {
            probe[j] = theta[j] + h;
            residual(probe, plus);
            minus = r0;
            width = h;
        } else {
            plus = r0;
            probe[j] = theta[j] - h;
            residual(probe, minus);
            width = h;
        }
        probe[j] = theta[j];
        for (std::size_t i = 0; i < m; ++i)
            J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (plus[i] - minus[i]) / width;
    }

    const Eigen::Map<const Vector> r(r0.data(), static_cast<Eigen::Index>(m));
    return {J.transpose() * J, J.transpose() * r};
}

bool pinned(const std::vector<double>& theta, const Vector& grad, const BoxBounds& b, std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    return (theta[i] <= b.lower[i] && grad(ii) > 0.0) || (theta[i] >= b.upper[i] && grad(ii) < 0.0);
}

double projected_gradient_norm(const std::vector<double>& theta, const Vector& grad, const BoxBounds& b) {
    double norm = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i)
        if (!pinned(theta, grad, b, i)) norm = std::max(norm, std::abs(grad(static_cast<Eigen::Index>(i))));
    return norm;
}

bool any_at_bound(const std::vector<double>& theta, const BoxBounds& b) {
    for (std::size_t i = 0; i < theta.size(); ++i)
        if (theta[i] <= b.lower[i] || theta[i] >= b.upper[i]) return true;
    return false;
}

}  // namespace

OptimizationResult solve(const ResidualFunction& residual, std::vector<double> start, const BoxBounds& bounds,
                         const SolverOptions& options) {
    const std::size_t d = start.size();
    if (d == 0) throw std::invalid_argument("solve: empty parameter vector");
    if (bounds.lower.size() != d || bounds.upper.size() != d)
        throw std::invalid_argument("solve: bounds dimension does not match start point");
    for (std::size_t i = 0; i < d; ++i)
        if (!(bounds.lower[i] <= bounds.upper[i])) throw std::invalid_argument("solve: empty box");

    std::vector<double> theta = bounds.project(start);
    std::vector<double> r;
    residual(theta, r);
    double f = sum_squares(r);
    if (!std::isfinite(f)) throw InvalidStart("solve: objective is not finite at the start point");

    OptimizationResult result;
    result.objective_history.push_back(f);

    auto lin = linearize(residual, theta, r, bounds, options.fd_relative_step);
    const double g0 = projected_gradient_norm(theta, lin.gradient, bounds);
    double damping = options.initial_damping;
    std::vector<double> trial;
    std::vector<double> r_trial;
    Status status = Status::MaxIterations;

    for (;;) {
        if (projected_gradient_norm(theta, lin.gradient, bounds) <= options.gradient_tolerance * g0) {
            status = Status::Converged;
            break;
        }
        if (result.iterations >= options.max_iterations) {
            status = Status::MaxIterations;
            break;
        }

        std::vector<Eigen::Index> free;
        for (std::size_t i = 0; i < d; ++i)
            if (!pinned(theta, lin.gradient, bounds, i)) free.push_back(static_cast<Eigen::Index>(i));

        const auto nf = static_cast<Eigen::Index>(free.size());
        Matrix A(nf, nf);
        Vector b(nf);
        double max_diag = 0.0;
        for (Eigen::Index a = 0; a < nf; ++a) {
            b(a) = -lin.gradient(free[a]);
            for (Eigen::Index c = 0; c < nf; ++c) A(a, c) = lin.normal(free[a], free[c]);
            max_diag = std::max(max_diag, A(a, a));
        }
        const double diag_floor = std::max(max_diag * 1e-12, std::numeric_limits<double>::min());

        bool accepted = false;
        bool done = false;
        while (!accepted && !done) {
            Matrix M = A;
            for (Eigen::Index a = 0; a < nf; ++a) M(a, a) += damping * std::max(A(a, a), diag_floor);
            const Vector delta = M.ldlt().solve(b);

            trial = theta;
            bool finite_step = delta.allFinite();
            if (finite_step)
                for (Eigen::Index a = 0; a < nf; ++a) trial[static_cast<std::size_t>(free[a])] += delta(a);
            trial = bounds.project(trial);

            double step = 0.0;
            for (std::size_t i = 0; i < d; ++i) step = std::max(step, std::abs(trial[i] - theta[i]));

            if (finite_step && step <= options.step_tolerance) {
                status = Status::Converged;
                done = true;
                break;
            }

            double f_trial = std::numeric_limits<double>::infinity();
            if (finite_step) {
                residual(trial, r_trial);
                f_trial = sum_squares(r_trial);
            }
            // equal objective keeps the incumbent
            if (std::isfinite(f_trial) && f_trial < f) {
                accepted = true;
                damping = std::max(damping / 10.0, 1e-12);
            } else {
                damping *= 10.0;
                if (damping > kMaxDamping) {
                    status = any_at_bound(theta, bounds) ? Status::StalledAtBound : Status::Converged;
                    done = true;
                }
            }
        }
        if (done) break;

        double step = 0.0;
        for (std::size_t i = 0; i < d; ++i) step = std::max(step, std::abs(trial[i] - theta[i]));
        theta.swap(trial);
        r.swap(r_trial);
        f = sum_squares(r);
        result.objective_history.push_back(f);
        ++result.iterations;

        if (step <= options.step_tolerance) {
            status = Status::Converged;
            break;
        }
        lin = linearize(residual, theta, r, bounds, options.fd_relative_step);
    }

    result.parameters = std::move(theta);
    result.objective = f;
    result.status = status;
    return result;
}

OptimizationResult solve(const OptimizationSpec& spec, const CascadeObjective& objective) {
    if (spec.mode != objective.mode()) throw std::invalid_argument("solve: spec mode does not match objective mode");
    const std::size_t K = objective.config().size();
    std::vector<double> start;
    if (const auto* scenario = std::get_if<Scenario>(&spec.start)) {
        start = to_parameters(spec.mode, scenario_start(*scenario, K, objective.config().stages.front().alpha));
    } else {
        start = std::get<std::vector<double>>(spec.start);
    }
    if (start.size() != objective.dimension())
        throw std::invalid_argument("solve: start point has dimension " + std::to_string(start.size()) +
                                    ", expected " + std::to_string(objective.dimension()));
    return solve(objective.as_function(), std::move(start), spec.bounds(K), spec.options);
}

// ---------------------------------------------------------------------------
// Grid oracle

GridResult grid_oracle(const ScalarObjective& objective, const BoxBounds& bounds, int resolution) {
    const std::size_t d = bounds.size();
    if (d < 1 || d > 2) throw UnsupportedMode("grid_oracle: only 1- and 2-dimensional modes are supported");
    if (resolution < 2) throw std::invalid_argument("grid_oracle: resolution must be >= 2");

    const auto axis = [&](std::size_t i, int step) {
        const double t = static_cast<double>(step) / static_cast<double>(resolution - 1);
        return step == resolution - 1 ? bounds.upper[i] : bounds.lower[i] + t * (bounds.upper[i] - bounds.lower[i]);
    };

    GridResult best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<double> point(d);
    const int outer = resolution;
    const int inner = d == 2 ? resolution : 1;
    for (int a = 0; a < outer; ++a) {
        point[0] = axis(0, a);
        for (int c = 0; c < inner; ++c) {
            if (d == 2) point[1] = axis(1, c);
            const double f = objective(point);
            if (f < best.objective) {
                best.objective = f;
                best.parameters = point;
            }
        }
    }
    if (best.parameters.empty()) throw std::runtime_error("grid_oracle: objective is not finite anywhere on the grid");
    return best;
}

GridResult grid_oracle(const CascadeObjective& objective, const OptimizationSpec& spec, int resolution) {
    if (spec.mode != objective.mode()) throw std::invalid_argument("grid_oracle: spec mode does not match objective");
    if (objective.dimension() > 2)
        throw UnsupportedMode("grid_oracle: mode " + std::string(to_string(spec.mode)) + " has dimension " +
                              std::to_string(objective.dimension()) + " > 2");
    if (resolution < 50) throw std::invalid_argument("grid_oracle: resolution must be >= 50 per axis");
    return grid_oracle([&](std::span<const double> theta) { return objective.objective(theta); },
                       spec.bounds(objective.config().size()), resolution);
}

}  // namespace pacascade
