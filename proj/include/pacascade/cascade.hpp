#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pacascade/sigproc.hpp"
#include "pacascade/types.hpp"

namespace pacascade {

/// One amplifier: third-order coefficient and combined gain/connector loss.
struct PaStage {
    Complex alpha{0.0, 0.0};
    double gain = 1.0;
};

struct CascadeConfig {
    std::vector<PaStage> stages;
    double sigma = 0.0;           ///< inter-stage noise standard deviation
    double input_power = 1.0;     ///< p0, peak power of the excitation
    double reference_gain = 1.0;  ///< G, desired end-to-end gain
    double epsilon = 0.3;         ///< gains live in [(1-eps)G, (1+eps)G]

    std::size_t size() const { return stages.size(); }
    std::vector<double> gains() const;
    std::vector<Complex> alphas() const;
    double gain_lower() const { return (1.0 - epsilon) * reference_gain; }
    double gain_upper() const { return (1.0 + epsilon) * reference_gain; }

    /// True when every stage gain sits inside the epsilon box. Nothing is
    /// clamped; configs outside the box are still simulated.
    bool gains_feasible() const;

    /// Throws std::invalid_argument on K = 0, non-positive gains, negative sigma
    /// or |alpha| above max_alpha.
    void validate(double max_alpha = 1.0) const;

    static CascadeConfig uniform(std::size_t stages, Complex alpha, double gain, double sigma = 0.0);
};

/// Closed-form single-PA summary of a cascade, first order in alpha.
struct EquivalentPa {
    double g_tilde = 1.0;
    Complex alpha_tilde{0.0, 0.0};
    double sigma_tilde = 0.0;
};

/// f(x) = x + alpha x |x|^2. Written out in real arithmetic so every code
/// path that evaluates the cascade produces bit-identical results.
inline Complex pa_nonlinearity(Complex x, Complex alpha) {
    const double m = x.real() * x.real() + x.imag() * x.imag();
    const double tr = x.real() * m;
    const double ti = x.imag() * m;
    return {x.real() + (alpha.real() * tr - alpha.imag() * ti), x.imag() + (alpha.real() * ti + alpha.imag() * tr)};
}

/// One stage: g f(y + sigma w), evaluated on a single sample.
inline Complex stage_sample(Complex y, const PaStage& stage, double sigma, Complex w) {
    const Complex u(y.real() + sigma * w.real(), y.imag() + sigma * w.imag());
    const Complex f = pa_nonlinearity(u, stage.alpha);
    return {stage.gain * f.real(), stage.gain * f.imag()};
}

Signal stage_forward(const Signal& input, const PaStage& stage, double sigma, std::span<const Complex> noise);

enum class Retention { KeepStages, Streaming };

struct CascadeTrace {
    Signal output;
    /// y^(1) .. y^(K); empty in streaming mode.
    std::vector<Signal> stage_outputs;
    /// 0-based indices of stages whose input peak power exceeded x_max^2,
    /// i.e. samples landed past the cubic model's monotone region.
    std::vector<std::size_t> saturated_stages;
};

/// Runs the exact K-stage cascade on x0 as given (callers scale x0 to the
/// configured input power). Noise sequence k feeds the adder ahead of stage k.
CascadeTrace cascade_forward(const Signal& x0, const CascadeConfig& config, const NoiseRealization& noise,
                             Retention retention = Retention::KeepStages);

double equivalent_gain(std::span<const double> gains);
Complex equivalent_alpha(std::span<const double> gains, std::span<const Complex> alphas);
double equivalent_sigma(std::span<const double> gains, double sigma);
EquivalentPa equivalent_pa(const CascadeConfig& config);

/// One-shot equivalent-PA output g~ (x + alpha~ x|x|^2) + sigma~ w. Pass a
/// zero sequence for the noise-free form.
Signal approx_cascade_forward(const Signal& x0, const CascadeConfig& config, std::span<const Complex> noise_equiv);

/// Input magnitude at which |f(x)| peaks for a real-gain cubic PA.
double x_max(Complex alpha);

/// x_max / |f(x_max)|: the gain that maps the saturation point back to x_max.
double scenario2_gain(Complex alpha);

}  // namespace pacascade
