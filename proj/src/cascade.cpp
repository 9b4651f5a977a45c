#include "pacascade/cascade.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pacascade {

std::vector<double> CascadeConfig::gains() const {
    std::vector<double> g;
    g.reserve(stages.size());
    for (const auto& s : stages) g.push_back(s.gain);
    return g;
}

std::vector<Complex> CascadeConfig::alphas() const {
    std::vector<Complex> a;
    a.reserve(stages.size());
    for (const auto& s : stages) a.push_back(s.alpha);
    return a;
}

bool CascadeConfig::gains_feasible() const {
    const double lo = gain_lower();
    const double hi = gain_upper();
    for (const auto& s : stages)
        if (s.gain < lo || s.gain > hi) return false;
    return true;
}

void CascadeConfig::validate(double max_alpha) const {
    if (stages.empty()) throw std::invalid_argument("cascade: at least one stage is required");
    for (std::size_t k = 0; k < stages.size(); ++k) {
        if (!(stages[k].gain > 0.0))
            throw std::invalid_argument("cascade: stage " + std::to_string(k + 1) + " gain must be > 0");
        if (std::abs(stages[k].alpha) > max_alpha)
            throw std::invalid_argument("cascade: stage " + std::to_string(k + 1) + " |alpha| outside model range");
    }
    if (!(sigma >= 0.0)) throw std::invalid_argument("cascade: sigma must be >= 0");
    if (!(reference_gain > 0.0)) throw std::invalid_argument("cascade: reference gain must be > 0");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("cascade: epsilon must be in [0, 1)");
}

CascadeConfig CascadeConfig::uniform(std::size_t stages, Complex alpha, double gain, double sigma) {
    CascadeConfig cfg;
    cfg.stages.assign(stages, PaStage{alpha, gain});
    cfg.sigma = sigma;
    return cfg;
}

Signal stage_forward(const Signal& input, const PaStage& stage, double sigma, std::span<const Complex> noise) {
    if (noise.size() != input.size())
        throw std::invalid_argument("stage_forward: noise length " + std::to_string(noise.size()) +
                                    " != signal length " + std::to_string(input.size()));
    Signal out;
    out.oversampling = input.oversampling;
    out.symbol_count = input.symbol_count;
    out.samples.resize(input.size());
    for (std::size_t n = 0; n < input.size(); ++n)
        out.samples[n] = stage_sample(input.samples[n], stage, sigma, noise[n]);
    out.nominal_power = mean_power(out.samples);
    return out;
}

CascadeTrace cascade_forward(const Signal& x0, const CascadeConfig& config, const NoiseRealization& noise,
                             Retention retention) {
    if (config.stages.empty()) throw std::invalid_argument("cascade_forward: config has no stages");
    if (noise.stages() < config.size())
        throw std::invalid_argument("cascade_forward: noise has " + std::to_string(noise.stages()) +
                                    " stage sequences, cascade needs " + std::to_string(config.size()));

    CascadeTrace trace;
    if (retention == Retention::KeepStages) trace.stage_outputs.reserve(config.size());

    Signal current = x0;
    for (std::size_t k = 0; k < config.size(); ++k) {
        const auto& stage = config.stages[k];
        if (stage.alpha != Complex(0.0, 0.0)) {
            const double xm = x_max(stage.alpha);
            // noise is small next to the signal; judge the clean stage input
            if (peak_magnitude(current.samples) > xm) trace.saturated_stages.push_back(k);
        }
        current = stage_forward(current, stage, config.sigma, noise.stage_noise[k]);
        if (retention == Retention::KeepStages) trace.stage_outputs.push_back(current);
    }
    trace.output = std::move(current);
    return trace;
}

double equivalent_gain(std::span<const double> gains) {
    double g = 1.0;
    for (double gk : gains) g *= gk;
    return g;
}

Complex equivalent_alpha(std::span<const double> gains, std::span<const Complex> alphas) {
    if (gains.size() != alphas.size())
        throw std::invalid_argument("equivalent_alpha: gains and alphas differ in length");
    if (alphas.empty()) throw std::invalid_argument("equivalent_alpha: empty cascade");
    Complex acc = alphas[0];
    double pre_gain_sq = 1.0;  // prod_{q<k} g_q^2
    for (std::size_t k = 1; k < alphas.size(); ++k) {
        pre_gain_sq *= gains[k - 1] * gains[k - 1];
        acc += alphas[k] * pre_gain_sq;
    }
    return acc;
}

double equivalent_sigma(std::span<const double> gains, double sigma) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("equivalent_sigma: sigma must be >= 0");
    // sum_k prod_{q>=k} g_q^2, accumulated from the last stage backwards
    double sum = 0.0;
    double tail = 1.0;
    for (std::size_t i = gains.size(); i-- > 0;) {
        tail *= gains[i] * gains[i];
        sum += tail;
    }
    return sigma * std::sqrt(sum);
}

EquivalentPa equivalent_pa(const CascadeConfig& config) {
    const auto g = config.gains();
    const auto a = config.alphas();
    return {equivalent_gain(g), equivalent_alpha(g, a), equivalent_sigma(g, config.sigma)};
}

Signal approx_cascade_forward(const Signal& x0, const CascadeConfig& config, std::span<const Complex> noise_equiv) {
    if (noise_equiv.size() != x0.size())
        throw std::invalid_argument("approx_cascade_forward: noise length != signal length");
    const EquivalentPa eq = equivalent_pa(config);
    Signal out;
    out.oversampling = x0.oversampling;
    out.symbol_count = x0.symbol_count;
    out.samples.resize(x0.size());
    for (std::size_t n = 0; n < x0.size(); ++n)
        out.samples[n] = eq.g_tilde * pa_nonlinearity(x0.samples[n], eq.alpha_tilde) + eq.sigma_tilde * noise_equiv[n];
    out.nominal_power = mean_power(out.samples);
    return out;
}

double x_max(Complex alpha) {
    const double mag = std::abs(alpha);
    if (mag == 0.0) throw UndefinedSaturation("x_max: alpha = 0 has no saturation point");
    return std::sqrt(1.0 / (3.0 * mag));
}

double scenario2_gain(Complex alpha) {
    const double xm = x_max(alpha);
    return xm / std::abs(pa_nonlinearity(Complex(xm, 0.0), alpha));
}

}  // namespace pacascade
