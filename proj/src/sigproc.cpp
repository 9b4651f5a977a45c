#include "pacascade/sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace pacascade {

double mean_power(std::span<const Complex> samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : samples) acc += std::norm(s);
    return acc / static_cast<double>(samples.size());
}

double peak_magnitude(std::span<const Complex> samples) {
    double peak = 0.0;
    for (const auto& s : samples) peak = std::max(peak, std::abs(s));
    return peak;
}

Signal make_signal(Samples samples, int oversampling) {
    if (oversampling < 1) throw std::invalid_argument("make_signal: oversampling must be >= 1");
    Signal out;
    out.symbol_count = samples.size() / static_cast<std::size_t>(oversampling);
    out.oversampling = oversampling;
    out.nominal_power = mean_power(samples);
    out.samples = std::move(samples);
    return out;
}

Samples generate_qam16(std::size_t symbol_count, std::uint64_t seed) {
    if (symbol_count == 0) throw std::invalid_argument("generate_qam16: symbol_count must be >= 1");
    static constexpr double kLevels[4] = {-3.0, -1.0, 1.0, 3.0};

    // Levels come straight from the raw engine bits so the sequence does not
    // depend on the standard library's distribution implementation.
    std::mt19937_64 rng(seed);
    Samples symbols(symbol_count);
    for (auto& s : symbols) {
        const std::uint64_t v = rng();
        s = Complex(kLevels[(v >> 62) & 3u], kLevels[(v >> 60) & 3u]);
    }
    return symbols;
}

std::vector<double> rrc_taps(int oversampling, double rolloff, int span_symbols) {
    if (oversampling < 2) throw std::invalid_argument("rrc_taps: oversampling must be >= 2");
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw std::invalid_argument("rrc_taps: rolloff must be in (0, 1]");
    if (span_symbols < 4) throw std::invalid_argument("rrc_taps: span_symbols must be >= 4");

    using std::numbers::pi;
    const int half = span_symbols * oversampling / 2;
    std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
    const double b = rolloff;

    for (int i = -half; i <= half; ++i) {
        const double t = static_cast<double>(i) / oversampling;
        double h;
        if (i == 0) {
            h = 1.0 + b * (4.0 / pi - 1.0);
        } else if (std::abs(std::abs(4.0 * b * t) - 1.0) < 1e-12) {
            // removable singularity at t = +-1/(4 rolloff)
            h = b / std::sqrt(2.0) *
                ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * b)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * b)));
        } else {
            const double num = std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b));
            const double den = pi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t));
            h = num / den;
        }
        taps[static_cast<std::size_t>(i + half)] = h;
    }

    double energy = 0.0;
    for (double h : taps) energy += h * h;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& h : taps) h *= scale;
    return taps;
}

Signal pulse_shape(std::span<const Complex> symbols, int oversampling, double rolloff, int span_symbols) {
    if (symbols.empty()) throw std::invalid_argument("pulse_shape: no symbols");
    if (oversampling < 2)
        throw std::invalid_argument("pulse_shape: oversampling must be >= 2 or the adjacent channel aliases");
    const auto taps = rrc_taps(oversampling, rolloff, span_symbols);
    const long half = static_cast<long>(taps.size() / 2);
    const long os = oversampling;
    const long n_out = static_cast<long>(symbols.size()) * os;

    Samples out(static_cast<std::size_t>(n_out), Complex(0.0, 0.0));
    for (long m = 0; m < static_cast<long>(symbols.size()); ++m) {
        const Complex s = symbols[static_cast<std::size_t>(m)];
        const long base = m * os - half;
        const long j0 = std::max(0L, -base);
        const long j1 = std::min(static_cast<long>(taps.size()), n_out - base);
        for (long j = j0; j < j1; ++j) out[static_cast<std::size_t>(base + j)] += s * taps[static_cast<std::size_t>(j)];
    }

    Signal sig;
    sig.samples = std::move(out);
    sig.oversampling = oversampling;
    sig.symbol_count = symbols.size();
    sig.nominal_power = mean_power(sig.samples);
    return sig;
}

Signal scaled(const Signal& signal, double factor) {
    Signal out = signal;
    for (auto& s : out.samples) s *= factor;
    out.nominal_power = signal.nominal_power * factor * factor;
    return out;
}

Signal normalize_power(Signal signal, double target_power) {
    if (!(target_power > 0.0)) throw std::invalid_argument("normalize_power: target_power must be > 0");
    const double p = mean_power(signal.samples);
    if (p == 0.0) throw DegenerateSignal("normalize_power: signal has zero energy");
    const double factor = std::sqrt(target_power / p);
    for (auto& s : signal.samples) s *= factor;
    signal.nominal_power = mean_power(signal.samples);
    return signal;
}

Signal normalize_peak(Signal signal, double target_peak) {
    if (!(target_peak > 0.0)) throw std::invalid_argument("normalize_peak: target_peak must be > 0");
    const double peak = peak_magnitude(signal.samples);
    if (peak == 0.0) throw DegenerateSignal("normalize_peak: signal has zero energy");
    const double factor = target_peak / peak;
    for (auto& s : signal.samples) s *= factor;
    signal.nominal_power = mean_power(signal.samples);
    return signal;
}

NoiseRealization draw_noise(int stages, std::size_t length, std::uint64_t seed) {
    if (stages < 1) throw std::invalid_argument("draw_noise: stages must be >= 1");
    if (length < 1) throw std::invalid_argument("draw_noise: length must be >= 1");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> component(0.0, std::sqrt(0.5));
    NoiseRealization noise;
    noise.seed = seed;
    noise.stage_noise.resize(static_cast<std::size_t>(stages));
    for (auto& seq : noise.stage_noise) {
        seq.resize(length);
        for (auto& w : seq) {
            const double re = component(rng);
            const double im = component(rng);
            w = Complex(re, im);
        }
    }
    return noise;
}

Signal make_excitation(const ExcitationSpec& spec) {
    auto symbols = generate_qam16(spec.symbols, spec.seed);
    // E|s|^2 = 10 for the {±1, ±3} alphabet
    const double unit = 1.0 / std::sqrt(10.0);
    for (auto& s : symbols) s *= unit;
    return normalize_peak(pulse_shape(symbols, spec.oversampling, spec.rolloff, spec.span_symbols), 1.0);
}

}  // namespace pacascade
