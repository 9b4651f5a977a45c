#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pacascade/types.hpp"

namespace pacascade {

/// K unit-variance complex Gaussian sequences, one per cascade stage.
struct NoiseRealization {
    std::vector<Samples> stage_noise;
    std::uint64_t seed = 0;

    std::size_t stages() const { return stage_noise.size(); }
    std::size_t length() const { return stage_noise.empty() ? 0 : stage_noise.front().size(); }
};

/// Uniform draws from the unnormalized 16-QAM alphabet {±1, ±3} x {±1, ±3}.
Samples generate_qam16(std::size_t symbol_count, std::uint64_t seed);

/// Unit-energy root-raised-cosine taps spanning `span_symbols` symbols,
/// span_symbols * oversampling + 1 taps long.
std::vector<double> rrc_taps(int oversampling, double rolloff, int span_symbols);

/// Zero-insertion upsampling followed by RRC filtering. The output has
/// symbols.size() * oversampling samples with the filter delay removed, so
/// symbol m's pulse peaks at sample m * oversampling.
Signal pulse_shape(std::span<const Complex> symbols, int oversampling, double rolloff,
                   int span_symbols);

/// Scales by one real factor so the mean |x|^2 equals target_power.
Signal normalize_power(Signal signal, double target_power);

/// Scales by one real factor so max |x| equals target_peak.
Signal normalize_peak(Signal signal, double target_peak = 1.0);

NoiseRealization draw_noise(int stages, std::size_t length, std::uint64_t seed);

struct ExcitationSpec {
    std::size_t symbols = 4096;
    int oversampling = 8;
    double rolloff = 0.22;
    int span_symbols = 16;
    std::uint64_t seed = 1;
};

/// The cascade excitation: unit-average-power 16-QAM, RRC shaped, scaled to
/// unit peak amplitude. Driving the cascade with sqrt(p0) times this signal
/// makes p0 the peak input power.
Signal make_excitation(const ExcitationSpec& spec);

/// Copy of `signal` with every sample multiplied by `factor`.
Signal scaled(const Signal& signal, double factor);

}  // namespace pacascade
