#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pacascade {

using Complex = std::complex<double>;
using Samples = std::vector<Complex>;

/// Complex baseband sample sequence plus the metadata needed to interpret it
/// spectrally (samples per symbol) and its mean power.
struct Signal {
    Samples samples;
    int oversampling = 1;
    std::size_t symbol_count = 0;
    double nominal_power = 0.0;

    std::size_t size() const { return samples.size(); }
    std::span<const Complex> view() const { return samples; }
};

double mean_power(std::span<const Complex> samples);
double peak_magnitude(std::span<const Complex> samples);

/// Wraps raw samples; symbol_count is samples / oversampling and
/// nominal_power is measured.
Signal make_signal(Samples samples, int oversampling);

/// Sentinel written to CSV/JSON in place of -inf dB.
inline constexpr double kBelowFloorDb = -300.0;

inline double finite_db(double db) { return db < kBelowFloorDb ? kBelowFloorDb : db; }

// Error taxonomy. Argument problems derive from std::invalid_argument so
// callers can catch them generically.

class DegenerateSignal : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UndefinedSaturation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedMode : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidStart : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pacascade
