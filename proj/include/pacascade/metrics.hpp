#pragma once

#include <span>
#include <utility>
#include <vector>

#include "pacascade/types.hpp"

namespace pacascade {

/// Averaged-periodogram PSD on a symbol-rate-normalized frequency axis
/// running from -OS/2 to +OS/2 inclusive (the Nyquist bin is split evenly
/// between both ends so the axis is symmetric).
struct PsdEstimate {
    std::vector<double> frequencies;
    std::vector<double> power_density;  ///< dB, peak-normalized to 0 dB
    std::vector<double> density;        ///< linear power per unit frequency; integrates to mean power
    double bin_width = 0.0;
    int segment_length = 0;
    double overlap_fraction = 0.0;
};

/// Main channel [-B/2, B/2] with B = (1 + rolloff) symbol rates; adjacent
/// channels of equal width sit at +-B.
struct ChannelPlan {
    double rolloff = 0.22;
    double bandwidth() const { return 1.0 + rolloff; }
};

struct AmAmPoint {
    double input_mag;
    double output_mag;
};

struct MetricsReport {
    double nmse_db = 0.0;
    double aclr_db = 0.0;
    PsdEstimate psd;
    std::vector<AmAmPoint> amam;
};

inline constexpr int kDefaultSegmentLength = 1024;
inline constexpr double kDefaultOverlap = 0.5;

/// 10 log10(sum |d - a|^2 / sum |d|^2). Returns -inf when the residual is
/// exactly zero.
double nmse(std::span<const Complex> desired, std::span<const Complex> actual);

PsdEstimate estimate_psd(const Signal& signal, int segment_length = kDefaultSegmentLength,
                         double overlap_fraction = kDefaultOverlap);

/// Power of `psd` integrated over [lo, hi], with fractional bin weights.
double band_power(const PsdEstimate& psd, double lo, double hi);

/// Worst adjacent channel over main channel, in dB; -inf if the adjacent
/// channels hold no power.
double aclr(const PsdEstimate& psd, const ChannelPlan& plan = {});

/// (|x_n|, |y_n|) pairs, keeping every `decimation`-th sample.
std::vector<AmAmPoint> amam_points(std::span<const Complex> input, std::span<const Complex> output,
                                   std::size_t decimation = 1);

struct ReportOptions {
    int segment_length = kDefaultSegmentLength;
    double overlap_fraction = kDefaultOverlap;
    ChannelPlan channels{};
    std::size_t amam_decimation = 1;
};

/// NMSE against `desired`, ACLR and PSD of `output`, AM/AM from `input` to `output`.
MetricsReport evaluate(const Signal& desired, const Signal& input, const Signal& output,
                       const ReportOptions& options = {});

}  // namespace pacascade
