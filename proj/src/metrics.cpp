#include "pacascade/metrics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pacascade {

namespace {

// The FFTW planner is not re-entrant; execution on distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class FftWorkspace {
public:
    explicit FftWorkspace(int n) : n_(n) {
        buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n)));
        if (buffer_ == nullptr) throw std::bad_alloc();
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_1d(n, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    ~FftWorkspace() {
        {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(buffer_);
    }
    FftWorkspace(const FftWorkspace&) = delete;
    FftWorkspace& operator=(const FftWorkspace&) = delete;

    Complex* data() { return reinterpret_cast<Complex*>(buffer_); }
    void execute() { fftw_execute(plan_); }
    int size() const { return n_; }

private:
    int n_;
    fftw_complex* buffer_ = nullptr;
    fftw_plan plan_ = nullptr;
};

}  // namespace

double nmse(std::span<const Complex> desired, std::span<const Complex> actual) {
    if (desired.size() != actual.size())
        throw std::invalid_argument("nmse: length mismatch (" + std::to_string(desired.size()) + " vs " +
                                    std::to_string(actual.size()) + ")");
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t n = 0; n < desired.size(); ++n) {
        err += std::norm(desired[n] - actual[n]);
        ref += std::norm(desired[n]);
    }
    if (ref == 0.0) throw DegenerateSignal("nmse: desired signal has zero energy");
    if (err == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(err / ref);
}

PsdEstimate estimate_psd(const Signal& signal, int segment_length, double overlap_fraction) {
    if (segment_length < 2 || segment_length % 2 != 0)
        throw std::invalid_argument("estimate_psd: segment_length must be even and >= 2");
    if (static_cast<std::size_t>(segment_length) > signal.size())
        throw std::invalid_argument("estimate_psd: segment_length " + std::to_string(segment_length) +
                                    " exceeds signal length " + std::to_string(signal.size()));
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
        throw std::invalid_argument("estimate_psd: overlap_fraction must be in [0, 1)");

    const std::size_t L = static_cast<std::size_t>(segment_length);
    const std::size_t overlap = static_cast<std::size_t>(std::lround(overlap_fraction * static_cast<double>(L)));
    const std::size_t hop = std::max<std::size_t>(1, L - overlap);
    const std::size_t segments = 1 + (signal.size() - L) / hop;

    std::vector<double> window(L);
    double window_energy = 0.0;
    for (std::size_t n = 0; n < L; ++n) {
        window[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(L)));
        window_energy += window[n] * window[n];
    }

    FftWorkspace fft(segment_length);
    std::vector<double> acc(L, 0.0);
    for (std::size_t s = 0; s < segments; ++s) {
        const Complex* x = signal.samples.data() + s * hop;
        Complex* buf = fft.data();
        for (std::size_t n = 0; n < L; ++n) buf[n] = x[n] * window[n];
        fft.execute();
        for (std::size_t k = 0; k < L; ++k) acc[k] += std::norm(buf[k]);
    }

    // per-bin power, summing to the mean power of the signal
    const double norm = 1.0 / (static_cast<double>(segments) * static_cast<double>(L) * window_energy);
    const double os = static_cast<double>(signal.oversampling);
    const double df = os / static_cast<double>(L);

    PsdEstimate psd;
    psd.segment_length = segment_length;
    psd.overlap_fraction = overlap_fraction;
    psd.bin_width = df;
    psd.frequencies.resize(L + 1);
    psd.density.resize(L + 1);
    const std::size_t half = L / 2;
    for (std::size_t j = 0; j <= L; ++j) {
        psd.frequencies[j] = (static_cast<double>(j) - static_cast<double>(half)) * df;
        const std::size_t k = (j + half) % L;
        psd.density[j] = acc[k] * norm / df;
    }

    const double peak = *std::max_element(psd.density.begin(), psd.density.end());
    psd.power_density.resize(L + 1);
    for (std::size_t j = 0; j <= L; ++j) {
        psd.power_density[j] = (peak > 0.0 && psd.density[j] > 0.0) ? 10.0 * std::log10(psd.density[j] / peak)
                                                                     : -std::numeric_limits<double>::infinity();
    }
    return psd;
}

double band_power(const PsdEstimate& psd, double lo, double hi) {
    if (psd.frequencies.empty()) return 0.0;
    // the outermost bins are half inside the axis: each holds half the Nyquist bin
    lo = std::max(lo, psd.frequencies.front());
    hi = std::min(hi, psd.frequencies.back());
    const double df = psd.bin_width;
    double total = 0.0;
    for (std::size_t j = 0; j < psd.frequencies.size(); ++j) {
        const double a = std::max(lo, psd.frequencies[j] - 0.5 * df);
        const double b = std::min(hi, psd.frequencies[j] + 0.5 * df);
        if (b > a) total += psd.density[j] * (b - a);
    }
    return total;
}

double aclr(const PsdEstimate& psd, const ChannelPlan& plan) {
    if (psd.frequencies.empty()) throw std::invalid_argument("aclr: empty PSD");
    const double bw = plan.bandwidth();
    if (psd.frequencies.back() < 1.5 * bw || psd.frequencies.front() > -1.5 * bw)
        throw std::invalid_argument("aclr: PSD span does not cover +-1.5 channel bandwidths");

    const double main = band_power(psd, -0.5 * bw, 0.5 * bw);
    if (main == 0.0) throw DegenerateSignal("aclr: main channel holds no power");
    const double upper = band_power(psd, 0.5 * bw, 1.5 * bw);
    const double lower = band_power(psd, -1.5 * bw, -0.5 * bw);
    const double adjacent = std::max(upper, lower);
    if (adjacent == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(adjacent / main);
}

std::vector<AmAmPoint> amam_points(std::span<const Complex> input, std::span<const Complex> output,
                                   std::size_t decimation) {
    if (input.size() != output.size()) throw std::invalid_argument("amam_points: length mismatch");
    if (decimation == 0) throw std::invalid_argument("amam_points: decimation must be >= 1");
    std::vector<AmAmPoint> points;
    points.reserve(input.size() / decimation + 1);
    for (std::size_t n = 0; n < input.size(); n += decimation)
        points.push_back({std::abs(input[n]), std::abs(output[n])});
    return points;
}

MetricsReport evaluate(const Signal& desired, const Signal& input, const Signal& output,
                       const ReportOptions& options) {
    MetricsReport report;
    report.nmse_db = nmse(desired.samples, output.samples);
    report.psd = estimate_psd(output, options.segment_length, options.overlap_fraction);
    report.aclr_db = aclr(report.psd, options.channels);
    report.amam = amam_points(input.samples, output.samples, options.amam_decimation);
    return report;
}

}  // namespace pacascade
