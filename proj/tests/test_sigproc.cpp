#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pacascade/metrics.hpp"
#include "pacascade/sigproc.hpp"

using namespace pacascade;

TEST_CASE("generate_qam16 draws from the {+-1,+-3}^2 alphabet") {
    const auto s = generate_qam16(4, 7);
    REQUIRE(s.size() == 4);
    for (const auto& v : s) {
        for (double c : {v.real(), v.imag()}) {
            const bool member = c == -3.0 || c == -1.0 || c == 1.0 || c == 3.0;
            CHECK(member);
        }
    }
}

TEST_CASE("generate_qam16 second moment is 10") {
    const auto s = generate_qam16(100000, 3);
    CHECK(mean_power(s) == doctest::Approx(10.0).epsilon(0.02));
}

TEST_CASE("generate_qam16 is a pure function of its seed") {
    CHECK(generate_qam16(257, 11) == generate_qam16(257, 11));
    CHECK(generate_qam16(257, 11) != generate_qam16(257, 12));
    CHECK_THROWS_AS(generate_qam16(0, 1), std::invalid_argument);
}

TEST_CASE("rrc taps have unit energy and are symmetric") {
    for (double rolloff : {0.1, 0.22, 0.5, 1.0}) {
        const auto taps = rrc_taps(8, rolloff, 16);
        REQUIRE(taps.size() == 129);
        double e = 0.0;
        for (double h : taps) e += h * h;
        CHECK(e == doctest::Approx(1.0).epsilon(1e-10));
        for (std::size_t i = 0; i < taps.size(); ++i) CHECK(taps[i] == doctest::Approx(taps[taps.size() - 1 - i]));
    }
    // rolloff 0.25 with oversampling 8 puts a tap on the t = 1/(4 rolloff) singularity
    const auto taps = rrc_taps(8, 0.25, 16);
    for (double h : taps) CHECK(std::isfinite(h));
}

TEST_CASE("pulse_shape of an impulse reproduces the filter centered on the symbol") {
    const int os = 8;
    Samples symbols(33, Complex(0.0, 0.0));
    symbols[16] = Complex(1.0, 0.0);
    const auto sig = pulse_shape(symbols, os, 0.22, 16);
    const auto taps = rrc_taps(os, 0.22, 16);
    REQUIRE(sig.size() == 33 * os);
    CHECK(sig.symbol_count == 33);
    CHECK(sig.oversampling == os);
    const long half = static_cast<long>(taps.size() / 2);
    for (long j = 0; j < static_cast<long>(taps.size()); ++j) {
        const auto& v = sig.samples[static_cast<std::size_t>(16 * os - half + j)];
        CHECK(v.real() == doctest::Approx(taps[static_cast<std::size_t>(j)]).epsilon(1e-15));
        CHECK(v.imag() == 0.0);
    }
}

TEST_CASE("pulse_shape argument validation") {
    const Samples s(8, Complex(1.0, 0.0));
    CHECK_THROWS_AS(pulse_shape(s, 1, 0.22, 16), std::invalid_argument);
    CHECK_THROWS_AS(pulse_shape(s, 8, 0.0, 16), std::invalid_argument);
    CHECK_THROWS_AS(pulse_shape(s, 8, 1.5, 16), std::invalid_argument);
    CHECK_THROWS_AS(pulse_shape(s, 8, 0.22, 3), std::invalid_argument);
}

TEST_CASE("shaped 16-QAM is band limited") {
    auto symbols = generate_qam16(8192, 5);
    const auto sig = pulse_shape(symbols, 8, 0.22, 16);
    const auto psd = estimate_psd(sig);
    const double edge = (1.0 + 0.22) / 2.0;

    const double total = band_power(psd, -4.0, 4.0);
    const double outside = band_power(psd, -4.0, -edge) + band_power(psd, edge, 4.0);
    CHECK(outside / total < 1e-4);

    const double inside = band_power(psd, -edge, edge);
    CHECK(10.0 * std::log10(outside / inside) < -40.0);
}

TEST_CASE("normalize_power scales by one real factor") {
    Samples raw{{1.0, 0.0}, {0.0, -1.0}, {-1.0, 0.0}, {0.0, 1.0}};
    const auto unit = make_signal(raw, 2);
    const auto quarter = normalize_power(unit, 0.25);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        CHECK(quarter.samples[i].real() == doctest::Approx(0.5 * raw[i].real()));
        CHECK(quarter.samples[i].imag() == doctest::Approx(0.5 * raw[i].imag()));
    }
    CHECK(quarter.nominal_power == doctest::Approx(0.25));

    const auto sig = pulse_shape(generate_qam16(512, 9), 8, 0.22, 16);
    const auto p049 = normalize_power(sig, 0.49);
    CHECK(std::abs(mean_power(p049.samples) - 0.49) <= 1e-12 * 0.49);

    const auto once = normalize_power(sig, 1.0);
    const auto twice = normalize_power(once, 1.0);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(std::abs(once.samples[i] - twice.samples[i]) <= 1e-12);
}

TEST_CASE("normalize_power property: mean power hits any target in (0, 1]") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uniform_real_distribution<double> target(1e-6, 1.0);
    std::uniform_int_distribution<int> len(1, 500);
    for (int trial = 0; trial < 200; ++trial) {
        Samples s(static_cast<std::size_t>(len(rng)));
        for (auto& v : s) v = Complex(u(rng), u(rng));
        const double p = target(rng);
        const auto out = normalize_power(make_signal(s, 1), p);
        CHECK(std::abs(mean_power(out.samples) - p) <= 1e-12 * p);
    }
}

TEST_CASE("normalization of degenerate signals") {
    const auto zero = make_signal(Samples(16, Complex(0.0, 0.0)), 2);
    CHECK_THROWS_AS(normalize_power(zero, 1.0), DegenerateSignal);
    CHECK_THROWS_AS(normalize_peak(zero, 1.0), DegenerateSignal);
    const auto one = make_signal(Samples(16, Complex(1.0, 0.0)), 2);
    CHECK_THROWS_AS(normalize_power(one, 0.0), std::invalid_argument);
}

TEST_CASE("draw_noise statistics") {
    const auto n1 = draw_noise(1, 100000, 17);
    CHECK(oracle::variance(n1.stage_noise[0]) == doctest::Approx(1.0).epsilon(0.05));

    const auto n3 = draw_noise(3, 100000, 18);
    REQUIRE(n3.stages() == 3);
    for (std::size_t a = 0; a < 3; ++a) {
        CHECK(oracle::variance(n3.stage_noise[a]) == doctest::Approx(1.0).epsilon(0.05));
        for (std::size_t b = a + 1; b < 3; ++b) CHECK(oracle::correlation(n3.stage_noise[a], n3.stage_noise[b]) < 0.02);
    }
    // circular symmetry: half the variance per component
    double re = 0.0, im = 0.0;
    for (const auto& w : n1.stage_noise[0]) {
        re += w.real() * w.real();
        im += w.imag() * w.imag();
    }
    CHECK(re / 100000 == doctest::Approx(0.5).epsilon(0.05));
    CHECK(im / 100000 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("draw_noise is bit-reproducible per seed") {
    const auto a = draw_noise(2, 1000, 99);
    const auto b = draw_noise(2, 1000, 99);
    CHECK(a.stage_noise == b.stage_noise);
    CHECK(a.seed == 99);
    CHECK_THROWS_AS(draw_noise(0, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(draw_noise(1, 0, 1), std::invalid_argument);
}

TEST_CASE("excitation has unit peak and the requested length") {
    ExcitationSpec spec;
    spec.symbols = 1024;
    const auto x = make_excitation(spec);
    CHECK(x.size() == 1024 * 8);
    CHECK(x.symbol_count == 1024);
    CHECK(peak_magnitude(x.samples) == doctest::Approx(1.0).epsilon(1e-15));
    // shaped 16-QAM sits several dB under its peak
    CHECK(10.0 * std::log10(1.0 / x.nominal_power) > 4.0);
}
