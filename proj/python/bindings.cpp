#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "pacascade/experiment.hpp"

namespace py = pybind11;
using namespace pacascade;

namespace {

using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Samples to_samples(const ComplexArray& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D complex array");
    return Samples(a.data(), a.data() + a.size());
}

ComplexArray to_array(const Samples& s) {
    ComplexArray out(static_cast<py::ssize_t>(s.size()));
    std::copy(s.begin(), s.end(), out.mutable_data());
    return out;
}

RealArray to_array(const std::vector<double>& v) {
    RealArray out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

NoiseRealization to_noise(const ComplexArray& a, std::size_t stages, std::size_t length) {
    NoiseRealization n;
    if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(0)) < stages || static_cast<std::size_t>(a.shape(1)) != length)
        throw std::invalid_argument("noise must have shape (>= K, len(x))");
    for (py::ssize_t k = 0; k < a.shape(0); ++k) {
        const Complex* row = a.data(k, 0);
        n.stage_noise.emplace_back(row, row + a.shape(1));
    }
    return n;
}

CascadeConfig make_cascade(const std::vector<double>& gains, Complex alpha, double sigma) {
    CascadeConfig cfg;
    for (double g : gains) cfg.stages.push_back({alpha, g});
    cfg.sigma = sigma;
    return cfg;
}

ExperimentConfig parse_config(const std::string& json_text) {
    return json_text.empty() ? ExperimentConfig{} : config_from_json(nlohmann::json::parse(json_text));
}

py::dict metrics_dict(const MetricsReport& m) {
    py::dict d;
    d["nmse_db"] = m.nmse_db;
    d["aclr_db"] = m.aclr_db;
    return d;
}

py::dict record_dict(const RunRecord& rec, bool include_signals) {
    py::list scenarios;
    for (const auto& s : rec.scenarios) {
        py::dict d = metrics_dict(s.metrics);
        d["K"] = s.K;
        d["case"] = s.label();
        d["saturated_stages"] = s.saturated_stages;
        if (include_signals) d["output"] = to_array(s.output.samples);
        scenarios.append(d);
    }
    py::list runs;
    for (const auto& o : rec.optimizations) {
        py::dict d;
        d["K"] = o.K;
        d["case"] = o.label();
        d["failed"] = o.failed;
        if (o.failed) {
            d["error"] = o.error;
        } else {
            d["input_power"] = o.params.input_power;
            d["gains"] = o.params.gains;
            d["objective"] = o.result.objective;
            d["objective_history"] = o.result.objective_history;
            d["status"] = std::string(to_string(o.result.status));
            d["iterations"] = o.result.iterations;
            d["before"] = metrics_dict(o.before);
            d["after"] = metrics_dict(o.after);
            if (include_signals) d["output"] = to_array(o.output.samples);
        }
        runs.append(d);
    }
    py::dict out;
    out["scenarios"] = scenarios;
    out["optimizations"] = runs;
    out["warnings"] = rec.warnings;
    return out;
}

py::dict finish(const RunRecord& rec, const std::optional<std::string>& out_dir, bool include_signals) {
    py::dict d = record_dict(rec, include_signals);
    if (out_dir) {
        const auto emitted = emit_outputs(rec, *out_dir);
        d["digest"] = emitted.digest;
        py::list files;
        for (const auto& f : emitted.files) files.append(f.name);
        d["files"] = files;
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Cascaded power-amplifier simulation and optimization";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "OutputError", PyExc_OSError);
    py::register_exception<UndefinedSaturation>(m, "UndefinedSaturation", PyExc_ValueError);

    m.def(
        "make_excitation",
        [](std::size_t symbols, int oversampling, double rolloff, std::uint64_t seed) {
            ExcitationSpec spec;
            spec.symbols = symbols;
            spec.oversampling = oversampling;
            spec.rolloff = rolloff;
            spec.seed = seed;
            return to_array(make_excitation(spec).samples);
        },
        py::arg("symbols") = 4096, py::arg("oversampling") = 8, py::arg("rolloff") = 0.22, py::arg("seed") = 1,
        "RRC-shaped 16-QAM scaled to unit peak magnitude.");

    m.def(
        "draw_noise",
        [](int stages, std::size_t length, std::uint64_t seed) {
            const auto n = draw_noise(stages, length, seed);
            py::array_t<Complex> out({static_cast<py::ssize_t>(stages), static_cast<py::ssize_t>(length)});
            for (int k = 0; k < stages; ++k)
                std::copy(n.stage_noise[static_cast<std::size_t>(k)].begin(),
                          n.stage_noise[static_cast<std::size_t>(k)].end(), out.mutable_data(k, 0));
            return out;
        },
        py::arg("stages"), py::arg("length"), py::arg("seed"), "Unit-variance circular Gaussian noise, one row per stage.");

    m.def(
        "cascade_forward",
        [](const ComplexArray& x, const std::vector<double>& gains, Complex alpha, double sigma,
           std::optional<ComplexArray> noise, std::uint64_t seed) {
            const auto sig = make_signal(to_samples(x), 1);
            const auto cfg = make_cascade(gains, alpha, sigma);
            const auto n = noise ? to_noise(*noise, gains.size(), sig.size())
                                 : draw_noise(static_cast<int>(gains.size()), sig.size(), seed);
            return to_array(cascade_forward(sig, cfg, n, Retention::Streaming).output.samples);
        },
        py::arg("x"), py::arg("gains"), py::arg("alpha"), py::arg("sigma") = 0.0, py::arg("noise") = py::none(),
        py::arg("seed") = 1, "Output of a K-stage cascade y = g f(y_prev + sigma w).");

    m.def(
        "equivalent_pa",
        [](const std::vector<double>& gains, Complex alpha, double sigma) {
            const auto eq = equivalent_pa(make_cascade(gains, alpha, sigma));
            return py::make_tuple(eq.g_tilde, eq.alpha_tilde, eq.sigma_tilde);
        },
        py::arg("gains"), py::arg("alpha"), py::arg("sigma") = 0.0, "(gain, alpha, sigma) of the single-PA equivalent.");

    m.def("x_max", &x_max, py::arg("alpha"));
    m.def("scenario2_gain", &scenario2_gain, py::arg("alpha"));

    m.def(
        "nmse",
        [](const ComplexArray& desired, const ComplexArray& actual) {
            return nmse(to_samples(desired), to_samples(actual));
        },
        py::arg("desired"), py::arg("actual"));

    m.def(
        "estimate_psd",
        [](const ComplexArray& x, int oversampling, int segment_length, double overlap) {
            const auto psd = estimate_psd(make_signal(to_samples(x), oversampling), segment_length, overlap);
            return py::make_tuple(to_array(psd.frequencies), to_array(psd.power_density));
        },
        py::arg("x"), py::arg("oversampling") = 8, py::arg("segment_length") = kDefaultSegmentLength,
        py::arg("overlap") = kDefaultOverlap, "(frequency in symbol rates, peak-normalized PSD in dB).");

    m.def(
        "aclr",
        [](const ComplexArray& x, int oversampling, double rolloff) {
            return aclr(estimate_psd(make_signal(to_samples(x), oversampling)), ChannelPlan{rolloff});
        },
        py::arg("x"), py::arg("oversampling") = 8, py::arg("rolloff") = 0.22);

    m.def(
        "_simulate",
        [](const std::string& config, int scenario, std::optional<std::string> out_dir, bool signals) {
            auto c = parse_config(config);
            c.validate();
            const auto rec = [&] {
                py::gil_scoped_release release;
                return run_scenarios(c, {scenario == 2 ? Scenario::Two : Scenario::One});
            }();
            return finish(rec, out_dir, signals);
        },
        py::arg("config"), py::arg("scenario"), py::arg("out_dir") = py::none(), py::arg("signals") = false);

    m.def(
        "_optimize",
        [](const std::string& config, std::optional<std::string> out_dir, bool signals) {
            auto c = parse_config(config);
            c.validate();
            const auto rec = [&] {
                py::gil_scoped_release release;
                return run_optimizations(c);
            }();
            return finish(rec, out_dir, signals);
        },
        py::arg("config"), py::arg("out_dir") = py::none(), py::arg("signals") = false);

    m.def(
        "_sweep",
        [](const std::string& config, std::optional<std::string> out_dir, bool signals) {
            auto c = parse_config(config);
            c.validate();
            const auto rec = [&] {
                py::gil_scoped_release release;
                return run_sweep(c);
            }();
            return finish(rec, out_dir, signals);
        },
        py::arg("config"), py::arg("out_dir") = py::none(), py::arg("signals") = false);

    m.def(
        "default_config", [] { return config_to_json(ExperimentConfig{}).dump(); },
        "Default experiment configuration as a JSON string.");
}
