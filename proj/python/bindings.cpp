#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qsim/correlator.hpp"
#include "qsim/emitter.hpp"
#include "qsim/experiments.hpp"
#include "qsim/fitting.hpp"
#include "qsim/io.hpp"
#include "qsim/modulator.hpp"
#include "qsim/optics.hpp"

namespace py = pybind11;
using namespace qsim;

PYBIND11_MODULE(_qsim, m) {
    m.doc() = "Photon-statistics simulator: emitter, modulator, optics, correlator, fitting";

    // --- emitter ---
    py::class_<EmitterParams>(m, "EmitterParams")
        .def(py::init([](double rabi, double decay, double dephasing) {
                 EmitterParams p{rabi, decay, dephasing};
                 p.validate();
                 return p;
             }),
             py::arg("rabi_frequency"), py::arg("decay_rate"), py::arg("dephasing_rate") = 0.0)
        .def_readonly("rabi_frequency", &EmitterParams::rabi_frequency)
        .def_readonly("decay_rate", &EmitterParams::decay_rate)
        .def_readonly("dephasing_rate", &EmitterParams::dephasing_rate)
        .def_property_readonly("mu_squared", &EmitterParams::mu_squared)
        .def_property_readonly("lifetime", &EmitterParams::lifetime)
        .def_static("hz_to_angular", &EmitterParams::hz_to_angular)
        .def_static("angular_to_hz", &EmitterParams::angular_to_hz);

    py::class_<TimeTagStream>(m, "TimeTagStream")
        .def(py::init<>())
        .def_readwrite("channel", &TimeTagStream::channel)
        .def_readwrite("timestamps", &TimeTagStream::timestamps)
        .def_readwrite("duration_ps", &TimeTagStream::duration_ps)
        .def("mean_rate_hz", &TimeTagStream::mean_rate_hz)
        .def("__len__", [](const TimeTagStream& s) { return s.timestamps.size(); });

    m.def("g2_analytic", &g2_analytic, py::arg("params"), py::arg("tau_seconds"));
    m.def("oracle_bloch_g2",
          [](const EmitterParams& p, const std::vector<double>& grid) { return oracle_bloch_g2(p, grid); },
          py::arg("params"), py::arg("tau_grid_seconds"));
    m.def("sample_emissions", &sample_emissions, py::arg("params"), py::arg("duration_ps"),
          py::arg("seed"), py::arg("segments") = 1);

    // --- modulator ---
    py::class_<ModulatorConfig>(m, "ModulatorConfig")
        .def(py::init([](double beta, double drive_hz, double phase) {
                 ModulatorConfig c{beta, drive_hz, phase};
                 c.validate();
                 return c;
             }),
             py::arg("modulation_index"), py::arg("drive_frequency_hz"), py::arg("drive_phase") = 0.0)
        .def_readonly("modulation_index", &ModulatorConfig::modulation_index)
        .def_readonly("drive_frequency_hz", &ModulatorConfig::drive_frequency_hz)
        .def_readonly("drive_phase", &ModulatorConfig::drive_phase);

    py::class_<SidebandLadder>(m, "SidebandLadder")
        .def_readonly("center_frequency_hz", &SidebandLadder::center_frequency_hz)
        .def_readonly("mode_spacing_hz", &SidebandLadder::mode_spacing_hz)
        .def_readonly("max_order", &SidebandLadder::max_order)
        .def_readonly("amplitudes", &SidebandLadder::amplitudes)
        .def("amplitude", &SidebandLadder::amplitude)
        .def("power", &SidebandLadder::power)
        .def("total_power", &SidebandLadder::total_power);

    py::class_<SpectrumTrace>(m, "SpectrumTrace")
        .def_readonly("offsets_hz", &SpectrumTrace::offsets_hz)
        .def_readonly("intensities", &SpectrumTrace::intensities)
        .def_readonly("linewidth_hz", &SpectrumTrace::linewidth_hz);

    m.def("bessel_j", &bessel_j, py::arg("order"), py::arg("beta"));
    m.def("truncation_order", &truncation_order, py::arg("beta"), py::arg("epsilon"));
    m.def("carrier_null_index", &carrier_null_index);
    m.def("sideband_amplitudes", &sideband_amplitudes, py::arg("config"),
          py::arg("center_frequency_hz") = 0.0, py::arg("epsilon") = 1e-9);
    m.def("identity_ladder", &identity_ladder, py::arg("center_frequency_hz") = 0.0,
          py::arg("mode_spacing_hz") = 1.0);
    m.def("compose", &compose);
    m.def("spectrum_trace",
          [](const SidebandLadder& l, double src, double etalon, const std::vector<double>& grid) {
              return spectrum_trace(l, src, etalon, grid);
          },
          py::arg("ladder"), py::arg("source_fwhm_hz"), py::arg("etalon_fwhm_hz"), py::arg("scan_offsets_hz"));
    m.def("spectrum_integral", &spectrum_integral);

    // --- optics ---
    py::enum_<Polarization>(m, "Polarization")
        .value("parallel", Polarization::parallel)
        .value("orthogonal", Polarization::orthogonal);

    py::class_<HomConfig>(m, "HomConfig")
        .def(py::init([](std::int64_t delay, double overlap, double tc, Polarization pol) {
                 HomConfig c{delay, overlap, tc, pol};
                 c.validate();
                 return c;
             }),
             py::arg("arm_delay_ps") = 35'000, py::arg("mode_overlap") = 1.0,
             py::arg("coherence_time_s") = 1e-9, py::arg("polarization") = Polarization::parallel)
        .def_readwrite("arm_delay_ps", &HomConfig::arm_delay_ps)
        .def_readwrite("mode_overlap", &HomConfig::mode_overlap)
        .def_readwrite("coherence_time_s", &HomConfig::coherence_time_s)
        .def_readwrite("polarization", &HomConfig::polarization);

    py::class_<DetectorModel>(m, "DetectorModel")
        .def(py::init([](double jitter, std::int64_t dead, double eff, double dark) {
                 DetectorModel d{jitter, dead, eff, dark};
                 d.validate();
                 return d;
             }),
             py::arg("jitter_sigma_ps") = 0.0, py::arg("dead_time_ps") = 0,
             py::arg("efficiency") = 1.0, py::arg("dark_rate_hz") = 0.0)
        .def_readwrite("jitter_sigma_ps", &DetectorModel::jitter_sigma_ps)
        .def_readwrite("dead_time_ps", &DetectorModel::dead_time_ps)
        .def_readwrite("efficiency", &DetectorModel::efficiency)
        .def_readwrite("dark_rate_hz", &DetectorModel::dark_rate_hz);

    m.def("hom_p2_parallel", &hom_p2_parallel);
    m.def("hom_p2_orthogonal", &hom_p2_orthogonal);
    m.def("hom_visibility", &hom_visibility);
    m.def("apply_detector", &apply_detector);
    m.def("split_stream", &split_stream);
    m.def("simulate_hom_clicks", &simulate_hom_clicks, py::arg("params"), py::arg("config"),
          py::arg("model"), py::arg("target_pairs"), py::arg("seed"),
          py::arg("bin_width_ps") = 256, py::arg("ladder") = std::nullopt);

    // --- correlator ---
    py::class_<CorrelationHistogram>(m, "CorrelationHistogram")
        .def_readonly("bin_width_ps", &CorrelationHistogram::bin_width_ps)
        .def_readonly("window_ps", &CorrelationHistogram::window_ps)
        .def_readonly("counts", &CorrelationHistogram::counts)
        .def_readonly("tags_a", &CorrelationHistogram::tags_a)
        .def_readonly("tags_b", &CorrelationHistogram::tags_b)
        .def_readonly("duration_ps", &CorrelationHistogram::duration_ps)
        .def("half_bins", &CorrelationHistogram::half_bins)
        .def("bin_center_ps", &CorrelationHistogram::bin_center_ps)
        .def("total_counts", &CorrelationHistogram::total_counts);

    m.def("cross_correlate", &cross_correlate, py::arg("a"), py::arg("b"),
          py::arg("bin_width_ps"), py::arg("window_ps"), py::arg("partitions") = 1);
    m.def("auto_correlate", &auto_correlate);
    m.def("normalize_to_g2", &normalize_to_g2);
    m.def("normalize_by_plateau", &normalize_by_plateau);
    m.def("merge", &merge);

    // --- io ---
    m.def("write_timetag_binary", &write_timetag_binary);
    m.def("read_timetag_binary", &read_timetag_binary);
    m.def("write_timetag_csv", &write_timetag_csv);
    m.def("read_timetag_csv", &read_timetag_csv);

    // --- fitting (convenience entry points) ---
    py::class_<FitResult>(m, "FitResult")
        .def_readonly("parameters", &FitResult::parameters)
        .def_readonly("covariance", &FitResult::covariance)
        .def_readonly("chi2_reduced", &FitResult::chi2_reduced)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("converged", &FitResult::converged)
        .def("parameter_errors", &FitResult::parameter_errors);

    m.def("fit_exp_offset",
          [](const std::vector<double>& x, const std::vector<double>& y, std::vector<double> initial) {
              FitProblem p;
              p.model = make_exp_offset_model();
              p.x = x;
              p.y = y;
              p.initial = std::move(initial);
              return least_squares(p);
          },
          py::arg("x"), py::arg("y"), py::arg("initial"));
    m.def("model_g2", &model_g2, py::arg("params"), py::arg("amplitude"), py::arg("baseline"),
          py::arg("jitter_sigma_ps"), py::arg("tau_seconds"));

    // --- experiments ---
    py::class_<RunSummary>(m, "RunSummary")
        .def_readonly("values", &RunSummary::values)
        .def("line", &RunSummary::line);
    m.def("run_experiment_json",
          [](const std::string& config_text) { return run_experiment(RunConfig::from_json_text(config_text)); },
          py::arg("config_json"));
}
