#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rainflow/bench.hpp"
#include "rainflow/config.hpp"
#include "rainflow/decompose.hpp"
#include "rainflow/flowio.hpp"
#include "rainflow/parallel.hpp"
#include "rainflow/pipeline.hpp"
#include "rainflow/rainsim.hpp"
#include "rainflow/residue.hpp"

namespace py = pybind11;
using namespace rainflow;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, C) arrays <-> Image.
Image to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw DimensionError("expected an (H, W) or (H, W, C) array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  return Image(w, h, c, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_image(const Image& img) {
  std::vector<py::ssize_t> shape{img.height(), img.width()};
  if (img.channels() != 1) shape.push_back(img.channels());
  Array out(shape);
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

// (H, W, 2) arrays <-> FlowField.
FlowField to_flow(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 2) throw DimensionError("expected an (H, W, 2) flow array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  FlowField f(w, h);
  const double* p = a.data();
  for (std::size_t i = 0; i < f.pixel_count(); ++i) {
    f.u()[i] = p[2 * i];
    f.v()[i] = p[2 * i + 1];
  }
  return f;
}

Array from_flow(const FlowField& f) {
  Array out({static_cast<py::ssize_t>(f.height()), static_cast<py::ssize_t>(f.width()), py::ssize_t{2}});
  double* p = out.mutable_data();
  for (std::size_t i = 0; i < f.pixel_count(); ++i) {
    p[2 * i] = f.u()[i];
    p[2 * i + 1] = f.v()[i];
  }
  return out;
}

Config make_config(const std::map<std::string, std::string>& overrides) {
  Config cfg;
  for (const auto& [k, v] : overrides) set_config_value(cfg, k, v);
  return cfg;
}

py::dict energy_dict(const EnergyReport& e) {
  py::dict d;
  d["data_intensity"] = e.data_intensity;
  d["data_residue"] = e.data_residue;
  d["smoothness"] = e.smoothness;
  d["fidelity1"] = e.fidelity1;
  d["fidelity2"] = e.fidelity2;
  d["l0_1"] = e.l0_1;
  d["l0_2"] = e.l0_2;
  d["total"] = e.total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_rainflow, m) {
  m.doc() = "Rain-robust optical flow";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("config_keys", [] {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const ConfigKey& k : config_keys()) out.emplace_back(k.name, k.default_value, k.description);
    return out;
  }, "(name, default, description) for every config key");

  m.def("set_thread_count", &set_thread_count, py::arg("threads"));

  m.def("residue_channel", [](const Array& img) { return from_image(residue_channel(to_image(img))); },
        py::arg("image"));
  m.def("weight_map",
        [](const Array& img, double gamma) { return from_image(weight_map(to_image(img), gamma)); },
        py::arg("image"), py::arg("gamma") = kDefaultResidueGamma);

  m.def("l0_smooth",
        [](const Array& img, double beta) { return from_image(l0_smooth(to_image(img), beta)); },
        py::arg("image"), py::arg("beta"));
  m.def("count_edges", [](const Array& img) { return count_edges(to_image(img)); }, py::arg("layer"));

  m.def("estimate",
        [](const Array& f1, const Array& f2, const std::map<std::string, std::string>& overrides) {
          const Config cfg = make_config(overrides);
          const Image a = to_image(f1), b = to_image(f2);
          PipelineResult r;
          {
            py::gil_scoped_release release;
            r = estimate(a, b, cfg.solver);
          }
          py::list trace;
          for (const EnergyReport& e : r.energy_trace) trace.append(energy_dict(e));
          py::dict d;
          d["flow"] = from_flow(r.flow);
          d["initial_flow"] = from_flow(r.initial_flow);
          d["J1"] = from_image(r.J1);
          d["J2"] = from_image(r.J2);
          d["L1"] = from_image(r.L1);
          d["L2"] = from_image(r.L2);
          d["energy_trace"] = trace;
          d["iterations_run"] = r.iterations_run;
          return d;
        },
        py::arg("frame1"), py::arg("frame2"), py::arg("config") = std::map<std::string, std::string>{},
        "Runs the full pipeline; `config` maps config keys to string values.");

  m.def("make_background",
        [](int w, int h, std::uint64_t seed) { return from_image(make_background(w, h, seed)); },
        py::arg("width"), py::arg("height"), py::arg("seed") = 1);

  m.def("render_pair",
        [](const Array& bg, double dx, double dy, const std::map<std::string, std::string>& overrides) {
          const RainPair p = make_translation_pair(to_image(bg), dx, dy, make_config(overrides).rain);
          py::dict d;
          d["frame1"] = from_image(p.frame1);
          d["frame2"] = from_image(p.frame2);
          d["flow"] = from_flow(p.flow);
          d["valid"] = from_image(p.valid);
          d["tau1"] = from_image(p.render1.tau_map);
          d["tau2"] = from_image(p.render2.tau_map);
          return d;
        },
        py::arg("background"), py::arg("dx") = 0.0, py::arg("dy") = 0.0,
        py::arg("config") = std::map<std::string, std::string>{});

  m.def("endpoint_error",
        [](const Array& est, const Array& gt, int border) {
          const FlowStats s = endpoint_error(to_flow(est), to_flow(gt), Image(), border);
          py::dict d;
          d["avg_epe"] = s.avg_epe;
          d["avg_magnitude"] = s.avg_magnitude;
          d["max_magnitude"] = s.max_magnitude;
          d["valid_fraction"] = s.valid_fraction;
          return d;
        },
        py::arg("estimate"), py::arg("ground_truth"), py::arg("border") = kDefaultBorder);

  m.def("read_image", [](const std::string& p) { return from_image(read_image(p)); }, py::arg("path"));
  m.def("write_image",
        [](const Array& img, const std::string& p, int depth) { write_image(to_image(img), p, depth); },
        py::arg("image"), py::arg("path"), py::arg("bit_depth") = 8);
  m.def("read_flo", [](const std::string& p) { return from_flow(read_flo(p)); }, py::arg("path"));
  m.def("write_flo", [](const Array& f, const std::string& p) { write_flo(to_flow(f), p); },
        py::arg("flow"), py::arg("path"));
  m.def("flow_to_color",
        [](const Array& f, double max_mag) { return from_image(flow_to_color(to_flow(f), max_mag)); },
        py::arg("flow"), py::arg("max_magnitude") = 0.0);
}
