// rainflow command-line front end.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "rainflow/bench.hpp"
#include "rainflow/config.hpp"
#include "rainflow/decompose.hpp"
#include "rainflow/flowio.hpp"
#include "rainflow/parallel.hpp"
#include "rainflow/pipeline.hpp"
#include "rainflow/rainsim.hpp"
#include "rainflow/residue.hpp"

using namespace rainflow;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kNumerical = 3 };

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "key=value config file");
  cmd->add_option("--set", opts.overrides, "override one config key (key=value, repeatable)");
}

Config load_config(const CommonOptions& opts) {
  Config cfg;
  if (!opts.config_path.empty()) cfg = read_config(opts.config_path);
  for (const std::string& o : opts.overrides) apply_override(cfg, o);
  return cfg;
}

Image offset_for_display(const Image& layer) {
  Image out = layer;
  for (double& s : out.data()) s += 0.5;
  return out;
}

json energy_json(const EnergyReport& e) {
  return {{"data_intensity", e.data_intensity}, {"data_residue", e.data_residue},
          {"smoothness", e.smoothness},         {"fidelity1", e.fidelity1},
          {"fidelity2", e.fidelity2},           {"l0_1", e.l0_1},
          {"l0_2", e.l0_2},                     {"total", e.total}};
}

json rain_json(const Config& cfg) {
  json j = json::object();
  for (const ConfigKey& k : config_keys()) {
    if (k.name.rfind("rain.", 0) == 0) j[k.name.substr(5)] = get_config_value(cfg, k.name);
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string help_footer() {
  std::ostringstream out;
  out << "Config keys (set in a --config file or with --set key=value):\n";
  for (const ConfigKey& k : config_keys()) {
    out << "  " << k.name << " = " << k.default_value << "\n      " << k.description << "\n";
  }
  out << "\nExit codes: 0 success, 1 usage or invalid input, 2 I/O failure, 3 numerical failure.\n";
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rain-robust optical flow with residue channel and layer decomposition"};
  app.require_subcommand(1);
  app.footer(help_footer());
  int threads = 0;
  app.add_option("--threads", threads, "cap on worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  // estimate
  CommonOptions est_opts;
  std::string est_f1, est_f2, est_out, est_viz, est_layers, est_trace;
  bool est_no_residue = false, est_no_decomp = false;
  int est_iterations = -1;
  auto* est = app.add_subcommand("estimate", "estimate the flow from frame 1 to frame 2");
  est->add_option("frame1", est_f1, "first frame (PNG/PPM)")->required();
  est->add_option("frame2", est_f2, "second frame (PNG/PPM)")->required();
  est->add_option("out_flo", est_out, "output .flo file")->required();
  est->add_option("--viz", est_viz, "colour-coded flow PNG");
  est->add_option("--layers", est_layers, "prefix for J/L layer PNGs");
  est->add_option("--trace", est_trace, "energy trace JSON");
  est->add_flag("--no-residue", est_no_residue, "disable the residue data term");
  est->add_flag("--no-decomposition", est_no_decomp, "keep J = I");
  est->add_option("-M,--iterations", est_iterations, "outer iterations (pipeline.max_iterations)");
  add_common(est, est_opts);

  // render
  CommonOptions ren_opts;
  std::string ren_bg, ren_prefix, ren_synthetic;
  std::vector<double> ren_shift;
  std::uint64_t ren_bg_seed = 1;
  auto* ren = app.add_subcommand("render", "render a rainy frame pair with ground-truth flow");
  ren->add_option("out_prefix", ren_prefix, "writes <prefix>_1.png, _2.png, _gt.flo, _params.json")->required();
  ren->add_option("--background", ren_bg, "background image (RGB)");
  ren->add_option("--synthetic", ren_synthetic, "procedural background of size WIDTHxHEIGHT");
  ren->add_option("--background-seed", ren_bg_seed, "seed of the procedural background");
  ren->add_option("--shift", ren_shift, "translation of frame 2 in pixels: dx dy")->expected(2);
  add_common(ren, ren_opts);

  // eval
  CommonOptions eval_opts;
  std::string eval_manifest, eval_json, eval_table;
  std::vector<std::string> eval_methods;
  auto* ev = app.add_subcommand("eval", "run the pipeline and its ablations over a manifest");
  ev->add_option("manifest", eval_manifest, "lines of 'frame1 frame2 gt_flo label'")->required();
  ev->add_option("--json", eval_json, "report JSON output");
  ev->add_option("--table", eval_table, "text table output");
  ev->add_option("--methods", eval_methods, "subset of full, no-residue, no-decomposition, plain");
  add_common(ev, eval_opts);

  // decompose
  CommonOptions dec_opts;
  std::string dec_image, dec_prefix;
  double dec_beta = 0.0;
  auto* dec = app.add_subcommand("decompose", "split an image into piecewise-smooth and detail layers");
  dec->add_option("image", dec_image, "input image")->required();
  dec->add_option("beta", dec_beta, "gradient-count weight")->required()->check(CLI::NonNegativeNumber);
  dec->add_option("out_prefix", dec_prefix, "writes <prefix>_J.png and <prefix>_L.png")->required();
  add_common(dec, dec_opts);

  // residue
  CommonOptions res_opts;
  std::string res_image, res_prefix;
  auto* res = app.add_subcommand("residue", "write the residue channel and chroma weight map");
  res->add_option("image", res_image, "RGB input image")->required();
  res->add_option("out_prefix", res_prefix, "writes <prefix>_residue.png and <prefix>_weight.png")->required();
  add_common(res, res_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  set_thread_count(threads);

  try {
    if (est->parsed()) {
      Config cfg = load_config(est_opts);
      if (est_no_residue) cfg.solver.use_residue = false;
      if (est_no_decomp) cfg.solver.use_decomposition = false;
      if (est_iterations >= 0) cfg.solver.max_iterations = est_iterations;
      const Image f1 = read_image(est_f1);
      const Image f2 = read_image(est_f2);
      const PipelineResult r = estimate(f1, f2, cfg.solver);
      double avg = 0.0;
      for (std::size_t i = 0; i < r.flow.pixel_count(); ++i) avg += std::hypot(r.flow.u()[i], r.flow.v()[i]);
      avg /= static_cast<double>(r.flow.pixel_count());
      write_flo(r.flow, est_out);
      if (!est_viz.empty()) write_image(flow_to_color(r.flow), est_viz);
      if (!est_layers.empty()) {
        write_image(r.J1, est_layers + "_J1.png");
        write_image(r.J2, est_layers + "_J2.png");
        write_image(offset_for_display(r.L1), est_layers + "_L1.png");
        write_image(offset_for_display(r.L2), est_layers + "_L2.png");
      }
      if (!est_trace.empty()) {
        json trace = json::array();
        for (const EnergyReport& e : r.energy_trace) trace.push_back(energy_json(e));
        write_text(est_trace, json{{"iterations_run", r.iterations_run}, {"energy", trace}}.dump(2) + "\n");
      }
      std::printf("Average flow: %.6g px, Maximum flow: %.6g px (%d outer iterations)\n", avg,
                  r.flow.max_magnitude(), r.iterations_run);
    } else if (ren->parsed()) {
      const Config cfg = load_config(ren_opts);
      if (ren_bg.empty() == ren_synthetic.empty()) {
        throw CLI::ValidationError("render", "give exactly one of --background or --synthetic");
      }
      Image bg;
      if (!ren_synthetic.empty()) {
        int w = 0, h = 0;
        char tail = 0;
        if (std::sscanf(ren_synthetic.c_str(), "%dx%d%c", &w, &h, &tail) != 2 || w < 1 || h < 1) {
          throw CLI::ValidationError("--synthetic", "expected WIDTHxHEIGHT");
        }
        bg = make_background(w, h, ren_bg_seed);
      } else {
        bg = read_image(ren_bg);
      }
      const double dx = ren_shift.empty() ? 0.0 : ren_shift[0];
      const double dy = ren_shift.empty() ? 0.0 : ren_shift[1];
      const RainPair pair = make_translation_pair(bg, dx, dy, cfg.rain);
      FlowField gt = pair.flow;
      for (std::size_t i = 0; i < gt.pixel_count(); ++i) {
        if (pair.valid[i] == 0.0) gt.u()[i] = gt.v()[i] = 2.0 * kUnknownFlow;
      }
      write_image(pair.frame1, ren_prefix + "_1.png");
      write_image(pair.frame2, ren_prefix + "_2.png");
      write_flo(gt, ren_prefix + "_gt.flo");
      json side{{"rain", rain_json(cfg)}, {"shift", {dx, dy}}};
      write_text(ren_prefix + "_params.json", side.dump(2) + "\n");
    } else if (ev->parsed()) {
      const Config cfg = load_config(eval_opts);
      std::vector<Method> methods;
      for (const std::string& m : eval_methods) methods.push_back(method_from_string(m));
      if (methods.empty()) methods = all_methods();
      const SuiteReport report = run_suite(read_manifest(eval_manifest), cfg.solver, methods, cfg.bench_border);
      const std::string table = report_table(report);
      if (!eval_json.empty()) write_text(eval_json, report_json(report));
      if (!eval_table.empty()) write_text(eval_table, table);
      std::fputs(table.c_str(), stdout);
      if (report.failures > 0) std::fprintf(stderr, "%d manifest entries failed\n", report.failures);
    } else if (dec->parsed()) {
      const Config cfg = load_config(dec_opts);
      const Image img = read_image(dec_image);
      const Image J = l0_smooth(img, dec_beta, cfg.solver.l0);
      const Image L = detail_layer(img, J);
      write_image(J, dec_prefix + "_J.png");
      write_image(offset_for_display(L), dec_prefix + "_L.png");
      std::printf("Nonzero-gradient pixels: %zu of %zu\n", count_edges(J), J.pixel_count());
    } else if (res->parsed()) {
      const Config cfg = load_config(res_opts);
      const Image img = read_image(res_image);
      write_image(normalize_for_display(residue_channel(img)), res_prefix + "_residue.png");
      write_image(weight_map(img, cfg.solver.gamma), res_prefix + "_weight.png");
    }
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error (%s): %s\n", to_string(e.kind()).c_str(), e.what());
    return kIo;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "dimension error: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumerical;
  }
  return kOk;
}
