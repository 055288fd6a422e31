#include "rainflow/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rainflow/flowio.hpp"

namespace rainflow {

FlowStats endpoint_error(const FlowField& est, const FlowField& gt, const Image& valid, int border) {
  if (!est.same_size(gt)) throw DimensionError("endpoint_error: flow sizes differ");
  if (!valid.empty() && (!gt.same_size(valid) || valid.channels() != 1)) {
    throw DimensionError("endpoint_error: mask must be single-channel and match the flow");
  }
  if (border < 0) throw std::invalid_argument("endpoint_error: border must be >= 0");
  const int w = est.width(), h = est.height();
  double epe = 0.0, mag = 0.0, max_mag = 0.0;
  std::size_t count = 0;
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!valid.empty() && valid[i] == 0.0) continue;
      const double gu = gt.u()[i], gv = gt.v()[i];
      if (std::abs(gu) > kUnknownFlow || std::abs(gv) > kUnknownFlow) continue;
      const double eu = est.u()[i], ev = est.v()[i];
      epe += std::hypot(eu - gu, ev - gv);
      const double m = std::hypot(eu, ev);
      mag += m;
      max_mag = std::max(max_mag, m);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("endpoint_error: no valid pixels to evaluate");
  FlowStats s;
  s.avg_epe = epe / count;
  s.avg_magnitude = mag / count;
  s.max_magnitude = max_mag;
  s.valid_fraction = static_cast<double>(count) / est.pixel_count();
  return s;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::full: return "full";
    case Method::no_residue: return "no-residue";
    case Method::no_decomposition: return "no-decomposition";
    case Method::plain: return "plain";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : all_methods()) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected full, no-residue, no-decomposition or plain)");
}

std::vector<Method> all_methods() {
  return {Method::full, Method::no_residue, Method::no_decomposition, Method::plain};
}

SolverParams with_method(SolverParams params, Method m) {
  params.use_residue = m == Method::full || m == Method::no_decomposition;
  params.use_decomposition = m == Method::full || m == Method::no_residue;
  return params;
}

std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& base_dir) {
  std::vector<ManifestEntry> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    if (path.is_absolute() || base_dir.empty()) return p;
    return (std::filesystem::path(base_dir) / path).string();
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() != 4) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) +
                                  ": expected 'frame1 frame2 gt_flo label'");
    }
    out.push_back({resolve(tok[0]), resolve(tok[1]), resolve(tok[2]), tok[3]});
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  const auto bytes = read_file(path);
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_manifest(std::string(bytes.begin(), bytes.end()), dir);
}

std::vector<MethodSummary> summarize(const std::vector<EntryResult>& entries,
                                     const std::vector<Method>& methods) {
  std::vector<MethodSummary> out;
  for (Method m : methods) {
    MethodSummary s;
    s.method = m;
    for (const EntryResult& e : entries) {
      if (!e.ok) continue;
      for (const MethodResult& r : e.methods) {
        if (r.method != m) continue;
        s.mean_epe += r.stats.avg_epe;
        s.mean_magnitude += r.stats.avg_magnitude;
        ++s.pairs;
      }
    }
    if (s.pairs > 0) {
      s.mean_epe /= s.pairs;
      s.mean_magnitude /= s.pairs;
    }
    out.push_back(s);
  }
  return out;
}

SuiteReport run_suite(const std::vector<ManifestEntry>& manifest, const SolverParams& params,
                      const std::vector<Method>& methods, int border) {
  params.validate();
  SuiteReport report;
  for (const ManifestEntry& entry : manifest) {
    EntryResult res;
    res.entry = entry;
    try {
      const Image f1 = read_image(entry.frame1);
      const Image f2 = read_image(entry.frame2);
      const FlowField gt = read_flo(entry.ground_truth);
      if (!gt.same_size(f1)) throw DimensionError("ground truth size differs from the frames");
      for (Method m : methods) {
        const PipelineResult pr = estimate(f1, f2, with_method(params, m));
        res.methods.push_back({m, endpoint_error(pr.flow, gt, Image(), border), pr.iterations_run});
      }
      res.ok = true;
    } catch (const std::exception& e) {
      res.ok = false;
      res.error = e.what();
      res.methods.clear();
      ++report.failures;
    }
    report.entries.push_back(std::move(res));
  }
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const EntryResult& a, const EntryResult& b) { return a.entry.label < b.entry.label; });
  report.summary = summarize(report.entries, methods);
  return report;
}

std::string report_json(const SuiteReport& report) {
  using nlohmann::json;
  json j;
  j["entries"] = json::array();
  for (const EntryResult& e : report.entries) {
    json je{{"label", e.entry.label},
            {"frame1", e.entry.frame1},
            {"frame2", e.entry.frame2},
            {"ground_truth", e.entry.ground_truth},
            {"ok", e.ok}};
    if (!e.ok) je["error"] = e.error;
    je["methods"] = json::object();
    for (const MethodResult& r : e.methods) {
      je["methods"][to_string(r.method)] = {{"avg_epe", r.stats.avg_epe},
                                            {"avg_magnitude", r.stats.avg_magnitude},
                                            {"max_magnitude", r.stats.max_magnitude},
                                            {"valid_fraction", r.stats.valid_fraction},
                                            {"iterations", r.iterations}};
    }
    j["entries"].push_back(je);
  }
  j["summary"] = json::object();
  for (const MethodSummary& s : report.summary) {
    j["summary"][to_string(s.method)] = {
        {"pairs", s.pairs}, {"mean_epe", s.mean_epe}, {"mean_magnitude", s.mean_magnitude}};
  }
  j["failures"] = report.failures;
  return j.dump(2) + "\n";
}

std::string report_table(const SuiteReport& report) {
  std::vector<Method> methods;
  for (const MethodSummary& s : report.summary) methods.push_back(s.method);
  std::size_t label_w = 5;
  for (const EntryResult& e : report.entries) label_w = std::max(label_w, e.entry.label.size());

  std::string out;
  char buf[64];
  auto cell = [&](const std::string& s, std::size_t width) {
    out += s;
    out.append(width > s.size() ? width - s.size() : 1, ' ');
  };
  constexpr std::size_t col = 20;
  cell("label", label_w + 2);
  for (Method m : methods) cell(to_string(m), col);
  out += "\n";
  for (const EntryResult& e : report.entries) {
    cell(e.entry.label, label_w + 2);
    if (!e.ok) {
      out += "FAILED: " + e.error + "\n";
      continue;
    }
    for (Method m : methods) {
      std::string v = "-";
      for (const MethodResult& r : e.methods) {
        if (r.method == m) {
          std::snprintf(buf, sizeof buf, "%.4f (%.4f)", r.stats.avg_epe, r.stats.avg_magnitude);
          v = buf;
        }
      }
      cell(v, col);
    }
    out += "\n";
  }
  cell("mean", label_w + 2);
  for (const MethodSummary& s : report.summary) {
    std::snprintf(buf, sizeof buf, "%.4f (%.4f)", s.mean_epe, s.mean_magnitude);
    cell(s.pairs > 0 ? buf : "-", col);
  }
  out += "\n";
  out += "cells: average EPE (average estimated magnitude), pixels\n";
  return out;
}

}  // namespace rainflow
