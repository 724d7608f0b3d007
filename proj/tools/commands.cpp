#include "commands.hpp"

#include <charconv>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include <pcf/downstream.hpp>
#include <pcf/homography.hpp>
#include <pcf/pcf_set.hpp>
#include <pcf/probmodel.hpp>

#include "io_util.hpp"
#include "settings.hpp"

namespace pcftool {

namespace {

using nlohmann::json;

/// Every command finished writing but produced nothing but fallbacks.
struct AllFallback : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& what, const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    double v = 0.0;
    const char* first = text.data() + start;
    const char* last = text.data() + end;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw UsageError(what + ": bad number list '" + text + "'");
    out.push_back(v);
    start = end + 1;
  }
  return out;
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw UsageError("--size: expected WxH, got '" + text + "'");
  int w = 0;
  int h = 0;
  const auto r1 = std::from_chars(text.data(), text.data() + x, w);
  const auto r2 = std::from_chars(text.data() + x + 1, text.data() + text.size(), h);
  if (r1.ec != std::errc() || r1.ptr != text.data() + x || r2.ec != std::errc() ||
      r2.ptr != text.data() + text.size() || w < 1 || h < 1) {
    throw UsageError("--size: expected WxH with positive integers, got '" + text + "'");
  }
  return {w, h};
}

pcf::HomographyMap parse_homography(const std::string& text) {
  if (text == "identity") return pcf::HomographyMap::identity();
  const auto v = parse_list("--homography", text);
  if (v.size() != 9) throw UsageError("--homography: expected 'identity' or 9 row-major numbers");
  Eigen::Matrix3d m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  try {
    return pcf::HomographyMap(m);
  } catch (const pcf::Error& e) {
    throw UsageError(std::string("--homography: ") + e.what());
  }
}

pcf::Bcs parse_bcs(const std::string& text) {
  const auto v = parse_list("--bcs", text);
  if (v.size() != 6) throw UsageError("--bcs: expected ax,ay,bx,by,cx,cy");
  pcf::Bcs b{{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}};
  if (pcf::is_degenerate(b)) throw UsageError("--bcs: triangle is degenerate");
  return b;
}

json point_json(pcf::Point2 p) { return json::array({p.x, p.y}); }

json bcs_json(const pcf::Bcs& b) {
  return json{{"a", point_json(b.a)}, {"b", point_json(b.b)}, {"c", point_json(b.c)}};
}

json settings_json(const Settings& s) {
  json out = json::object();
  for (const auto& key : s.keys()) out[key] = {{"value", s.raw(key)}, {"source", s.source(key)}};
  return out;
}

// Rejects out-of-range values up front so library errors stay for data.
template <typename F>
void checked(F&& f) {
  try {
    f();
  } catch (const pcf::Error& e) {
    if (e.code() == pcf::Errc::kInvalidArgument) throw UsageError(e.what());
    throw;
  }
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  Settings settings;
  std::string size = "128x128";
  std::string homography = "identity";
  std::vector<std::string> occluders;
  int corrupt_quadrant = -1;
  std::string corrupt_flow = "bwd";
  std::string out;
  std::string config;
};

void run_synth(SynthArgs& a) {
  a.settings.resolve(a.config, Settings::process_env);
  pcf::ScenarioSpec spec;
  std::tie(spec.width, spec.height) = parse_size(a.size);
  spec.homography = parse_homography(a.homography);
  for (const auto& o : a.occluders) {
    const auto v = parse_list("--occluder", o);
    if (v.size() != 4 || v[2] < 0 || v[3] < 0) throw UsageError("--occluder: expected x,y,w,h");
    spec.occluders.push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                              static_cast<int>(v[3])});
  }
  spec.noise_sigma = a.settings.real("noise");
  if (a.corrupt_quadrant > 3) throw UsageError("--corrupt-quadrant must be 0..3");
  if (a.corrupt_quadrant >= 0) spec.corrupt_quadrant = a.corrupt_quadrant;
  if (a.corrupt_flow != "fwd" && a.corrupt_flow != "bwd") throw UsageError("--corrupt-flow must be fwd or bwd");
  spec.corrupt_side = a.corrupt_flow == "fwd" ? pcf::CorruptSide::kForward : pcf::CorruptSide::kBackward;
  spec.corrupt_fraction = a.settings.real("corrupt_fraction");
  spec.corrupt_sigma = a.settings.real("corrupt_sigma");
  spec.patch_size = a.settings.integer("patch");
  spec.seed = a.settings.unsigned64("seed");
  if (spec.noise_sigma < 0 || spec.corrupt_sigma < 0 || spec.corrupt_fraction < 0 || spec.corrupt_fraction > 1 ||
      spec.patch_size < 1) {
    throw UsageError("synth: noise and corruption settings out of range");
  }

  pcf::SyntheticPair pair;
  checked([&] { pair = pcf::synth_flow_pair(spec); });
  const fs::path out = a.out;
  ensure_dir(out);
  try {
    pcf::write_flo(out / "fwd.flo", pair.forward);
    pcf::write_flo(out / "bwd.flo", pair.backward);
    pcf::write_mask_png(out / "gt_mask.png", pair.gt_clean);
  } catch (const pcf::Error& e) {
    throw IoFailure(e.what());
  }

  json occ = json::array();
  for (const auto& r : spec.occluders) occ.push_back({r.x, r.y, r.w, r.h});
  json manifest{
      {"width", spec.width},
      {"height", spec.height},
      {"homography", spec.homography.row_major()},
      {"occluders", occ},
      {"noise_sigma", spec.noise_sigma},
      {"corrupt_quadrant", a.corrupt_quadrant},
      {"corrupt_fraction", spec.corrupt_fraction},
      {"corrupt_sigma", spec.corrupt_sigma},
      {"corrupt_flow", a.corrupt_flow},
      {"patch", spec.patch_size},
      {"seed", spec.seed},
      {"valid_pixels", pcf::count_set(pair.forward.valid)},
      {"gt_clean_pixels", pcf::count_set(pair.gt_clean)},
      {"corrupted_pixels", pcf::count_set(pair.corrupted)},
      {"files", {{"forward", "fwd.flo"}, {"backward", "bwd.flo"}, {"gt_mask", "gt_mask.png"}}},
  };
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << out.string() << "\n";
}

// --- encode ----------------------------------------------------------------

struct EncodeArgs {
  std::string size;
  std::string bcs;
  std::string flow;
  std::string out;
  std::string png;
};

void run_encode(EncodeArgs& a) {
  const pcf::Bcs bcs = parse_bcs(a.bcs);
  if (pcf::is_degenerate(bcs)) throw UsageError("--bcs: the three vertices are collinear");
  pcf::CoordField field;
  if (!a.flow.empty()) {
    const auto flow = load_flow(a.flow);
    if (!a.size.empty() && parse_size(a.size) != std::pair{flow.width(), flow.height()}) {
      throw UsageError("--size does not match the flow dimensions");
    }
    field = pcf::warp_field(pcf::encode_field(flow.width(), flow.height(), bcs), flow);
  } else {
    if (a.size.empty()) throw UsageError("encode: --size is required without --flow");
    const auto [w, h] = parse_size(a.size);
    field = pcf::encode_field(w, h, bcs);
  }
  try {
    pcf::write_cfld(a.out, pcf::to_cfld(field));
  } catch (const pcf::Error& e) {
    throw IoFailure(e.what());
  }
  if (!a.png.empty()) {
    pcf::Grid<double> validity(field.valid.width(), field.valid.height());
    for (std::size_t k = 0; k < validity.size(); ++k) validity[k] = field.valid[k];
    write_coords_png(a.png, field, validity);
  }
}

// --- pcf -------------------------------------------------------------------

struct PcfArgs {
  Settings settings;
  std::string fwd;
  std::string bwd;
  std::string out;
  std::string config;
};

pcf::PcfSetConfig pcf_config(const Settings& s) {
  pcf::PcfSetConfig cfg;
  cfg.builder.k = s.integer("k");
  cfg.builder.max_reselect = s.integer("max_reselect");
  cfg.builder.probe_threshold = s.real("probe_threshold");
  cfg.builder.rng_seed = s.unsigned64("seed");
  cfg.gmm.delta_plus = s.real("delta_plus");
  cfg.gmm.delta_minus = s.real("delta_minus");
  cfg.gmm.margin = s.real("margin");
  cfg.gmm.radius = s.real("radius");
  cfg.optimizer.iterations = s.integer("iterations");
  cfg.optimizer.learning_rate = s.real("learning_rate");
  cfg.patch_size = s.integer("patch");
  cfg.max_systems = s.integer("max_systems");
  cfg.threshold = s.real("threshold");
  cfg.min_gain = s.real("min_gain");
  checked([&] { cfg.validate(); });
  if (cfg.optimizer.iterations < 0 || !(cfg.optimizer.learning_rate > 0.0)) {
    throw UsageError("iterations must be >= 0 and learning_rate > 0");
  }
  if (!(s.real("gamma") > 0.0)) throw UsageError("gamma must be positive");
  return cfg;
}

void run_pcf(PcfArgs& a) {
  a.settings.resolve(a.config, Settings::process_env);
  const auto cfg = pcf_config(a.settings);
  const double gamma = a.settings.real("gamma");
  const auto fwd = load_flow(a.fwd);
  const auto bwd = load_flow(a.bwd);
  if (fwd.width() != bwd.width() || fwd.height() != bwd.height()) {
    throw IoFailure("forward and backward flows differ in size");
  }
  const auto set = pcf::build_pcf_set(fwd, bwd, cfg);

  const fs::path out = a.out;
  ensure_dir(out);
  json entries = json::array();
  pcf::Mask acc(fwd.width(), fwd.height(), 0);
  const auto valid_pixels = static_cast<double>(pcf::count_set(fwd.valid));
  for (std::size_t n = 0; n < set.entries.size(); ++n) {
    const auto& e = set.entries[n];
    const fs::path dir = out / ("entry_" + std::to_string(n));
    ensure_dir(dir);
    pcf::CfldImage conf{static_cast<std::uint32_t>(fwd.width()), static_cast<std::uint32_t>(fwd.height()), 1, {}};
    for (const double m : e.pcf.confidence.m.values()) conf.data.push_back(static_cast<float>(m));
    try {
      pcf::write_cfld(dir / "coords.cfld", pcf::to_cfld(e.pcf.coords));
      pcf::write_cfld(dir / "conf.cfld", conf);
      if (!e.fallback()) {
        const auto& p = e.params;
        pcf::CfldImage gmm{static_cast<std::uint32_t>(p.cells.width()), static_cast<std::uint32_t>(p.cells.height()),
                           3, {}};
        for (const auto& c : p.cells.values()) {
          gmm.data.push_back(static_cast<float>(c.alpha_plus));
          gmm.data.push_back(static_cast<float>(c.sigma_plus_sq));
          gmm.data.push_back(static_cast<float>(c.sigma_minus_sq));
        }
        pcf::write_cfld(dir / "gmm.cfld", gmm);
      }
    } catch (const pcf::Error& err) {
      throw IoFailure(err.what());
    }
    write_unit_png(dir / "conf.png", e.pcf.confidence.m);
    const auto range = write_coords_png(dir / "coords.png", e.pcf.coords, e.pcf.confidence.m);

    json bcs = nullptr;
    if (e.bcs) {
      bcs = json{{"source", bcs_json(e.bcs->source)}, {"target", bcs_json(e.bcs->target)}};
      write_unit_png(dir / "distance.png", pcf::distance_map(fwd.width(), fwd.height(), e.bcs->target.a, gamma).values);
    }
    json origins = json::array();
    for (const auto& o : e.origins) origins.push_back(point_json(o));
    write_text(dir / "bcs.json", json{{"fallback", e.fallback()}, {"bcs", bcs}, {"origins", origins}}.dump(2) + "\n");

    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] = (acc[k] || e.reliable[k]) ? 1 : 0;
    std::size_t covered = 0;
    for (std::size_t k = 0; k < acc.size(); ++k) covered += (acc[k] && fwd.valid[k]) ? 1 : 0;
    entries.push_back({
        {"index", n},
        {"fallback", e.fallback()},
        {"builds", e.builds},
        {"mean_confidence", e.mean_confidence},
        {"reliable_pixels", pcf::count_set(e.reliable)},
        {"cumulative_coverage", valid_pixels > 0 ? covered / valid_pixels : 0.0},
        {"color_range", {{"lambda1", {range[0], range[1]}}, {"lambda2", {range[2], range[3]}}}},
    });
  }
  try {
    pcf::write_mask_png(out / "union.png", set.union_reliable);
  } catch (const pcf::Error& err) {
    throw IoFailure(err.what());
  }
  std::size_t covered = 0;
  for (std::size_t k = 0; k < acc.size(); ++k) covered += (set.union_reliable[k] && fwd.valid[k]) ? 1 : 0;
  const double coverage = valid_pixels > 0 ? covered / valid_pixels : 0.0;
  json report{
      {"entries", entries},
      {"coverage", coverage},
      {"union_pixels", pcf::count_set(set.union_reliable)},
      {"valid_pixels", pcf::count_set(fwd.valid)},
      {"all_fallback", set.all_fallback()},
      {"settings", settings_json(a.settings)},
      {"color_mapping", "R = lambda1, G = lambda2 affine from color_range to [0, 255]; B = 255 * confidence"},
  };
  write_text(out / "report.json", report.dump(2) + "\n");
  std::cout << "entries " << set.entries.size() << ", coverage " << num(coverage) << "\n";
  if (set.all_fallback()) throw AllFallback("every system fell back; confidence is zero everywhere");
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  Settings settings;
  std::string pcf_dir;
  std::string gt;
  std::string config;
};

void run_eval(EvalArgs& a) {
  a.settings.resolve(a.config, Settings::process_env);
  const double threshold = a.settings.real("threshold");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw UsageError("threshold must lie in [0, 1]");
  const auto gt = load_mask(a.gt);
  const fs::path dir = a.pcf_dir;
  if (!fs::is_directory(dir)) throw IoFailure("PCF directory not found: " + dir.string());

  pcf::Mask acc(gt.width(), gt.height(), 0);
  std::cout << "systems,iou\n";
  for (int n = 0;; ++n) {
    const fs::path conf_path = dir / ("entry_" + std::to_string(n)) / "conf.cfld";
    if (!fs::exists(conf_path)) {
      if (n == 0) throw IoFailure("no entries under " + dir.string());
      break;
    }
    const auto conf = load_cfld(conf_path);
    if (conf.channels != 1 || static_cast<int>(conf.width) != gt.width() ||
        static_cast<int>(conf.height) != gt.height()) {
      throw IoFailure(conf_path.string() + ": shape does not match the ground-truth mask");
    }
    for (std::size_t k = 0; k < acc.size(); ++k) {
      if (conf.data[k] >= threshold) acc[k] = 1;
    }
    std::cout << n + 1 << "," << num(pcf::coverage_iou(acc, gt)) << "\n";
  }
}

// --- multihomog ------------------------------------------------------------

struct MultiArgs {
  Settings settings;
  std::string corrs;
  std::string flow;
  std::string mask;
  std::string out;
  std::string config;
};

void run_multihomog(MultiArgs& a) {
  a.settings.resolve(a.config, Settings::process_env);
  if (a.corrs.empty() == a.flow.empty()) throw UsageError("multihomog: give exactly one of --corrs and --flow");
  pcf::MultiHomogConfig cfg;
  cfg.eps_global = a.settings.real("eps_global");
  cfg.eps_local = a.settings.real("eps_local");
  const int eta = a.settings.integer("eta");
  if (eta < 4) throw UsageError("eta must be at least 4");
  cfg.min_inliers = static_cast<std::size_t>(eta);
  cfg.max_models = a.settings.integer("max_models");
  cfg.ransac_iters = a.settings.integer("ransac_iters");
  cfg.rng_seed = a.settings.unsigned64("seed");
  const int stride = a.settings.integer("stride");
  if (stride < 1) throw UsageError("stride must be positive");
  checked([&] { cfg.validate(); });

  std::vector<pcf::Correspondence> corr;
  std::optional<pcf::FlowField> flow;
  if (!a.corrs.empty()) {
    const auto table = load_csv(a.corrs, {"xs", "ys", "xt", "yt"}, {"ms", "mt"});
    for (const auto& r : table.rows) corr.push_back({{r[0], r[1]}, {r[2], r[3]}});
  } else {
    flow = load_flow(a.flow);
    pcf::Mask mask;
    if (!a.mask.empty()) {
      mask = load_mask(a.mask);
      if (!mask.same_shape(flow->valid)) throw IoFailure(a.mask + ": mask does not match the flow size");
    }
    corr = pcf::flow_correspondences(*flow, stride, mask);
  }

  pcf::MultiHomogResult result;
  result.labels.assign(corr.size(), 0);
  if (corr.size() >= cfg.min_inliers) result = pcf::multi_homography_classify(corr, cfg);

  const fs::path out = a.out;
  ensure_dir(out);
  std::string labels = "index,label\n";
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    labels += std::to_string(i) + "," + std::to_string(result.labels[i]) + "\n";
  }
  write_text(out / "labels.csv", labels);
  json models = json::array();
  for (std::size_t t = 0; t < result.models.size(); ++t) {
    const auto inliers = std::count(result.labels.begin(), result.labels.end(), static_cast<int>(t) + 1);
    models.push_back({{"id", t + 1}, {"h", result.models[t].row_major()}, {"inliers", inliers}});
  }
  write_text(out / "homographies.json", json{{"models", models}}.dump(2) + "\n");
  if (flow) write_labels_png(out / "labels.png", pcf::label_flow(*flow, result, cfg));
  std::cout << "models " << result.models.size() << "\n";
}

// --- flags -----------------------------------------------------------------

struct FlagsArgs {
  std::vector<std::string> inputs;
  std::string out;
  bool raw = false;
};

void run_flags(FlagsArgs& a) {
  if (a.inputs.empty() || a.inputs.size() > 2) throw UsageError("flags: give one or two --in files");
  std::vector<std::vector<double>> taus;
  pcf::SparseCoords first_s;
  pcf::SparseCoords first_t;
  for (const auto& path : a.inputs) {
    const auto table = load_csv(path, {"l1s", "l2s", "l1t", "l2t", "ms", "mt"});
    pcf::SparseCoords xs;
    pcf::SparseCoords xt;
    for (const auto& r : table.rows) {
      xs.points.push_back({r[0], r[1]});
      xt.points.push_back({r[2], r[3]});
      xs.conf.push_back(r[4]);
      xt.conf.push_back(r[5]);
    }
    if (!a.raw) {
      // One normalization over both sides keeps h comparable between them.
      std::vector<pcf::Point2> joint = xs.points;
      joint.insert(joint.end(), xt.points.begin(), xt.points.end());
      try {
        pcf::zero_score_normalize(joint);
      } catch (const pcf::Error& e) {
        throw IoFailure(path + ": " + e.what());
      }
      std::copy(joint.begin(), joint.begin() + static_cast<std::ptrdiff_t>(xs.points.size()), xs.points.begin());
      std::copy(joint.begin() + static_cast<std::ptrdiff_t>(xs.points.size()), joint.end(), xt.points.begin());
    }
    try {
      taus.push_back(pcf::filter_flags(xs, xt));
    } catch (const pcf::Error& e) {
      throw IoFailure(path + ": " + e.what());
    }
    if (taus.size() == 1) {
      first_s = xs;
      first_t = xt;
    }
  }
  std::vector<pcf::FilterInput> rows;
  try {
    rows = pcf::assemble_filter_input(first_s, first_t, taus);
  } catch (const pcf::Error& e) {
    throw IoFailure(std::string("flag inputs: ") + e.what());
  }
  std::string text = "index,x1s,x2s,x1t,x2t,tau1,tau2\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    text += std::to_string(i);
    for (const double v : rows[i]) text += "," + num(v);
    text += "\n";
  }
  write_text(a.out, text);
}

void add_config_option(CLI::App& app, std::string& config) {
  app.add_option("--config", config, "key = value settings file (flags and PCF_* env vars take precedence)");
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Probabilistic coordinate fields from dense flow"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic homography flow pair");
  synth.settings.add("seed", "0", "RNG seed");
  synth.settings.add("noise", "0", "Gaussian flow noise sigma, pixels");
  synth.settings.add("corrupt_fraction", "0.5", "fraction of patches corrupted in the chosen quadrant");
  synth.settings.add("corrupt_sigma", "8", "corruption noise sigma, pixels");
  synth.settings.add("patch", "8", "corruption patch size");
  synth.settings.bind(*synth_cmd);
  synth_cmd->add_option("--size", synth.size, "WxH")->capture_default_str();
  synth_cmd->add_option("--homography", synth.homography, "'identity' or 9 row-major numbers, source to target")
      ->capture_default_str();
  synth_cmd->add_option("--occluder", synth.occluders, "x,y,w,h target-frame rectangle (repeatable)");
  synth_cmd->add_option("--corrupt-quadrant", synth.corrupt_quadrant, "0..3 = TL, TR, BL, BR; -1 for none")
      ->capture_default_str();
  synth_cmd->add_option("--corrupt-flow", synth.corrupt_flow, "flow receiving the corruption: fwd or bwd")
      ->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  add_config_option(*synth_cmd, synth.config);

  EncodeArgs encode;
  auto* encode_cmd = app.add_subcommand("encode", "Encode a barycentric coordinate field");
  encode_cmd->add_option("--bcs", encode.bcs, "ax,ay,bx,by,cx,cy")->required();
  encode_cmd->add_option("--size", encode.size, "WxH");
  encode_cmd->add_option("--flow", encode.flow, "warp the field through this .flo");
  encode_cmd->add_option("--out", encode.out, "output .cfld")->required();
  encode_cmd->add_option("--png", encode.png, "optional color visualization");

  PcfArgs pcfa;
  auto* pcf_cmd = app.add_subcommand("pcf", "Build probabilistic coordinate fields from a flow pair");
  pcfa.settings.add("k", "9", "pooling kernel (odd)");
  pcfa.settings.add("max_reselect", "5", "origin re-selections before falling back");
  pcfa.settings.add("probe_threshold", "0.2", "mean confidence below which a system is rejected");
  pcfa.settings.add("seed", "0", "RNG seed");
  pcfa.settings.add("gamma", "0.03", "distance-map gamma");
  pcfa.settings.add("radius", "1", "confidence radius R");
  pcfa.settings.add("delta_plus", "1", "reliable variance bound");
  pcfa.settings.add("delta_minus", "11", "erroneous variance bound");
  pcfa.settings.add("margin", "2", "variance margin");
  pcfa.settings.add("threshold", "0.5", "binarization threshold");
  pcfa.settings.add("patch", "8", "fitting patch size");
  pcfa.settings.add("max_systems", "2", "maximum coordinate systems");
  pcfa.settings.add("min_gain", "0.01", "stop when a system adds less than this fraction of pixels");
  pcfa.settings.add("iterations", "500", "optimizer iterations per patch");
  pcfa.settings.add("learning_rate", "0.05", "optimizer step size");
  pcfa.settings.bind(*pcf_cmd);
  pcf_cmd->add_option("--fwd", pcfa.fwd, "target-to-source flow (.flo)")->required();
  pcf_cmd->add_option("--bwd", pcfa.bwd, "source-to-target flow (.flo)")->required();
  pcf_cmd->add_option("--out", pcfa.out, "output directory")->required();
  add_config_option(*pcf_cmd, pcfa.config);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Cumulative IoU of a PCF directory against a mask");
  eval.settings.add("threshold", "0.5", "binarization threshold");
  eval.settings.bind(*eval_cmd);
  eval_cmd->add_option("--pcf", eval.pcf_dir, "directory written by 'pcf'")->required();
  eval_cmd->add_option("--gt", eval.gt, "ground-truth mask PNG")->required();
  add_config_option(*eval_cmd, eval.config);

  MultiArgs multi;
  auto* multi_cmd = app.add_subcommand("multihomog", "Split correspondences into homography groups");
  multi.settings.add("eps_global", "8", "first-round inlier threshold, pixels");
  multi.settings.add("eps_local", "3", "later-round inlier threshold, pixels");
  multi.settings.add("eta", "30", "minimum inliers per model");
  multi.settings.add("max_models", "5", "maximum models");
  multi.settings.add("ransac_iters", "1000", "RANSAC iterations per round");
  multi.settings.add("seed", "0", "RNG seed");
  multi.settings.add("stride", "4", "pixel stride for dense flow input");
  multi.settings.bind(*multi_cmd);
  multi_cmd->add_option("--corrs", multi.corrs, "CSV xs,ys,xt,yt[,ms,mt]");
  multi_cmd->add_option("--flow", multi.flow, "dense target-to-source flow (.flo)");
  multi_cmd->add_option("--mask", multi.mask, "restrict dense input to this mask PNG");
  multi_cmd->add_option("--out", multi.out, "output directory")->required();
  add_config_option(*multi_cmd, multi.config);

  FlagsArgs flags;
  auto* flags_cmd = app.add_subcommand("flags", "Export consistency flags for a filter network");
  flags_cmd->add_option("--in", flags.inputs, "CSV l1s,l2s,l1t,l2t,ms,mt, one per coordinate system")->required();
  flags_cmd->add_option("--out", flags.out, "output CSV")->required();
  flags_cmd->add_flag("--raw", flags.raw, "skip zero-score normalization");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) run_synth(synth);
    if (*encode_cmd) run_encode(encode);
    if (*pcf_cmd) run_pcf(pcfa);
    if (*eval_cmd) run_eval(eval);
    if (*multi_cmd) run_multihomog(multi);
    if (*flags_cmd) run_flags(flags);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const AllFallback& e) {
    std::cerr << "fallback: " << e.what() << "\n";
    return kExitFallback;
  } catch (const pcf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case pcf::Errc::kIo:
      case pcf::Errc::kBadMagic:
      case pcf::Errc::kTruncatedFile:
        return kExitIo;
      case pcf::Errc::kInvalidArgument:
        return kExitUsage;
      default:
        return kExitFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace pcftool
