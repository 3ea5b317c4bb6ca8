#include "impact/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "impact/compare.hpp"
#include "impact/estimators.hpp"
#include "impact/hdim.hpp"
#include "impact/io.hpp"
#include "impact/simengine.hpp"
#include "impact/tim.hpp"

namespace impact {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 11> kStageNames = {
    "generate",      "classify",     "validate", "estimate", "calibrate-tim", "calibrate-hdim",
    "refine-scale",  "predict-d",    "simulate", "compare",  "roundtrip"};

namespace artifact {
constexpr const char* kEvents = "events.csv";
constexpr const char* kStats = "stats.csv";
constexpr const char* kCurves = "curves.csv";
constexpr const char* kTim = "tim_kernels.csv";
constexpr const char* kKappa = "kappa.csv";
constexpr const char* kDeltaGStar = "dgstar.csv";
constexpr const char* kDiffusion = "diffusion.csv";
constexpr const char* kPathTim = "path_tim.csv";
constexpr const char* kPathHdim = "path_hdim.csv";
constexpr const char* kSimTim = "diffusion_sim_tim.csv";
constexpr const char* kSimHdim = "diffusion_sim_hdim.csv";
constexpr const char* kCompare = "compare.json";
constexpr const char* kRoundtrip = "roundtrip.json";
}  // namespace artifact

std::string manifest_name(Stage stage) { return std::string(to_string(stage)) + ".manifest.json"; }

class Context {
 public:
  explicit Context(const RunConfig& config) : config_(config) { fs::create_directories(config.out_dir); }

  [[nodiscard]] const RunConfig& config() const { return config_; }
  [[nodiscard]] fs::path out(const std::string& name) const { return config_.out_dir / name; }

  /// Opens an artifact produced by an earlier stage.
  std::ifstream open(const fs::path& path, Stage needed_by, std::string_view producer) {
    std::ifstream in(path);
    if (!in) {
      std::ostringstream os;
      os << "stage '" << to_string(needed_by) << "' needs artifact " << path.string() << " (run '" << producer
         << "' first)";
      throw DependencyError(os.str());
    }
    inputs_[path.filename().string()] = file_digest(path);
    return in;
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path path = out(name);
    {
      std::ofstream os(path);
      if (!os) throw Error("cannot write " + path.string());
      body(os);
      if (!os) throw Error("write failed for " + path.string());
    }
    outputs_[name] = file_digest(path);
  }

  void write_manifest(Stage stage, const json& details, bool ok) {
    json m;
    m["stage"] = to_string(stage);
    m["ok"] = ok;
    m["config"] = config_.entries();
    m["config_digest"] = config_digest(config_);
    m["seed"] = config_.seed;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["details"] = details;
    std::ofstream os(out(manifest_name(stage)));
    os << m.dump(2) << '\n';
    inputs_.clear();
    outputs_.clear();
  }

  json read_manifest(Stage stage, Stage needed_by) {
    auto in = open(out(manifest_name(stage)), needed_by, to_string(stage));
    return json::parse(in);
  }

 private:
  RunConfig config_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

EventStream trim_sessions(const EventStream& stream, std::size_t head, std::size_t tail) {
  if (head == 0 && tail == 0) return stream;
  EventStream out;
  out.instrument = stream.instrument;
  out.tick_size = stream.tick_size;
  for (const auto& s : stream.sessions) {
    if (s.size() <= head + tail) continue;
    Session kept;
    kept.id = s.id;
    for (std::size_t k = head; k < s.size() - tail; ++k) kept.push_back(s.event(k));
    kept.close_mid = s.price(s.size() - tail);
    out.sessions.push_back(std::move(kept));
  }
  if (out.sessions.empty()) throw Error("session trimming removed every event");
  return out;
}

EventStream load_events(Context& ctx, Stage stage) {
  const auto& cfg = ctx.config();
  const fs::path path = cfg.input.empty() ? ctx.out(artifact::kEvents) : cfg.input;
  auto in = ctx.open(path, stage, "generate' or 'classify");
  EventStream stream = read_events_csv(in, cfg.tick_size);
  if (!cfg.instrument.empty() && stream.instrument != cfg.instrument) {
    throw Error("event file instrument '" + stream.instrument + "' differs from configured '" + cfg.instrument + "'");
  }
  return trim_sessions(stream, cfg.trim_head, cfg.trim_tail);
}

LagGrid calibration_grid(const RunConfig& cfg) {
  LagGrid g;
  g.ell_max = cfg.ell_max;
  return g;
}

EventStats load_stats(Context& ctx, Stage stage) {
  auto in = ctx.open(ctx.out(artifact::kStats), stage, "estimate");
  return read_stats_csv(in);
}

CurveBundle load_curves(Context& ctx, Stage stage, const EventStats& stats) {
  auto in = ctx.open(ctx.out(artifact::kCurves), stage, "estimate");
  return read_curves_csv(in, stats);
}

TimKernels load_tim(Context& ctx, Stage stage) {
  auto in = ctx.open(ctx.out(artifact::kTim), stage, "calibrate-tim");
  return read_tim_kernels_csv(in);
}

HdimKernels load_hdim(Context& ctx, Stage stage, bool refined) {
  const json m = ctx.read_manifest(Stage::CalibrateHdim, stage);
  std::array<double, kNumPriceChanging> gaps{};
  for (EventType p : kPriceChanging) gaps[pc_index(p)] = m.at("details").at("delta_R").at(std::string(to_string(p)));
  double scale = 1.0;
  if (refined && fs::exists(ctx.out(manifest_name(Stage::RefineScale)))) {
    scale = ctx.read_manifest(Stage::RefineScale, stage).at("details").at("scale").get<double>();
  }
  auto in = ctx.open(ctx.out(artifact::kKappa), stage, "calibrate-hdim");
  return read_kappa_csv(in, gaps, scale);
}

NoiseModel noise_of(const RunConfig& cfg) {
  NoiseModel n;
  n.D0 = cfg.D0;
  n.D_hf = cfg.D_hf;
  n.price_changing_only = cfg.noise_price_changing_only;
  return n;
}

CalibrationOptions calibration_options(const RunConfig& cfg) {
  CalibrationOptions o;
  o.solver.ridge = cfg.ridge;
  o.solver.max_condition = cfg.max_condition;
  o.allow_absent_types = cfg.allow_absent_types;
  return o;
}

json probabilities(const EventStats& stats) {
  json j;
  for (EventType t : kAllTypes) j[std::string(to_string(t))] = stats.prob(t);
  return j;
}

std::array<double, kNumTypes> parse_type_probs(const std::string& text) {
  std::array<double, kNumTypes> out{};
  std::size_t k = 0;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (k == kNumTypes) throw Error("gen_type_probs needs six entries");
    out[k++] = parse_double(item);
  }
  if (k != kNumTypes) throw Error("gen_type_probs needs six entries");
  return out;
}

// ---- stages ----

bool stage_generate(Context& ctx, json& d) {
  const auto& cfg = ctx.config();
  SyntheticConfig sc;
  sc.instrument = cfg.instrument.empty() ? "SYNTH" : cfg.instrument;
  sc.n_events = cfg.gen_events;
  sc.n_sessions = cfg.gen_sessions;
  sc.type_probs = parse_type_probs(cfg.gen_type_probs);
  const auto law = parse_sign_law(cfg.gen_sign_law);
  if (!law) throw Error("unknown sign law '" + cfg.gen_sign_law + "'");
  sc.sign_law = *law;
  sc.gamma = cfg.gen_gamma;
  sc.sign_rho = cfg.gen_rho;
  sc.gap.fill(cfg.gen_gap);
  sc.seed = cfg.seed;
  const auto result = generate_synthetic(sc);
  ctx.write(artifact::kEvents, [&](std::ostream& os) { write_events_csv(os, result.stream); });
  d["events"] = result.stream.total_events();
  d["sessions"] = result.stream.sessions.size();
  d["floor_rate"] = result.floor_rate();
  return !result.flooring_flagged();
}

bool stage_classify(Context& ctx, json& d) {
  const auto& cfg = ctx.config();
  if (cfg.book_input.empty()) throw DependencyError("stage 'classify' needs book_input (a book update CSV)");
  auto in = ctx.open(cfg.book_input, Stage::Classify, "an upstream feed export");
  const BookFeed feed = read_book_updates_csv(in);
  const EventStream stream = classify_feed(cfg.instrument.empty() ? feed.instrument : cfg.instrument, feed.updates);
  ctx.write(artifact::kEvents, [&](std::ostream& os) { write_events_csv(os, stream); });
  d["updates"] = feed.updates.size();
  d["events"] = stream.total_events();
  return true;
}

bool stage_validate(Context& ctx, json& d) {
  const EventStream stream = load_events(ctx, Stage::Validate);
  const auto report = validate(stream, ctx.config().validation_tolerance);
  d["events"] = stream.total_events();
  d["violations"] = json::array();
  for (const auto& v : report.violations) {
    d["violations"].push_back({{"session", v.session_id}, {"t", v.t}, {"message", v.message}});
  }
  return report.ok();
}

bool stage_estimate(Context& ctx, json& d) {
  const auto& cfg = ctx.config();
  const EventStream stream = load_events(ctx, Stage::Estimate);
  const auto report = validate(stream, cfg.validation_tolerance);
  if (!report.ok()) {
    d["violations"] = report.violations.size();
    d["first_violation"] = report.violations.front().message;
    return false;
  }
  const LagGrid grid = calibration_grid(cfg);
  const EventStats stats = estimate_stats(stream);
  const std::size_t shortest = stream.shortest_session();
  const std::size_t corr_lag = std::min(cfg.ell_max + cfg.diffusion_lags(), shortest - 1);
  const CorrelationSet C = estimate_correlations(stream, stats, grid, corr_lag);
  const ResponseSet R = estimate_R(stream, grid);
  const ReturnResponseSet S = estimate_S(stream, grid);
  const PairCurves backward = estimate_C_backward(stream, stats, cfg.ell_max);
  const auto identities = check_identities(R, S, &C, &backward);

  ctx.write(artifact::kStats, [&](std::ostream& os) { write_stats_csv(os, stats); });
  ctx.write(artifact::kCurves, [&](std::ostream& os) { write_curves_csv(os, C, R, S); });
  d["events"] = stats.total;
  d["sessions"] = stream.sessions.size();
  d["P"] = probabilities(stats);
  d["correlation_max_lag"] = corr_lag;
  d["identity_residual"] = identities.max_violation;
  d["transpose_residual"] = identities.transpose_violation.value_or(0.0);
  d["neutral_S_max"] = identities.neutral_S_max;
  return identities.passes(cfg.identity_tolerance);
}

bool stage_calibrate_tim(Context& ctx, json& d) {
  const auto& cfg = ctx.config();
  if (cfg.theta != 0.0) {
    throw Error("theta != 0 needs order volumes, which classified event files do not carry");
  }
  const EventStats stats = load_stats(ctx, Stage::CalibrateTim);
  const CurveBundle curves = load_curves(ctx, Stage::CalibrateTim, stats);
  const TimKernels k = calibrate_tim(curves.C, curves.R, stats, calibration_grid(cfg), calibration_options(cfg));
  const ResponseSet fitted = predict_R_tim(k, curves.C, stats);
  ctx.write(artifact::kTim, [&](std::ostream& os) { write_tim_kernels_csv(os, k); });
  d["condition"] = k.condition;
  d["forward_residual"] = compare_curves(fitted, curves.R).max_abs;
  return true;
}

bool stage_calibrate_hdim(Context& ctx, json& d) {
  const auto& cfg = ctx.config();
  const EventStats stats = load_stats(ctx, Stage::CalibrateHdim);
  const CurveBundle curves = load_curves(ctx, Stage::CalibrateHdim, stats);
  const HdimKernels k = calibrate_hdim(curves.C, curves.S, stats, calibration_grid(cfg), calibration_options(cfg));
  ctx.write(artifact::kKappa, [&](std::ostream& os) { write_kappa_csv(os, k); });
  ctx.write(artifact::kDeltaGStar, [&](std::ostream& os) { write_delta_g_star_csv(os, delta_g_star(k, stats)); });
  d["condition"] = k.condition;
  d["scale"] = k.scale;
  for (EventType p : kPriceChanging) d["delta_R"][std::string(to_string(p))] = k.delta_R[pc_index(p)];
  return true;
}

bool stage_refine(Context& ctx, json& d) {
  const auto& cfg = ctx.config();
  const EventStats stats = load_stats(ctx, Stage::RefineScale);
  const CurveBundle curves = load_curves(ctx, Stage::RefineScale, stats);
  const HdimKernels k = load_hdim(ctx, Stage::RefineScale, false);
  const EventStream stream = load_events(ctx, Stage::RefineScale);
  RefineOptions opt;
  opt.lower = cfg.scale_lower;
  opt.upper = cfg.scale_upper;
  opt.tolerance = cfg.scale_tolerance;
  const auto r = refine_scale(k, stream, curves.R, opt);
  d["scale"] = r.kernels.scale;
  d["objective"] = r.objective;
  d["unrefined_objective"] = r.unrefined_objective;
  d["evaluations"] = r.evaluations;
  d["hit_bound"] = r.hit_bound;
  d["non_identifiable"] = r.non_identifiable;
  return true;
}

bool stage_predict(Context& ctx, json& d) {
  const auto& cfg = ctx.config();
  const EventStats stats = load_stats(ctx, Stage::PredictD);
  const CurveBundle curves = load_curves(ctx, Stage::PredictD, stats);
  const TimKernels tim = load_tim(ctx, Stage::PredictD);
  const HdimKernels hdim = load_hdim(ctx, Stage::PredictD, true);
  const NoiseModel noise = noise_of(cfg);
  const std::size_t lags = cfg.diffusion_lags();
  const std::vector<DiffusionCurve> out = {predict_D_tim(tim, curves.C, stats, noise, lags),
                                           predict_D_hdim(hdim, curves.C, stats, noise, lags),
                                           constant_gap_curve(stats, curves.C, noise, lags)};
  ctx.write(artifact::kDiffusion, [&](std::ostream& os) { write_diffusion_csv(os, out); });
  d["lags"] = lags;
  d["hdim_scale"] = hdim.scale;
  bool ok = true;
  for (const auto& c : out) {
    for (std::size_t l = 1; l <= c.ell_max(); ++l) ok = ok && c.at(l) >= 0.0;
  }
  d["nonnegative"] = ok;
  return ok;
}

bool stage_simulate(Context& ctx, json& d) {
  const auto& cfg = ctx.config();
  const EventStream stream = load_events(ctx, Stage::Simulate);
  const TimKernels tim = load_tim(ctx, Stage::Simulate);
  const HdimKernels hdim = load_hdim(ctx, Stage::Simulate, true);
  SimOptions opt;
  opt.noise = noise_of(cfg);
  opt.seed = cfg.seed;
  opt.burn_in = cfg.burn_in;
  const SimPath pt = simulate_tim(stream, tim, opt);
  const SimPath ph = simulate_hdim(stream, hdim, opt);
  const std::size_t lags = cfg.diffusion_lags();
  const DiffusionCurve Dt = measure_D(pt.stream, lags);
  const DiffusionCurve Dh = measure_D(ph.stream, lags);
  ctx.write(artifact::kPathTim, [&](std::ostream& os) { write_path_csv(os, pt.stream); });
  ctx.write(artifact::kPathHdim, [&](std::ostream& os) { write_path_csv(os, ph.stream); });
  ctx.write(artifact::kSimTim, [&](std::ostream& os) { write_diffusion_csv(os, std::span(&Dt, 1)); });
  ctx.write(artifact::kSimHdim, [&](std::ostream& os) { write_diffusion_csv(os, std::span(&Dh, 1)); });
  d["events"] = pt.stream.total_events();
  d["hdim_adverse_jumps"] = ph.adverse_jumps;
  d["tim_adverse_jumps"] = pt.adverse_jumps;
  return true;
}

DiffusionCurve single_curve(Context& ctx, const char* name, Stage stage, std::string_view producer,
                            std::optional<Provenance> want) {
  auto in = ctx.open(ctx.out(name), stage, producer);
  const auto curves = read_diffusion_csv(in);
  for (const auto& c : curves) {
    if (!want || c.provenance == *want) return c;
  }
  throw DependencyError(std::string("no matching curve in ") + name);
}

bool stage_compare(Context& ctx, json& d) {
  const DiffusionCurve tim = single_curve(ctx, artifact::kDiffusion, Stage::Compare, "predict-d", Provenance::ClosedFormTim);
  const DiffusionCurve hdim =
      single_curve(ctx, artifact::kDiffusion, Stage::Compare, "predict-d", Provenance::ClosedFormHdim);
  const DiffusionCurve st = single_curve(ctx, artifact::kSimTim, Stage::Compare, "simulate", std::nullopt);
  const DiffusionCurve sh = single_curve(ctx, artifact::kSimHdim, Stage::Compare, "simulate", std::nullopt);
  const auto rt = compare_curves(tim, st);
  const auto rh = compare_curves(hdim, sh);
  const json report = {{"tim", json::parse(to_json(rt))}, {"hdim", json::parse(to_json(rh))}};
  ctx.write(artifact::kCompare, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  d["tim_relative_l2"] = rt.relative_l2;
  d["hdim_relative_l2"] = rh.relative_l2;
  return true;
}

bool stage_roundtrip(Context& ctx, json& d) {
  const auto& cfg = ctx.config();
  const HdimKernels original = load_hdim(ctx, Stage::Roundtrip, true);
  auto in = ctx.open(ctx.out(artifact::kPathHdim), Stage::Roundtrip, "simulate");
  const EventStream path = read_path_csv(in);
  const LagGrid grid = calibration_grid(cfg);
  const EventStats stats = estimate_stats(path);
  const CorrelationSet C = estimate_correlations(path, stats, grid, cfg.ell_max);
  const ReturnResponseSet S = estimate_S(path, grid);
  CalibrationOptions opt = calibration_options(cfg);
  const HdimKernels again = calibrate_hdim(C, S, stats, grid, opt);

  double diff = 0.0;
  double ref = 0.0;
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      for (std::size_t l = 1; l <= grid.ell_max; ++l) {
        const double x = again.effective(a, p, l) - original.effective(a, p, l);
        diff += x * x;
        ref += original.effective(a, p, l) * original.effective(a, p, l);
      }
    }
  }
  const double rel = ref > 0.0 ? std::sqrt(diff / ref) : std::sqrt(diff);
  const json report = {{"kappa_relative_l2", rel}, {"condition", again.condition}};
  ctx.write(artifact::kRoundtrip, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  d["kappa_relative_l2"] = rel;
  return true;
}

bool run_stage(Stage stage, Context& ctx, json& d) {
  switch (stage) {
    case Stage::Generate: return stage_generate(ctx, d);
    case Stage::Classify: return stage_classify(ctx, d);
    case Stage::Validate: return stage_validate(ctx, d);
    case Stage::Estimate: return stage_estimate(ctx, d);
    case Stage::CalibrateTim: return stage_calibrate_tim(ctx, d);
    case Stage::CalibrateHdim: return stage_calibrate_hdim(ctx, d);
    case Stage::RefineScale: return stage_refine(ctx, d);
    case Stage::PredictD: return stage_predict(ctx, d);
    case Stage::Simulate: return stage_simulate(ctx, d);
    case Stage::Compare: return stage_compare(ctx, d);
    case Stage::Roundtrip: return stage_roundtrip(ctx, d);
  }
  return false;
}

}  // namespace

std::string_view to_string(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

std::optional<Stage> parse_stage(std::string_view text) {
  for (std::size_t k = 0; k < kStageNames.size(); ++k) {
    if (kStageNames[k] == text) return static_cast<Stage>(k);
  }
  return std::nullopt;
}

std::vector<Stage> parse_stages(std::string_view text) {
  std::vector<Stage> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (!item.empty()) {
      const auto s = parse_stage(item);
      if (!s) throw Error("unknown stage '" + std::string(item) + "'");
      if (std::find(out.begin(), out.end(), *s) == out.end()) out.push_back(*s);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool PipelineResult::ok() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageOutcome& s) { return s.ok; });
}

PipelineResult run_pipeline(const RunConfig& config, std::vector<Stage> stages) {
  config.validate();
  std::sort(stages.begin(), stages.end());
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
  Context ctx(config);
  PipelineResult result;
  for (Stage stage : stages) {
    json details = json::object();
    const bool ok = run_stage(stage, ctx, details);
    ctx.write_manifest(stage, details, ok);
    result.stages.push_back({stage, ok, ok ? "" : "invariant check failed; see " + manifest_name(stage)});
    if (!ok) break;
  }
  return result;
}

}  // namespace impact
