#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "skdv/config.hpp"
#include "skdv/diagnostics.hpp"
#include "skdv/figures.hpp"
#include "skdv/io.hpp"
#include "skdv/waves.hpp"

namespace skdv {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

inline FieldState initial_state(const RunConfig& c) {
  GridPtr grid = make_grid(c.n, c.length, c.center);
  FieldState s = FieldState::zeros(grid, 0.0);
  switch (c.initial) {
    case InitialKind::gaussian: {
      const auto& g = c.gaussian;
      for (std::size_t j = 0; j < grid->size(); ++j) {
        const double x = grid->x(j);
        const double zu = (x - g.u_center) / g.u_width;
        const double zv = (x - g.v_center) / g.v_width;
        s.u[j] = std::polar(g.u_amplitude * std::exp(-zu * zu), g.u_phase + g.u_wavenumber * x);
        const double shape = g.v_shape == VShape::sech2 ? sech(zv) * sech(zv) : std::exp(-zv * zv);
        s.v[j] = g.v_amplitude * shape;
      }
      break;
    }
    case InitialKind::soliton: {
      if (c.soliton.coupled) {
        SolitaryWaveParams p;
        p.c_star = c.soliton.cstar;
        p.alpha = c.model.alpha;
        p.x0 = c.soliton.x0;
        s = solitary_initial_data(p, grid);
      } else {
        const double k = std::sqrt(c.soliton.cstar);
        for (std::size_t j = 0; j < grid->size(); ++j) {
          const double h = sech(k * (grid->x(j) - c.soliton.x0));
          s.v[j] = 12.0 * c.soliton.cstar * h * h;
        }
      }
      break;
    }
    case InitialKind::snapshot: {
      SnapshotData d = read_snapshot(c.snapshot_path);
      if (!d.state.grid->same_layout(*grid)) {
        throw ConfigError("initial.path: snapshot grid (n=" + std::to_string(d.state.grid->size()) +
                          ", length=" + format_double(d.state.grid->length()) + ", center=" +
                          format_double(d.state.grid->center()) + ") differs from the grid block");
      }
      d.state.grid = grid;
      s = std::move(d.state);
      break;
    }
    case InitialKind::expression: {
      const Expression ur(c.expression.u_re), ui(c.expression.u_im), v(c.expression.v);
      for (std::size_t j = 0; j < grid->size(); ++j) {
        const double x = grid->x(j);
        s.u[j] = {ur(x), ui(x)};
        s.v[j] = v(x);
      }
      for (std::size_t j = 0; j < grid->size(); ++j) {
        if (!std::isfinite(s.u[j].real()) || !std::isfinite(s.u[j].imag()) || !std::isfinite(s.v[j])) {
          throw ConfigError("initial: expression is not finite at x=" + format_double(grid->x(j)));
        }
      }
      break;
    }
  }
  return s;
}

inline DiagnosticsOptions diagnostics_options(const RunConfig& c) {
  DiagnosticsOptions d;
  d.virial = c.virial;
  d.region = c.region_spec();
  d.accumulate_from = c.t0;
  d.budgets = c.budgets;
  d.dealias = c.integrator.dealias;
  return d;
}

// ---------------------------------------------------------------------------
// Checkpoints: "SKCP", u32 version, u64 + JSON trailer of run state, then the
// current snapshot and, if present, the previous one.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_text;
  double origin = 0.0;         // time of step 0
  std::size_t step = 0;        // global step index of the current state
  std::size_t sample = 0;      // global sample index of the current state
  std::vector<double> snapshots_done;
  DiagnosticsCollector::Snapshot collector;
  ModelParams params;
};

namespace ckpt {

using nlohmann::json;

// Doubles travel as raw bit patterns so that NaN and every last bit survive.
inline std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }
inline double unbits(const json& j) { return std::bit_cast<double>(j.get<std::uint64_t>()); }

inline json record_to_json(const DiagnosticsRecord& r) {
  if (r.has_budget) throw std::logic_error("pending records never carry budgets");
  const double v[] = {r.t,      r.conserved.i1, r.conserved.i2, r.conserved.i3, r.j,
                      r.i,      r.mass.t,       r.mass.v2,      r.mass.u2,      r.mass.dv2,
                      r.mass.du2, r.mass.u4,    r.g_j,          r.g_i,          r.pj,
                      r.pi,     r.tail_v2,      r.tail_u2,      r.tail_dv2,     r.tail_du2,
                      r.tail_u4, r.tail_l2};
  json out = json::array();
  for (double x : v) out.push_back(bits(x));
  return json{{"values", out}, {"has_mass", r.has_mass}};
}

inline DiagnosticsRecord record_from_json(const json& j) {
  const auto& a = j.at("values");
  if (a.size() != 22) throw IoError("checkpoint: malformed pending record");
  DiagnosticsRecord r;
  double* const dst[] = {&r.t,       &r.conserved.i1, &r.conserved.i2, &r.conserved.i3, &r.j,
                         &r.i,       &r.mass.t,       &r.mass.v2,      &r.mass.u2,      &r.mass.dv2,
                         &r.mass.du2, &r.mass.u4,     &r.g_j,          &r.g_i,          &r.pj,
                         &r.pi,      &r.tail_v2,      &r.tail_u2,      &r.tail_dv2,     &r.tail_du2,
                         &r.tail_u4, &r.tail_l2};
  for (std::size_t k = 0; k < 22; ++k) *dst[k] = unbits(a[k]);
  r.has_mass = j.at("has_mass").get<bool>();
  return r;
}

}  // namespace ckpt

inline std::string encode_checkpoint(const Checkpoint& c, const IntegratorOptions& options) {
  using ckpt::bits;
  using ckpt::json;
  const auto& s = c.collector;
  if (!s.cur) throw std::logic_error("checkpoint needs a current state");

  json j;
  j["config"] = c.config_text;
  j["integrator"] = {{"dt", options.dt},
                     {"sponge_width", options.sponge_width},
                     {"sponge_strength", options.sponge_strength},
                     {"dealias", options.dealias},
                     {"scheme", to_string(options.scheme)}};
  j["origin"] = bits(c.origin);
  j["step"] = c.step;
  j["sample"] = c.sample;
  j["t"] = s.cur->t;
  json done = json::array();
  for (double t : c.snapshots_done) done.push_back(bits(t));
  j["snapshots_done"] = done;
  j["emitted"] = s.emitted;
  j["pending"] = s.pending ? ckpt::record_to_json(*s.pending) : json(nullptr);
  j["acc"] = {{"pj", bits(s.acc_value.pj)}, {"pi", bits(s.acc_value.pi)}};
  if (s.acc_last) {
    j["acc"]["last"] = {bits(s.acc_last->t), bits(s.acc_last->g_j), bits(s.acc_last->g_i)};
  }
  json tails = json::array();
  for (std::size_t k = 0; k < s.tails.size(); ++k) {
    json pts = json::array();
    for (const auto& p : s.tails[k]) pts.push_back({bits(p.t), bits(p.value)});
    tails.push_back({{"points", pts}, {"last_t", bits(s.tail_last_t[k])}});
  }
  j["tails"] = tails;
  j["has_prev"] = s.prev.has_value();

  const std::string text = j.dump(1);
  std::string out = "SKCP";
  bytes::put_u32(out, kCheckpointVersion);
  bytes::put_u64(out, text.size());
  out += text;
  out += encode_snapshot(*s.cur, c.params);
  if (s.prev) out += encode_snapshot(*s.prev, c.params);
  return out;
}

inline Checkpoint decode_checkpoint(std::string_view data, const std::string& origin) {
  using ckpt::json;
  using ckpt::unbits;
  bytes::Reader r(data, origin);
  if (r.take(4) != "SKCP") throw IoError(origin + ": not a checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError(origin + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = r.u64();
  if (len > r.remaining()) throw IoError(origin + ": truncated file");
  json j;
  try {
    j = json::parse(r.take(static_cast<std::size_t>(len)));
  } catch (const json::exception& e) {
    throw IoError(origin + ": malformed checkpoint header: " + e.what());
  }

  Checkpoint c;
  try {
    c.config_text = j.at("config").get<std::string>();
    c.origin = unbits(j.at("origin"));
    c.step = j.at("step").get<std::size_t>();
    c.sample = j.at("sample").get<std::size_t>();
    for (const auto& t : j.at("snapshots_done")) c.snapshots_done.push_back(unbits(t));
    auto& s = c.collector;
    s.emitted = j.at("emitted").get<std::size_t>();
    if (!j.at("pending").is_null()) s.pending = ckpt::record_from_json(j.at("pending"));
    s.acc_value = {unbits(j.at("acc").at("pj")), unbits(j.at("acc").at("pi"))};
    if (j.at("acc").contains("last")) {
      const auto& l = j.at("acc").at("last");
      s.acc_last = DecayAccumulator::Last{unbits(l.at(0)), unbits(l.at(1)), unbits(l.at(2))};
    }
    const auto& tails = j.at("tails");
    if (tails.size() != s.tails.size()) throw IoError(origin + ": malformed tail windows");
    for (std::size_t k = 0; k < s.tails.size(); ++k) {
      for (const auto& p : tails[k].at("points")) s.tails[k].push_back({unbits(p.at(0)), unbits(p.at(1))});
      s.tail_last_t[k] = unbits(tails[k].at("last_t"));
    }
    SnapshotData cur = decode_snapshot(r);
    c.params = cur.params;
    s.cur = std::move(cur.state);
    if (j.at("has_prev").get<bool>()) {
      SnapshotData prev = decode_snapshot(r);
      prev.state.grid = s.cur->grid;
      s.prev = std::move(prev.state);
    }
  } catch (const json::exception& e) {
    throw IoError(origin + ": malformed checkpoint header: " + e.what());
  }
  return c;
}

inline Checkpoint read_checkpoint(const fs::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

struct RunLayout {
  fs::path dir;
  fs::path config() const { return dir / "config.cfg"; }
  fs::path series() const { return dir / "series.csv"; }
  fs::path checkpoint() const { return dir / "checkpoint.skcp"; }
  fs::path snapshots() const { return dir / "snapshots"; }
  fs::path figures() const { return dir / "figures"; }
  fs::path snapshot_at(double t) const { return snapshots() / ("t_" + format_double(t) + ".skdv"); }
  fs::path final_state() const { return dir / "final.skdv"; }
};

struct RunControl {
  bool resume = false;
  std::optional<std::size_t> stop_after_samples;  // samples produced by this invocation
  std::function<void(const std::string&)> log;
};

struct RunSummary {
  std::size_t rows = 0;
  double t_end = 0.0;
  bool finished = false;
  std::vector<fs::path> files;
};

namespace run_detail {

// Keeps the header and the first `rows` data lines of a CSV.
inline void truncate_csv(const fs::path& path, std::size_t rows) {
  const std::string text = read_file(path);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < rows + 1; ++k) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      throw IoError(path.string() + ": holds fewer rows than the checkpoint records");
    }
    pos = nl + 1;
  }
  write_file_atomic(path, std::string_view(text).substr(0, pos));
}

class CsvSink {
 public:
  CsvSink(const fs::path& path, bool append) : path_(path) {
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw IoError(path.string() + ": cannot open for writing");
    if (!append) write(csv_header());
  }
  void row(const DiagnosticsRecord& r) {
    write(csv_row(r));
    ++rows_;
  }
  void flush() {
    out_.flush();
    if (!out_) throw IoError(path_.string() + ": write failed");
  }
  std::size_t rows() const { return rows_; }

 private:
  void write(const std::string& s) {
    out_ << s;
    if (!out_) throw IoError(path_.string() + ": write failed");
  }
  fs::path path_;
  std::ofstream out_;
  std::size_t rows_ = 0;
};

// Writes scheduled snapshots and periodic checkpoints; also implements the
// stop-after control. Must follow the collector in the sink list.
class OutputSink : public Sink {
 public:
  OutputSink(const RunConfig& cfg, const RunLayout& layout, DiagnosticsCollector& collector,
             CsvSink& csv, Checkpoint base, std::optional<std::size_t> stop_after)
      : cfg_(cfg), layout_(layout), collector_(collector), csv_(csv), base_(std::move(base)),
        stop_after_(stop_after) {}

  void on_sample(const FieldState& s) override {
    ++produced_;
    if (!first_) ++base_.sample;
    first_ = false;
    base_.step = static_cast<std::size_t>(std::llround((s.t - base_.origin) / cfg_.integrator.dt));

    const double tol = 1e-6 * cfg_.integrator.dt;
    for (double t : cfg_.snapshot_times) {
      if (std::abs(s.t - t) > tol) continue;
      if (std::find(base_.snapshots_done.begin(), base_.snapshots_done.end(), t) !=
          base_.snapshots_done.end()) {
        continue;
      }
      std::filesystem::create_directories(layout_.snapshots());
      write_snapshot(layout_.snapshot_at(t), s, cfg_.model);
      base_.snapshots_done.push_back(t);
    }
    if (cfg_.checkpoint_every > 0 && base_.sample > 0 && base_.sample % cfg_.checkpoint_every == 0) {
      csv_.flush();
      Checkpoint c = base_;
      c.collector = collector_.save();
      write_file_atomic(layout_.checkpoint(), encode_checkpoint(c, cfg_.integrator));
    }
  }

  bool wants_stop() const override { return stop_after_ && produced_ >= *stop_after_; }
  const Checkpoint& state() const { return base_; }

 private:
  const RunConfig& cfg_;
  const RunLayout& layout_;
  DiagnosticsCollector& collector_;
  CsvSink& csv_;
  Checkpoint base_;
  std::optional<std::size_t> stop_after_;
  std::size_t produced_ = 0;
  bool first_ = true;
};

}  // namespace run_detail

/// Runs a validated config into `out_dir`: series.csv, config.cfg, scheduled
/// snapshots, checkpoint.skcp, final.skdv and figures/.
inline RunSummary run(const RunConfig& cfg, const fs::path& out_dir, const RunControl& control = {}) {
  validate_config(cfg);
  const RunLayout layout{out_dir};
  const std::string config_text = to_text(cfg);
  auto log = [&](const std::string& s) {
    if (control.log) control.log(s);
  };

  FieldState state;
  Checkpoint base;
  base.config_text = config_text;
  base.params = cfg.model;
  std::optional<DiagnosticsCollector::Snapshot> restored;
  EvolveSchedule schedule;
  schedule.t_final = cfg.t_final;
  schedule.sample_interval = cfg.sample_dt;

  if (control.resume) {
    Checkpoint c = read_checkpoint(layout.checkpoint());
    if (c.config_text != config_text) {
      throw ConfigError(layout.checkpoint().string() + ": checkpoint was written with a different config");
    }
    // bring the restored states onto one shared grid
    GridPtr grid = make_grid(cfg.n, cfg.length, cfg.center);
    if (!c.collector.cur->grid->same_layout(*grid)) throw IoError("checkpoint grid does not match config");
    c.collector.cur->grid = grid;
    if (c.collector.prev) c.collector.prev->grid = grid;
    run_detail::truncate_csv(layout.series(), c.collector.emitted);
    restored = c.collector;
    state = *c.collector.cur;
    schedule.emit_initial = false;
    schedule.origin = c.origin;
    schedule.start_step = c.step;
    base = c;
    log("resuming at t=" + format_double(state.t) + " (step " + std::to_string(c.step) + ")");
  } else {
    state = initial_state(cfg);
    base.origin = state.t;
    fs::create_directories(out_dir);
    write_file_atomic(layout.config(), config_text);
  }
  if (!(cfg.t_final >= state.t)) throw ConfigError("integrator.t_final: precedes the initial time");

  run_detail::CsvSink csv(layout.series(), control.resume);
  DiagnosticsCollector emitter(cfg.model, diagnostics_options(cfg),
                               [&csv](const DiagnosticsRecord& r) { csv.row(r); });
  emitter.keep_trajectory(false);
  if (restored) emitter.restore(*restored);

  run_detail::OutputSink output(cfg, layout, emitter, csv, base, control.stop_after_samples);
  Sink* sinks[] = {&emitter, &output};

  Stepper stepper(state.grid, cfg.model, cfg.integrator);
  RunSummary summary;
  FieldState final_state;
  try {
    final_state = evolve(state, stepper, schedule, sinks);
  } catch (const IntegrationError&) {
    csv.flush();
    throw;
  }
  csv.flush();
  summary.rows = emitter.emitted();
  summary.t_end = final_state.t;
  const auto total_steps =
      static_cast<std::size_t>(std::llround((cfg.t_final - base.origin) / cfg.integrator.dt));
  summary.finished = output.state().step == total_steps;

  if (summary.finished) {
    write_snapshot(layout.final_state(), final_state, cfg.model);
    summary.files.push_back(layout.final_state());
    if (cfg.figures.any()) {
      const auto figs = emit_figures(layout.series(), cfg.figures, layout.figures());
      summary.files.insert(summary.files.end(), figs.begin(), figs.end());
    }
    log("finished at t=" + format_double(final_state.t) + ", " + std::to_string(summary.rows) + " rows");
  } else {
    log("stopped at t=" + format_double(final_state.t));
  }
  summary.files.push_back(layout.series());
  return summary;
}

/// Worker count for sweeps: SKDV_THREADS if set, else the hardware count.
inline std::size_t sweep_threads(std::size_t jobs) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SKDV_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError(std::string("SKDV_THREADS must be a positive integer (got '") + env + "')");
    }
    cap = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

struct SweepResult {
  fs::path out_dir;
  bool ok = false;
  std::string error;
};

/// Independent runs on a bounded worker pool; each owns its directory.
inline std::vector<SweepResult> sweep(const std::vector<std::pair<RunConfig, fs::path>>& jobs,
                                      std::size_t threads) {
  for (std::size_t a = 0; a < jobs.size(); ++a) {
    for (std::size_t b = a + 1; b < jobs.size(); ++b) {
      if (fs::weakly_canonical(jobs[a].second) == fs::weakly_canonical(jobs[b].second)) {
        throw ConfigError("sweep: two runs share the output directory " + jobs[a].second.string());
      }
    }
  }
  std::vector<SweepResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      results[k].out_dir = jobs[k].second;
      try {
        run(jobs[k].first, jobs[k].second);
        results[k].ok = true;
      } catch (const std::exception& e) {
        results[k].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < std::max<std::size_t>(1, threads); ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace skdv
