#include "rydyn/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>

#include "rydyn/errors.hpp"
#include "rydyn/estimation.hpp"

namespace rydyn {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const SelectionRuleError*>(&e))
    return kExitConfig;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const IntegrationError*>(&e))
    return kExitSolver;
  return kExitSolver;
}

std::string CommandResult::value(const std::string& key) const {
  for (const auto& [k, v] : summary)
    if (k == key) return v;
  throw DomainError("no summary entry '" + key + "'");
}

namespace {

double non_negative(const RunConfig& cfg, const std::string& section, const std::string& key) {
  const double v = cfg.get_double(section, key);
  if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(section + "." + key + ": must be a non-negative number");
  return v;
}

double positive(const RunConfig& cfg, const std::string& section, const std::string& key) {
  const double v = cfg.get_double(section, key);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(section + "." + key + ": must be positive");
  return v;
}

double fraction(const RunConfig& cfg, const std::string& section, const std::string& key, double upper = 1.0) {
  const double v = cfg.get_double(section, key);
  if (!(v >= 0.0 && v <= upper))
    throw ConfigError(section + "." + key + ": must lie in [0, " + format_number(upper) + "]");
  return v;
}

int count(const RunConfig& cfg, const std::string& section, const std::string& key, int lowest) {
  const int v = cfg.get_int(section, key);
  if (v < lowest) throw ConfigError(section + "." + key + ": must be at least " + std::to_string(lowest));
  return v;
}

std::uint64_t seed_of(const RunConfig& cfg) {
  const std::string& text = cfg.get("run", "seed");
  std::uint64_t seed = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, seed);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw ConfigError("run.seed: '" + text + "' is not a non-negative integer");
  return seed;
}

std::string output_dir(const RunConfig& cfg) { return cfg.get("output", "directory"); }

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(output_dir(cfg)) / name).string();
}

OutputStamp stamp_for(const RunConfig& cfg, std::vector<std::string> notes = {}) {
  return OutputStamp{seed_of(cfg), &cfg, std::move(notes)};
}

/// Output directory plus the resolved configuration next to the results.
void prepare_output(const RunConfig& cfg, CommandResult& result) {
  ensure_directory(output_dir(cfg));
  const std::string path = out_path(cfg, "resolved.ini");
  write_text_file(path, "# " + tool_version() + " seed=" + std::to_string(seed_of(cfg)) + "\n" + cfg.to_text());
  result.files.push_back(path);
}

void maybe_plot(const RunConfig& cfg, CommandResult& result, const std::string& name, const PlotSpec& spec) {
  if (!cfg.get_bool("output", "plot")) return;
  const std::string path = out_path(cfg, name);
  write_text_file(path, svg_line_plot(spec));
  result.files.push_back(path);
}

void note_summary(CommandResult& result, const std::string& key, double v) {
  result.summary.emplace_back(key, format_number(v));
}

std::vector<double> probe_values(const RunConfig& cfg) {
  auto values = cfg.get_list("probe", "r3_values");
  if (!values.empty()) {
    for (double v : values)
      if (!(v >= 0.0)) throw ConfigError("probe.r3_values: entries must be non-negative");
    return values;
  }
  return probe_grid(positive(cfg, "probe", "r3_max"), count(cfg, "probe", "points", 2));
}

}  // namespace

RydbergAtom load_atom(const RunConfig& config) {
  const std::string& path = config.get("atomic", "data");
  if (path.empty()) return RydbergAtom::rubidium87();
  if (!std::filesystem::exists(path)) throw IoError("atomic.data: cannot open '" + path + "'");
  return RydbergAtom(AtomData::load(path));
}

ResolvedModel resolve_model(const RunConfig& cfg, const RydbergAtom& atom) {
  ResolvedModel m;
  m.state = parse_state_label(cfg.get("atomic", "state"));
  if (!atom.valid_state(m.state))
    throw ConfigError("atomic.state: '" + cfg.get("atomic", "state") + "' is not a valid level");
  m.temperature = non_negative(cfg, "atomic", "temperature");
  const RydbergLevel level = atom.level(m.state);
  if (cfg.get("atomic", "data").empty() && m.temperature == kRoomTemperature) m.reference = find_reference(m.state);

  std::optional<LevelRates> computed;
  auto level_rates = [&]() -> const LevelRates& {
    if (!computed) computed = atom.level_rates(level, m.temperature);
    return *computed;
  };
  auto pick = [&](const std::string& key, double reference_value, const std::function<double()>& fallback,
                  const std::string& what) {
    if (auto v = cfg.get_optional("rates", key)) {
      if (!(*v >= 0.0)) throw ConfigError("rates." + key + ": must be non-negative");
      return *v;
    }
    if (m.reference != nullptr) {
      m.notes.push_back("rates." + key + " = " + format_number(reference_value) + " [" +
                        std::string(kSourceTransferSummary) + "]");
      return reference_value;
    }
    const double v = fallback();
    m.notes.push_back("rates." + key + " = " + format_number(v) + " (" + what + ")");
    return v;
  };

  auto& k = m.kinetics;
  const ReferenceState* r = m.reference;
  k.radiative = pick("radiative", r ? r->radiative : 0.0, [&] { return level_rates().spontaneous; },
                     "computed A_r");
  k.black_body = pick("black_body", r ? r->black_body : 0.0,
                      [&] { return level_rates().black_body_transfer; }, "computed A_BB");
  k.other_radiative = pick("other_radiative", r ? r->other_radiative : 0.0,
                           [&] { return level_rates().spontaneous; }, "computed A_r of the excitation state");
  k.transfer = pick("transfer", r ? r->gamma_loss : 0.0, [&] { return level_rates().black_body_transfer; },
                    "black-body transfer only");
  m.ionization = atom.black_body_ionization(level, m.temperature);
  k.other_loss = pick("other_loss", r ? r->other_loss : 0.0, [&] { return m.ionization; },
                      "black-body ionisation rate");
  k.direct_loss = non_negative(cfg, "rates", "direct_loss");

  k.background_loss = non_negative(cfg, "mot", "background_loss");
  if (auto load = cfg.get_optional("mot", "load_rate")) {
    if (!(*load >= 0.0)) throw ConfigError("mot.load_rate: must be non-negative");
    k.load_rate = *load;
  } else {
    k.load_rate = k.background_loss * non_negative(cfg, "mot", "ground_atoms0");
  }
  k.dark.capacity = fraction(cfg, "dark", "capacity", 1.0 / 3.0);
  k.dark.exchange_rate = non_negative(cfg, "dark", "exchange_rate");

  m.detection.solid_angle = fraction(cfg, "detection", "solid_angle");
  m.detection.efficiency = fraction(cfg, "detection", "efficiency");
  m.detection.branching_rydberg = fraction(cfg, "detection", "branching_rydberg");
  m.detection.branching_6p = fraction(cfg, "detection", "branching_6p");

  const double linewidth = positive(cfg, "excitation", "linewidth");
  const bool rabi = cfg.get_double("excitation", "rabi_red") != 0.0 || cfg.get_double("excitation", "rabi_blue") != 0.0;
  if (auto peak = cfg.get_optional("excitation", "peak_rate")) {
    if (!(*peak >= 0.0)) throw ConfigError("excitation.peak_rate: must be non-negative");
    m.peak_rate = *peak;
  } else if (rabi) {
    ExcitationParams e;
    e.rabi_red = cfg.get_double("excitation", "rabi_red");
    e.rabi_blue = cfg.get_double("excitation", "rabi_blue");
    e.intermediate_detuning = cfg.get_double("excitation", "intermediate_detuning");
    e.linewidth = linewidth;
    if (e.intermediate_detuning == 0.0) throw ConfigError("excitation.intermediate_detuning: must be non-zero");
    m.excitation = e;
    m.peak_rate = e.peak_rate();
  } else {
    const double ref = atom.level(kReferenceExcitationState).n_star;
    m.peak_rate = kReferenceExcitationRate * std::pow(ref / level.n_star, 3);
    m.notes.push_back("excitation.peak_rate = " + format_number(m.peak_rate) + " [" +
                      std::string(kSourceExcitationRate) + ", scaled as n*^-3]");
  }
  if (!rabi || cfg.get_optional("excitation", "peak_rate")) {
    // Rabi frequencies that reproduce the chosen peak rate.
    m.excitation.intermediate_detuning = 1.0;
    m.excitation.rabi_red = 2.0;
    m.excitation.rabi_blue = 2.0 * std::sqrt(m.peak_rate * linewidth);
    m.excitation.linewidth = linewidth;
  }
  k.excitation = m.peak_rate;
  k.validate();
  return m;
}

CascadeRun run_cascade(const RunConfig& cfg, const RydbergAtom& atom) {
  CascadeRun run;
  run.model = resolve_model(cfg, atom);
  auto& o = run.options;
  o.geometry.radius = positive(cfg, "cloud", "radius");
  o.temperature = run.model.temperature;
  o.n_window = count(cfg, "cascade", "n_window", 0);
  o.l_max = count(cfg, "cascade", "l_max", 0);
  o.enlarge = cfg.get_bool("cascade", "enlarge");
  o.window_step = count(cfg, "cascade", "window_step", 1);
  o.max_window = count(cfg, "cascade", "max_window", o.n_window);
  o.window_tolerance = positive(cfg, "cascade", "window_tolerance");
  if (auto pump = cfg.get_optional("cascade", "pump")) {
    if (!(*pump >= 0.0)) throw ConfigError("cascade.pump: must be non-negative");
    o.pump = *pump;
  }
  run.result = solve_cascade(atom, run.model.state, run.model.kinetics, o);
  return run;
}

CommandResult cmd_scan(const RunConfig& cfg) {
  const RydbergAtom atom = load_atom(cfg);
  const ResolvedModel m = resolve_model(cfg, atom);
  const double span = positive(cfg, "excitation", "detuning_span");
  const int points = count(cfg, "excitation", "points", 2);
  CommandResult result;
  prepare_output(cfg, result);

  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = -span + 2.0 * span * i / (points - 1);
  const auto rows = scan(m.kinetics, m.excitation, m.detection, grid);

  CsvTable table;
  table.header = {"detuning_hz", "loss_rate_per_s", "counts_per_s", "excitation_per_s", "ground_atoms"};
  PlotSpec plot{"Excitation scan, " + format_state_label(m.state), "detuning (Hz)", "rate (s^-1)", false, {}};
  PlotSeries loss{"loss x 1e4", {}, {}}, counts{"counts", {}, {}};
  double peak_loss = 0.0, peak_counts = 0.0;
  for (const auto& p : rows) {
    const double hz = p.detuning / (2.0 * std::numbers::pi);
    table.add_row({hz, p.loss, p.cascade_counts, p.excitation, p.ground});
    loss.x.push_back(hz);
    loss.y.push_back(1e4 * p.loss);
    counts.x.push_back(hz);
    counts.y.push_back(p.cascade_counts);
    peak_loss = std::max(peak_loss, p.loss);
    peak_counts = std::max(peak_counts, p.cascade_counts);
  }
  const std::string path = out_path(cfg, "scan.csv");
  write_csv(path, table, stamp_for(cfg, m.notes));
  result.files.push_back(path);
  plot.series = {loss, counts};
  maybe_plot(cfg, result, "scan.svg", plot);
  note_summary(result, "peak_rate_per_s", m.peak_rate);
  note_summary(result, "peak_loss_per_s", peak_loss);
  note_summary(result, "peak_counts_per_s", peak_counts);
  return result;
}

CommandResult cmd_probe_scan(const RunConfig& cfg) {
  const RydbergAtom atom = load_atom(cfg);
  const ResolvedModel m = resolve_model(cfg, atom);
  const auto grid = probe_values(cfg);
  CommandResult result;
  prepare_output(cfg, result);

  const bool dark = m.kinetics.dark.enabled();
  KineticsParams bright = m.kinetics;
  bright.dark.capacity = 0.0;

  CsvTable table;
  table.header = {"r3_per_s", "loss_per_s", "counts_per_s", "counts_per_ground_atom_per_s"};
  if (dark) table.header.insert(table.header.end(), {"loss_dark_per_s", "counts_dark_per_s"});
  PlotSpec plot{"Probe scan, " + format_state_label(m.state), "R3 (s^-1)", "loss rate (s^-1)", false, {}};
  PlotSeries loss{"f_d = 0", {}, {}}, loss_dark{"f_d = " + format_number(m.kinetics.dark.capacity), {}, {}};
  for (double r3 : grid) {
    KineticsParams p = bright;
    p.probe = r3;
    const double per_atom = probe_count_rate(p, m.detection);
    std::vector<double> row = {r3, trap_loss_increase(p), per_atom * steady_state(p).ground, per_atom};
    loss.x.push_back(r3);
    loss.y.push_back(row[1]);
    if (dark) {
      KineticsParams q = m.kinetics;
      q.probe = r3;
      row.push_back(trap_loss_increase(q));
      row.push_back(probe_count_rate(q, m.detection) * steady_state(q).ground);
      loss_dark.x.push_back(r3);
      loss_dark.y.push_back(row[4]);
    }
    table.add_row(row);
  }
  const std::string path = out_path(cfg, "probe_scan.csv");
  write_csv(path, table, stamp_for(cfg, m.notes));
  result.files.push_back(path);
  plot.series = {loss};
  if (dark) plot.series.push_back(loss_dark);
  maybe_plot(cfg, result, "probe_scan.svg", plot);

  note_summary(result, "knee_r3_per_s", bright.radiative + bright.transfer + bright.direct_loss);
  note_summary(result, "high_probe_loss_per_s", trap_loss_high_probe_limit(bright));
  if (dark) note_summary(result, "high_probe_loss_dark_per_s", trap_loss_high_probe_limit(m.kinetics));
  return result;
}

CommandResult cmd_cascade(const RunConfig& cfg) {
  const RydbergAtom atom = load_atom(cfg);
  const double duration = positive(cfg, "cascade", "duration");
  const int samples = count(cfg, "cascade", "samples", 1);
  CommandResult result;
  prepare_output(cfg, result);

  const CascadeRun run = run_cascade(cfg, atom);
  const auto& res = run.result;
  const auto& rates = res.rates;
  const auto& sol = res.solution;
  const std::size_t n = rates.size();
  const OutputStamp stamp = stamp_for(cfg, run.model.notes);

  LevelPopulations start;
  start.levels.assign(n, 0.0);
  const auto trajectory = evolve(start, rates, sol.pump, duration, samples);
  CsvTable series;
  series.header.push_back("time_s");
  series.header.insert(series.header.end(), rates.labels.begin(), rates.labels.end());
  series.header.push_back("sink");
  for (std::size_t i = 0; i < trajectory.times.size(); ++i) {
    std::vector<double> row{trajectory.times[i]};
    row.insert(row.end(), trajectory.states[i].levels.begin(), trajectory.states[i].levels.end());
    row.push_back(trajectory.states[i].sink);
    series.add_row(row);
  }
  std::string path = out_path(cfg, "cascade_timeseries.csv");
  write_csv(path, series, stamp);
  result.files.push_back(path);

  CsvTable levels;
  levels.header = {"level", "population", "sink_rate_per_s", "sink_cooperativity"};
  for (std::size_t i = 0; i < n; ++i)
    levels.rows.push_back({rates.labels[i], format_number(sol.populations.levels[i]),
                           format_number(rates.sink_rate[i]), format_number(rates.sink_cooperativity[i])});
  path = out_path(cfg, "cascade_levels.csv");
  write_csv(path, levels, stamp);
  result.files.push_back(path);

  CsvTable edges;
  edges.header = {"upper", "lower", "gamma_el_per_s", "c_el", "a_el_per_s", "bb_down_per_s", "bb_up_per_s"};
  for (const auto& p : rates.pairs)
    edges.rows.push_back({rates.labels[p.upper], rates.labels[p.lower], format_number(p.gamma),
                          format_number(p.cooperativity), format_number(p.einstein_a),
                          format_number(p.stimulated_down), format_number(p.absorption_up)});
  path = out_path(cfg, "cascade_rates.csv");
  write_csv(path, edges, stamp);
  result.files.push_back(path);

  CsvTable windows;
  windows.header = {"window", "levels", "gamma_per_s"};
  for (const auto& h : res.history)
    windows.add_row({static_cast<double>(h.window), static_cast<double>(h.levels), h.gamma});
  path = out_path(cfg, "cascade_windows.csv");
  write_csv(path, windows, stamp);
  result.files.push_back(path);

  auto& s = result.summary;
  s.emplace_back("state", format_state_label(run.model.state));
  s.emplace_back("pump_mode", run.options.pump ? "fixed" : "coupled");
  note_summary(result, "pump_per_s", sol.pump);
  note_summary(result, "gamma_per_s", sol.transfer.total());
  note_summary(result, "gamma_superradiant_per_s", sol.transfer.superradiant);
  note_summary(result, "gamma_black_body_per_s", sol.transfer.black_body);
  note_summary(result, "excitation_population", sol.populations.levels[rates.pumped]);
  note_summary(result, "rydberg_population", sol.populations.rydberg_total());
  note_summary(result, "ground_atoms", sol.kinetics.ground);
  note_summary(result, "window", res.window);
  s.emplace_back("window_converged", res.window_converged ? "true" : "false");
  note_summary(result, "levels", static_cast<double>(n));
  note_summary(result, "fixed_point_iterations", sol.iterations);
  if (const ReferenceState* r = run.model.reference) {
    note_summary(result, "reference_gamma_calculated_per_s", r->gamma_calculated);
    note_summary(result, "ratio_to_reference", sol.transfer.total() / r->gamma_calculated);
    note_summary(result, "reference_gamma_measured_per_s", r->gamma_measured);
    s.emplace_back("reference_source", std::string(kSourceTransferComparison));
  }
  path = out_path(cfg, "cascade_summary.txt");
  write_report(path, result.summary, stamp);
  result.files.push_back(path);

  PlotSpec plot{"Cascade, " + format_state_label(run.model.state), "time (s)", "population", false, {}};
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sol.populations.levels[a] > sol.populations.levels[b];
  });
  for (std::size_t k = 0; k < std::min<std::size_t>(5, n); ++k) {
    PlotSeries ps{rates.labels[order[k]], trajectory.times, {}};
    for (const auto& st : trajectory.states) ps.y.push_back(st.levels[order[k]]);
    plot.series.push_back(std::move(ps));
  }
  maybe_plot(cfg, result, "cascade.svg", plot);
  return result;
}

CommandResult cmd_fit(const RunConfig& cfg) {
  std::vector<std::string> datasets;
  {
    std::string list = cfg.get("fit", "dataset");
    std::size_t start = 0;
    while (start <= list.size()) {
      const auto comma = list.find(',', start);
      std::string item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (!item.empty()) datasets.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (datasets.empty()) throw ConfigError("fit.dataset: no dataset given");
  const std::string sidecar = cfg.get("fit", "sidecar");
  if (!sidecar.empty() && datasets.size() > 1) throw ConfigError("fit.sidecar: only valid with a single dataset");
  FitOptions options;
  try {
    options.mode = parse_fit_mode(cfg.get("fit", "mode"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("fit.mode: ") + e.what());
  }
  std::vector<std::string> sidecars;
  for (const auto& d : datasets) {
    sidecars.push_back(sidecar.empty() ? d + ".meta" : sidecar);
    for (const auto& p : {d, sidecars.back()})
      if (!std::filesystem::is_regular_file(p)) throw IoError("cannot open '" + p + "'");
  }
  std::vector<ProbeScanDataset> data;
  for (std::size_t i = 0; i < datasets.size(); ++i) data.push_back(read_dataset(datasets[i], sidecars[i]));

  CommandResult result;
  prepare_output(cfg, result);
  const auto fits = fit_batch(data, options);
  std::map<std::string, int> used;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    KeyValues kv;
    kv.emplace_back("dataset", datasets[i]);
    kv.emplace_back("sidecar", sidecars[i]);
    kv.emplace_back("observable", to_string(f.observable));
    kv.emplace_back("mode", to_string(f.mode));
    kv.emplace_back("converged", f.converged ? "true" : "false");
    kv.emplace_back("iterations", std::to_string(f.iterations));
    kv.emplace_back("chi_square", format_number(f.chi_square));
    kv.emplace_back("degrees_of_freedom", std::to_string(f.degrees_of_freedom));
    for (std::size_t k = 0; k < f.names.size(); ++k) {
      kv.emplace_back(f.names[k], format_number(f.parameters.size() > 0 ? f.parameters[static_cast<Eigen::Index>(k)] : 0.0));
      kv.emplace_back(f.names[k] + "_error", format_number(f.error(f.names[k])));
    }
    if (f.observable == Observable::loss) {
      kv.emplace_back("other_loss_derived", format_number(f.other_loss));
      kv.emplace_back("loss_combination_derived", format_number(f.loss_combination));
    }
    for (Eigen::Index a = 0; a < f.covariance.rows(); ++a)
      for (Eigen::Index b = 0; b < f.covariance.cols(); ++b)
        kv.emplace_back("covariance_" + f.names[static_cast<std::size_t>(a)] + "_" +
                            f.names[static_cast<std::size_t>(b)],
                        format_number(f.covariance(a, b)));
    for (Eigen::Index k = 0; k < f.residuals.size(); ++k)
      kv.emplace_back("residual_" + std::to_string(k), format_number(f.residuals[k]));
    for (std::size_t k = 0; k < f.warnings.size(); ++k) kv.emplace_back("warning_" + std::to_string(k), f.warnings[k]);

    std::string stem = std::filesystem::path(datasets[i]).stem().string();
    if (used[stem]++ > 0) stem += "_" + std::to_string(i);
    const std::string path = out_path(cfg, "fit_" + stem + ".txt");
    write_report(path, kv, stamp_for(cfg));
    result.files.push_back(path);
    if (i == 0) {
      note_summary(result, "gamma_per_s", f.gamma);
      result.summary.emplace_back("converged", f.converged ? "true" : "false");
      result.summary.emplace_back("warnings", std::to_string(f.warnings.size()));
    }
  }
  return result;
}

CommandResult cmd_synth(const RunConfig& cfg) {
  const RydbergAtom atom = load_atom(cfg);
  const ResolvedModel m = resolve_model(cfg, atom);
  Observable observable;
  NoiseModel noise;
  try {
    observable = parse_observable(cfg.get("synth", "observable"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("synth.observable: ") + e.what());
  }
  try {
    noise.kind = parse_noise_kind(cfg.get("synth", "noise"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("synth.noise: ") + e.what());
  }
  noise.relative_sigma = positive(cfg, "synth", "relative_sigma");
  noise.exposure = positive(cfg, "synth", "exposure");
  if (noise.kind == NoiseKind::poisson && observable != Observable::counts)
    throw ConfigError("synth.noise: poisson noise needs synth.observable = counts");
  const auto grid = probe_values(cfg);
  if (grid.size() < 4) throw ConfigError("probe: at least 4 R3 values are needed");
  CommandResult result;
  prepare_output(cfg, result);

  const auto d = synthesize_dataset(m.kinetics, m.detection, observable, grid, noise, seed_of(cfg));
  const std::string csv = out_path(cfg, "probe_dataset.csv");
  auto notes = m.notes;
  notes.push_back("truth gamma = " + format_number(m.kinetics.transfer) +
                  ", Gamma_s = " + format_number(m.kinetics.other_loss));
  write_dataset(csv, csv + ".meta", d, stamp_for(cfg, notes));
  result.files.push_back(csv);
  result.files.push_back(csv + ".meta");
  note_summary(result, "gamma_per_s", m.kinetics.transfer);
  note_summary(result, "other_loss_per_s", m.kinetics.other_loss);
  return result;
}

CommandResult cmd_tables(const RunConfig& cfg) {
  const RydbergAtom atom = load_atom(cfg);
  CommandResult result;
  prepare_output(cfg, result);
  const double temperature = non_negative(cfg, "atomic", "temperature");
  const std::vector<std::string> notes = {
      "reference columns (suffix _ref) are published values; the source column names their table"};

  CsvTable rates;
  rates.header = {"state", "a_r_per_s", "a_r_ref", "a_r_ratio", "a_bb_per_s", "a_bb_ref", "a_bb_ratio",
                  "a_s_ref", "gamma_counts_ref", "gamma_loss_ref", "counts_to_loss_ratio", "gamma_s_ref", "source"};
  CsvTable transfer;
  transfer.header = {"state", "gamma_per_s", "gamma_superradiant_per_s", "gamma_black_body_per_s",
                     "gamma_calculated_ref", "ratio", "gamma_measured_ref", "window", "window_converged",
                     "rydberg_population", "source"};
  CsvTable ionization;
  ionization.header = {"state", "gamma_bbi_per_s", "gamma_bbi_ref", "ratio", "gamma_s_calculated_ref",
                       "gamma_s_measured_ref", "source"};

  auto f = [](double v) { return format_number(v); };
  for (const auto& r : kReferenceStates) {
    const std::string label(r.label);
    try {
      const RydbergLevel level = atom.level(r.state);
      const LevelRates lr = atom.level_rates(level, temperature);
      rates.rows.push_back({label, f(lr.spontaneous), f(r.radiative), f(lr.spontaneous / r.radiative),
                            f(lr.black_body_transfer), f(r.black_body), f(lr.black_body_transfer / r.black_body),
                            f(r.other_radiative), f(r.gamma_counts), f(r.gamma_loss),
                            f(r.gamma_counts / r.gamma_loss), f(r.other_loss), std::string(kSourceTransferSummary)});

      RunConfig state_cfg = cfg;
      state_cfg.set("atomic", "state", label);
      const CascadeRun run = run_cascade(state_cfg, atom);
      const auto& t = run.result.solution.transfer;
      transfer.rows.push_back({label, f(t.total()), f(t.superradiant), f(t.black_body), f(r.gamma_calculated),
                               f(t.total() / r.gamma_calculated), f(r.gamma_measured),
                               std::to_string(run.result.window), run.result.window_converged ? "true" : "false",
                               f(run.result.solution.populations.rydberg_total()),
                               std::string(kSourceTransferComparison)});
      note_summary(result, "gamma_" + label, t.total());

      const double bbi = atom.black_body_ionization(level, temperature);
      ionization.rows.push_back({label, f(bbi), f(r.ionization), f(bbi / r.ionization), f(r.other_loss_calculated),
                                 f(r.other_loss), std::string(kSourceLossComparison)});
      note_summary(result, "bbi_" + label, bbi);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(label + ": " + e.what());
    } catch (const IntegrationError& e) {
      throw IntegrationError(label + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError(label + ": " + e.what());
    }
  }
  for (const auto& [name, table] :
       {std::pair{"table_rates.csv", &rates}, {"table_transfer.csv", &transfer}, {"table_ionization.csv", &ionization}}) {
    const std::string path = out_path(cfg, name);
    write_csv(path, *table, stamp_for(cfg, notes));
    result.files.push_back(path);
  }
  return result;
}

std::vector<std::string> command_names() { return {"scan", "probe-scan", "cascade", "fit", "tables", "synth"}; }

int run_command(const std::string& verb, const RunConfig& config, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, CommandResult (*)(const RunConfig&)> table = {
      {"scan", cmd_scan},     {"probe-scan", cmd_probe_scan}, {"cascade", cmd_cascade},
      {"fit", cmd_fit},       {"tables", cmd_tables},         {"synth", cmd_synth},
  };
  const auto it = table.find(verb);
  if (it == table.end()) {
    err << "error: unknown command '" << verb << "'\n";
    return kExitConfig;
  }
  try {
    const CommandResult result = it->second(config);
    for (const auto& f : result.files) out << "wrote " << f << '\n';
    for (const auto& [k, v] : result.summary) out << k << " = " << v << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace rydyn
