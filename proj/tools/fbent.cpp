// fbent: command-line front end for the frequency-bin entanglement library.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fbent/biphoton.hpp"
#include "fbent/constants.hpp"
#include "fbent/entanglement.hpp"
#include "fbent/hom.hpp"
#include "fbent/pipeline.hpp"
#include "fbent/qpm.hpp"

#ifndef FBENT_VERSION
#define FBENT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fbent;

namespace {

enum class Format { csv, json };

const std::map<std::string, Format> kFormats{{"csv", Format::csv}, {"json", Format::json}};

struct Globals {
  std::string output_dir;
  bool error_json = false;
};

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Every option of the invoked subcommand chain with its effective value.
json resolved_options(const CLI::App* app) {
  json out = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "version") continue;
    if (opt->get_expected_max() == 0) {
      out[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      out[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else {
      const std::string def = opt->get_default_str();
      out[name] = def.empty() ? json(nullptr) : json(def);
    }
  }
  return out;
}

// One invocation's metadata and outputs; files are written only once the
// command has finished without error.
class Run {
 public:
  Run(const Globals& globals, std::vector<const CLI::App*> chain) : globals_(globals) {
    std::string command;
    json config = json::object();
    for (const auto* app : chain) {
      if (app->get_parent() != nullptr) command += (command.empty() ? "" : " ") + app->get_name();
      config[app->get_parent() == nullptr ? "global" : app->get_name()] = resolved_options(app);
    }
    meta_ = {{"tool", "fbent"}, {"version", FBENT_VERSION}, {"command", command}, {"config", config},
             {"seed", nullptr}, {"timestamp", timestamp()}};
  }

  void set_seed(std::optional<std::uint64_t> seed) { meta_["seed"] = seed ? json(*seed) : json(nullptr); }
  void add_config(const std::string& key, json value) { meta_["config"]["resolved"][key] = std::move(value); }
  void warn(const std::string& message) {
    std::cerr << "warning: " << message << '\n';
    warnings_.push_back(message);
  }
  const json& warnings() const { return warnings_; }

  json meta() const { return meta_; }

  std::string csv_header() const {
    std::ostringstream out;
    out << "# tool: fbent " << FBENT_VERSION << '\n';
    out << "# command: " << meta_["command"].get<std::string>() << '\n';
    out << "# config: " << meta_["config"].dump() << '\n';
    out << "# seed: " << (meta_["seed"].is_null() ? std::string("none") : meta_["seed"].dump()) << '\n';
    out << "# timestamp: " << meta_["timestamp"].get<std::string>() << '\n';
    return out.str();
  }

  std::string json_document(json body) const {
    body["meta"] = meta_;
    if (!warnings_.empty()) body["warnings"] = warnings_;
    return body.dump(2) + "\n";
  }

  // Destination precedence: explicit path, then output dir + default name,
  // then stdout.
  void emit(const std::string& explicit_path, const std::string& default_name, std::string content) {
    pending_.push_back({resolve(explicit_path, default_name), std::move(content)});
  }

  // Secondary outputs are skipped when neither a path nor a directory is set.
  void emit_optional(const std::string& explicit_path, const std::string& default_name, std::string content) {
    auto dest = resolve(explicit_path, default_name);
    if (dest) pending_.push_back({dest, std::move(content)});
  }

  void flush() const {
    for (const auto& [path, content] : pending_) {
      if (!path) continue;
      if (path->has_parent_path()) fs::create_directories(path->parent_path());
    }
    for (const auto& [path, content] : pending_) {
      if (!path) {
        std::cout << content;
        continue;
      }
      const fs::path tmp = path->string() + ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + path->string());
        out << content;
      }
      fs::rename(tmp, *path);
    }
    std::cout.flush();
  }

 private:
  std::optional<fs::path> resolve(const std::string& explicit_path, const std::string& default_name) const {
    if (explicit_path == "-") return std::nullopt;
    if (!explicit_path.empty()) return fs::path(explicit_path);
    if (!globals_.output_dir.empty()) return fs::path(globals_.output_dir) / default_name;
    return std::nullopt;
  }

  const Globals& globals_;
  json meta_;
  json warnings_ = json::array();
  std::vector<std::pair<std::optional<fs::path>, std::string>> pending_;
};

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

std::string default_crystal() {
  if (const char* env = std::getenv("FBENT_DATA_DIR")) return (fs::path(env) / "crystals" / "default.json").string();
  return (fs::path(FBENT_DATA_DIR) / "crystals" / "default.json").string();
}

// ---------------------------------------------------------------- qpm

struct QpmArgs {
  std::string crystal = default_crystal();
  std::size_t segment = 0;
  std::string signal_pol = "H";
  std::optional<double> temperature_c;
  bool operating_point = false;
  std::string format = "json";
  std::string output;
  // period
  double signal_nm = 0.0;
  double idler_nm = 0.0;
  std::optional<double> pump_nm;
  // tune
  std::string variable = "temperature";
  double from = 0.0;
  double to = 0.0;
  int steps = 0;
};

CrystalSpec prepared_crystal(const QpmArgs& a, Run& run) {
  CrystalSpec spec = load_crystal(a.crystal);
  if (a.temperature_c) spec.temperature = *a.temperature_c;
  if (a.operating_point) spec = at_operating_point(spec);
  run.add_config("crystal", to_json(spec));
  return spec;
}

void cmd_qpm_solve(const QpmArgs& a, Run& run) {
  const auto spec = prepared_crystal(a, run);
  const auto pt = solve_signal_idler(spec, a.segment, polarization_from_string(a.signal_pol));
  if (kFormats.at(a.format) == Format::json) {
    run.emit(a.output, "qpm_solve.json", run.json_document({{"segment", a.segment}, {"point", to_json(pt)}}));
    return;
  }
  std::ostringstream out;
  out.precision(12);
  out << run.csv_header() << "segment,temperature_C,pump_nm,signal_nm,idler_nm,signal_pol,idler_pol,residual_rad_per_m\n";
  out << a.segment << ',' << spec.temperature << ',' << pt.pump_wavelength / kNm << ',' << pt.signal_wavelength / kNm
      << ',' << pt.idler_wavelength / kNm << ',' << to_string(pt.signal_pol) << ',' << to_string(pt.idler_pol) << ','
      << pt.residual_mismatch << '\n';
  run.emit(a.output, "qpm_solve.csv", out.str());
}

void cmd_qpm_period(const QpmArgs& a, Run& run) {
  CrystalSpec spec = load_crystal(a.crystal);
  if (a.temperature_c) spec.temperature = *a.temperature_c;
  if (!(a.signal_nm > 0.0 && a.idler_nm > 0.0)) throw ArgumentError("--signal-nm and --idler-nm must be positive");
  PhaseMatchPoint target;
  target.signal_wavelength = a.signal_nm * kNm;
  target.idler_wavelength = a.idler_nm * kNm;
  target.pump_wavelength = a.pump_nm ? *a.pump_nm * kNm : 1.0 / (1.0 / target.signal_wavelength + 1.0 / target.idler_wavelength);
  target.signal_pol = polarization_from_string(a.signal_pol);
  target.idler_pol = orthogonal(target.signal_pol);
  spec.pump_wavelength = target.pump_wavelength;
  run.add_config("crystal", to_json(spec));
  const double period = solve_period(target, spec);
  run.emit(a.output, "qpm_period.json",
           run.json_document({{"period_um", period / kUm}, {"target", to_json(target)}, {"temperature_C", spec.temperature}}));
}

void cmd_qpm_tune(const QpmArgs& a, Run& run) {
  const auto spec = prepared_crystal(a, run);
  Sweep sweep;
  if (a.variable == "temperature") {
    sweep = {SweepVariable::temperature, a.from, a.to, a.steps};
  } else if (a.variable == "pump") {
    sweep = {SweepVariable::pump_wavelength, a.from * kNm, a.to * kNm, a.steps};
  } else {
    throw ArgumentError("--variable must be 'temperature' or 'pump'");
  }
  const auto samples = tuning_curve(spec, a.segment, sweep, polarization_from_string(a.signal_pol));
  std::size_t gaps = 0;
  for (const auto& s : samples) gaps += s.point ? 0 : 1;
  if (gaps > 0) run.warn(std::to_string(gaps) + " sweep points without phase matching (written as nan)");
  std::ostringstream out;
  out << run.csv_header();
  write_tuning_csv(out, samples, sweep.variable);
  run.emit(a.output, "qpm_tune.csv", out.str());
}

void cmd_qpm_operating_point(const QpmArgs& a, Run& run) {
  CrystalSpec spec = load_crystal(a.crystal);
  run.add_config("crystal", to_json(spec));
  const double t = find_operating_temperature(spec);
  spec.temperature = t;
  json points = json::array();
  for (std::size_t j = 0; j < spec.segments.size(); ++j) points.push_back(to_json(solve_signal_idler(spec, j)));
  run.emit(a.output, "qpm_operating_point.json",
           run.json_document({{"temperature_C", t}, {"segments", points}}));
}

// ---------------------------------------------------------------- spectrum

struct SpectrumArgs {
  std::string crystal = default_crystal();
  std::optional<double> temperature_c;
  bool operating_point = false;
  bool balance = false;
  bool per_segment = false;
  int points = GridSpec{}.points_per_window;
  double lobes = GridSpec{}.lobes;
  std::string output;
  std::string spectrum_csv;
};

void cmd_spectrum(const SpectrumArgs& a, Run& run) {
  CrystalSpec spec = load_crystal(a.crystal);
  if (a.temperature_c) spec.temperature = *a.temperature_c;
  if (a.operating_point) spec = at_operating_point(spec);
  if (a.balance) spec = balance_amplitudes(spec);
  run.add_config("crystal", to_json(spec));
  const auto sa = joint_spectrum(spec, GridSpec{a.points, a.lobes});

  json body = {{"temperature_C", spec.temperature}, {"grid_points", sa.omega.size()}};
  json peaks = json::array();
  for (double w : sa.peak_omega) peaks.push_back(wavelength_of(w) / kNm);
  body["peaks_nm"] = peaks;
  try {
    const auto red = reduce_to_bins_detailed(sa, spec);
    body["state"] = to_json(red.state);
    body["overlap_delay_ps"] = red.overlap_delay / kPs;
    body["bandwidth_nm"] = {red.bandwidth[0] / kNm, red.bandwidth[1] / kNm};
  } catch (const ReductionError& e) {
    body["state"] = nullptr;
    run.warn(e.what());
  }

  std::ostringstream csv;
  csv << run.csv_header();
  write_spectrum_csv(csv, sa, a.per_segment);
  run.emit_optional(a.spectrum_csv, "spectrum.csv", csv.str());
  run.emit(a.output, "state.json", run.json_document(body));
}

// ---------------------------------------------------------------- hom

struct HomArgs {
  double n = 1.0;
  double v = 0.934;
  double dw_thz = 11.5;
  double tauc_ps = 2.40;
  double offset_fs = 0.0;
  double range_ps = 3.0;
  int points = 601;
  double pairs = 2000.0;
  std::uint64_t seed = 0;
  std::string input = "-";
  std::vector<double> omega_band_thz;
  std::vector<double> init;  // V, dw_thz, tauc_ps
  std::string output;
};

HomParams hom_params(const HomArgs& a, double n) {
  HomParams p;
  p.N = n;
  p.V = a.v;
  p.delta_omega = kTwoPi * a.dw_thz * kTHz;
  p.tau_c = a.tauc_ps * kPs;
  p.tau_offset = a.offset_fs * kFs;
  return p;
}

std::vector<double> hom_delays(const HomArgs& a) {
  if (!(a.range_ps > 0.0)) throw ArgumentError("--range-ps must be positive");
  return uniform_delays(-a.range_ps * kPs, a.range_ps * kPs, a.points);
}

void cmd_hom_model(const HomArgs& a, Run& run) {
  const auto scan = model_scan(hom_params(a, a.n), hom_delays(a));
  std::ostringstream out;
  out << run.csv_header();
  write_scan_csv(out, scan);
  run.emit(a.output, "hom_model.csv", out.str());
}

void cmd_hom_synth(const HomArgs& a, Run& run) {
  run.set_seed(a.seed);
  const auto scan = synthesize_scan(hom_params(a, a.pairs), hom_delays(a), a.pairs, a.seed);
  std::ostringstream out;
  out << run.csv_header();
  write_scan_csv(out, scan);
  run.emit(a.output, "hom_synth.csv", out.str());
}

void cmd_hom_fit(const HomArgs& a, Run& run) {
  const std::string text = read_text(a.input);
  // Carry the generating seed over from synthetic scans.
  std::istringstream lines(text);
  std::string line;
  json source_seed = nullptr;
  while (std::getline(lines, line)) {
    if (line.rfind("# seed: ", 0) == 0 && line.substr(8) != "none") source_seed = json::parse(line.substr(8));
  }
  std::istringstream in(text);
  const auto scan = read_scan_csv(in);

  FitOptions opts;
  if (!a.omega_band_thz.empty()) {
    if (a.omega_band_thz.size() != 2 || !(a.omega_band_thz[0] > 0.0 && a.omega_band_thz[1] > a.omega_band_thz[0])) {
      throw ArgumentError("--omega-band-thz takes two increasing positive values");
    }
    opts.omega_band = std::array<double, 2>{kTwoPi * a.omega_band_thz[0] * kTHz, kTwoPi * a.omega_band_thz[1] * kTHz};
  }
  if (!a.init.empty()) {
    if (a.init.size() != 3) throw ArgumentError("--init takes V, dw_THz, tauc_ps");
    HomArgs guess = a;
    guess.v = a.init[0];
    guess.dw_thz = a.init[1];
    guess.tauc_ps = a.init[2];
    HomParams p = hom_params(guess, 1.0);
    p.N = initial_estimate(scan).N;
    opts.init = p;
  }
  const auto fit = fit_homi(scan, opts);
  if (!fit.delta_omega_identifiable) run.warn("beat frequency is not identifiable from this scan (V consistent with 0)");
  if (fit.visibility_clipped) run.warn("fitted visibility clipped to [0, 1]");
  json body = {{"fit", to_json(fit)}, {"points", scan.size()}, {"source_seed", source_seed}};
  run.emit(a.output, "hom_fit.json", run.json_document(body));
}

// ---------------------------------------------------------------- tomo

struct TomoArgs {
  double p = 0.516;
  double v = 0.934;
  double phi = 0.0;
  std::string rho;
  double tau_fs = 0.0;
  double dw_thz = 11.5;
  double tauc_ps = 2.40;
  double intensity = ChainParams{}.tomography_intensity;
  std::uint64_t seed = 1;
  bool noiseless = false;
  bool no_mle = false;
  std::string settings;
  std::string input = "-";
  std::string basis = "polarization";
  std::optional<double> target_phi;
  std::vector<double> delays_fs{0.0, 47.0, -20.0};
  std::string format = "json";
  std::string table_format = "csv";
  std::string output;
};

BasisDomain basis_from_name(const std::string& name) {
  if (name == "frequency") return BasisDomain::frequency;
  if (name == "polarization") return BasisDomain::polarization;
  throw ArgumentError("basis must be 'frequency' or 'polarization'");
}

DensityMatrix input_state(const TomoArgs& a) {
  if (!a.rho.empty()) {
    const json doc = read_json(a.rho);
    return density_matrix_from_json(doc.contains("rho") ? doc.at("rho") : doc);
  }
  return rho_freq(a.p, a.v, a.phi);
}

std::vector<ProjectorSetting> tomo_settings(const TomoArgs& a) {
  return a.settings.empty() ? canonical_settings() : load_settings(a.settings);
}

void cmd_tomo_simulate(const TomoArgs& a, Run& run) {
  DensityMatrix rho = input_state(a);
  if (rho.basis() == BasisDomain::frequency) rho = mode_convert(rho, a.tau_fs * kFs, kTwoPi * a.dw_thz * kTHz);
  std::optional<std::uint64_t> seed;
  if (!a.noiseless) seed = a.seed;
  run.set_seed(seed);
  run.add_config("rho", to_json(rho));
  const auto data = simulate_counts(rho, tomo_settings(a), a.intensity, seed);
  std::ostringstream out;
  out << run.csv_header();
  write_tomography_csv(out, data);
  run.emit(a.output, "tomo_counts.csv", out.str());
}

json state_metrics(const DensityMatrix& rho, double target_phi) {
  const auto ev = rho.eigenvalues();
  return {{"fidelity", fidelity(rho, ideal_state(target_phi, rho.basis()))},
          {"target_phi_rad", target_phi},
          {"concurrence", concurrence(rho)},
          {"purity", purity(rho)},
          {"eigenvalues", {ev(0), ev(1), ev(2), ev(3)}}};
}

void cmd_tomo_reconstruct(const TomoArgs& a, Run& run) {
  std::istringstream in(read_text(a.input));
  const auto data = read_tomography_csv(in, basis_from_name(a.basis));
  const auto res = mle_tomography_detailed(data);
  json body = {{"rho", to_json(res.rho)},
               {"log_likelihood", res.log_likelihood},
               {"iterations", res.iterations},
               {"metrics", state_metrics(res.rho, a.target_phi.value_or(0.0))}};
  run.emit(a.output, "tomo_rho.json", run.json_document(body));
}

void cmd_tomo_metrics(const TomoArgs& a, Run& run) {
  const auto rho = input_state(a);
  const double target = a.target_phi.value_or(a.rho.empty() ? a.phi : 0.0);
  const json m = state_metrics(rho, target);
  if (kFormats.at(a.format) == Format::json) {
    run.emit(a.output, "tomo_metrics.json", run.json_document({{"basis", to_string(rho.basis())}, {"metrics", m}}));
    return;
  }
  std::ostringstream out;
  out.precision(12);
  out << run.csv_header() << "basis,target_phi_rad,fidelity,concurrence,purity\n"
      << to_string(rho.basis()) << ',' << target << ',' << m["fidelity"].get<double>() << ','
      << m["concurrence"].get<double>() << ',' << m["purity"].get<double>() << '\n';
  run.emit(a.output, "tomo_metrics.csv", out.str());
}

void cmd_tomo_convert(const TomoArgs& a, Run& run) {
  const auto rho = input_state(a);
  const double dw = kTwoPi * a.dw_thz * kTHz;
  const auto out = mode_convert(rho, a.tau_fs * kFs, dw);
  const double phi_in = a.rho.empty() ? a.phi : 0.0;
  const double phi = wrap_phase(phi_in + dw * a.tau_fs * kFs);
  json body = {{"phi_rad", phi},
               {"phi_over_pi", phi / kPi},
               {"concurrence_before", concurrence(rho)},
               {"concurrence_after", concurrence(out)},
               {"rho", to_json(out)}};
  run.emit(a.output, "tomo_convert.json", run.json_document(body));
}

void cmd_tomo_delay_table(const TomoArgs& a, Run& run) {
  ChainParams cp;
  cp.p = a.p;
  cp.V = a.v;
  cp.phi0 = a.phi;
  cp.delta_omega = kTwoPi * a.dw_thz * kTHz;
  cp.tau_c = a.tauc_ps * kPs;
  cp.tomography_intensity = a.intensity;
  run.add_config("chain", to_json(cp));
  std::vector<double> delays;
  for (double t : a.delays_fs) delays.push_back(t * kFs);
  std::optional<std::uint64_t> seed;
  if (!a.no_mle) seed = a.seed;
  run.set_seed(seed);
  const auto rows = delay_table(cp, delays, seed);

  if (kFormats.at(a.table_format) == Format::json) {
    json arr = json::array();
    for (const auto& r : rows) arr.push_back(to_json(r));
    run.emit(a.output, "delay_table.json", run.json_document({{"rows", arr}}));
    return;
  }
  std::ostringstream out;
  out.precision(6);
  out << run.csv_header() << "tau_fs,rate,phi_over_pi,fidelity,concurrence";
  if (seed) out << ",fidelity_mle,concurrence_mle";
  out << '\n';
  for (const auto& r : rows) {
    out << r.tau / kFs << ',' << r.rate << ',' << r.phi / kPi << ',' << r.fidelity << ',' << r.concurrence;
    if (seed) out << ',' << *r.fidelity_mle << ',' << *r.concurrence_mle;
    out << '\n';
  }
  run.emit(a.output, "delay_table.csv", out.str());
}

// ---------------------------------------------------------------- errors

struct ErrorInfo {
  std::string type;
  int code;
};

ErrorInfo classify(const std::exception& e) {
  if (dynamic_cast<const ConvergenceError*>(&e)) return {"convergence", 1};
  if (dynamic_cast<const NoPhaseMatchError*>(&e)) return {"no_phase_match", 1};
  if (dynamic_cast<const FitError*>(&e)) return {"fit", 1};
  if (dynamic_cast<const NumericalError*>(&e)) return {"numerical", 1};
  if (dynamic_cast<const PhysicalityError*>(&e)) return {"physicality", 2};
  if (dynamic_cast<const RangeError*>(&e)) return {"range", 2};
  if (dynamic_cast<const LabelError*>(&e)) return {"label", 2};
  if (dynamic_cast<const ConfigError*>(&e)) return {"config", 2};
  if (dynamic_cast<const ArgumentError*>(&e)) return {"argument", 2};
  if (dynamic_cast<const json::exception*>(&e)) return {"config", 2};
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return {"io", 2};
  return {"internal", 1};
}

int report(const Globals& g, const std::string& type, const std::string& message, int code) {
  if (g.error_json) {
    std::cerr << json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
  } else {
    std::cerr << "fbent: error: " << message << '\n';
  }
  return code;
}

template <typename T>
void add_format(CLI::App* cmd, T& args) {
  cmd->add_option("--format", args.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-bin entanglement simulator: QPM design, biphoton spectra, HOM fits and tomography"};
  app.set_version_flag("--version", FBENT_VERSION);
  app.set_config("--config", "", "TOML/INI file with option values ([qpm.solve] sections etc.)");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--output-dir", g.output_dir, "Directory for outputs without an explicit path")
      ->envname("FBENT_OUTPUT_DIR");
  app.add_flag("--error-json", g.error_json, "Report errors as JSON on stderr");

  std::function<void(Run&)> action;
  std::vector<const CLI::App*> chain{&app};
  auto bind = [&](CLI::App* cmd, auto fn, auto& args) {
    cmd->callback([&, cmd, fn]() {
      chain.push_back(cmd->get_parent());
      chain.push_back(cmd);
      action = [&args, fn](Run& run) { fn(args, run); };
    });
  };

  // qpm
  QpmArgs qa;
  auto* qpm = app.add_subcommand("qpm", "Quasi-phase-matching design")->require_subcommand(1);
  auto crystal_opts = [&](CLI::App* cmd) {
    cmd->add_option("--crystal", qa.crystal, "Crystal JSON file")->check(CLI::ExistingFile)->capture_default_str();
    cmd->add_option("--t-c", qa.temperature_c, "Override crystal temperature (C)");
    cmd->add_option("--signal-pol", qa.signal_pol, "Signal polarization")->check(CLI::IsMember({"H", "V"}))
        ->capture_default_str();
    cmd->add_option("-o,--output", qa.output, "Output file ('-' for stdout)");
  };
  auto* qsolve = qpm->add_subcommand("solve", "Phase-matched signal/idler for one segment");
  crystal_opts(qsolve);
  qsolve->add_option("--segment", qa.segment, "Segment index")->capture_default_str();
  qsolve->add_flag("--operating-point", qa.operating_point, "Move to the exchanged-pair temperature first");
  add_format(qsolve, qa);
  bind(qsolve, cmd_qpm_solve, qa);

  auto* qperiod = qpm->add_subcommand("period", "Poling period for a target wavelength pair");
  crystal_opts(qperiod);
  qperiod->add_option("--signal-nm", qa.signal_nm, "Signal wavelength (nm)")->required();
  qperiod->add_option("--idler-nm", qa.idler_nm, "Idler wavelength (nm)")->required();
  qperiod->add_option("--pump-nm", qa.pump_nm, "Pump wavelength (nm); default from energy conservation");
  bind(qperiod, cmd_qpm_period, qa);

  auto* qtune = qpm->add_subcommand("tune", "Tuning curve versus temperature or pump wavelength");
  crystal_opts(qtune);
  qtune->add_option("--segment", qa.segment, "Segment index")->capture_default_str();
  qtune->add_option("--variable", qa.variable, "temperature (C) or pump (nm)")
      ->check(CLI::IsMember({"temperature", "pump"}))->capture_default_str();
  qtune->add_option("--from", qa.from, "Sweep start")->required();
  qtune->add_option("--to", qa.to, "Sweep end")->required();
  qtune->add_option("--steps", qa.steps, "Number of sweep points")->required();
  bind(qtune, cmd_qpm_tune, qa);

  auto* qop = qpm->add_subcommand("operating-point", "Temperature where both segments emit the same pair");
  qop->add_option("--crystal", qa.crystal, "Crystal JSON file")->check(CLI::ExistingFile)->capture_default_str();
  qop->add_option("-o,--output", qa.output, "Output file ('-' for stdout)");
  bind(qop, cmd_qpm_operating_point, qa);

  // spectrum
  SpectrumArgs sa;
  auto* spectrum = app.add_subcommand("spectrum", "Joint spectral amplitude and two-bin state");
  spectrum->add_option("--crystal", sa.crystal, "Crystal JSON file")->check(CLI::ExistingFile)->capture_default_str();
  spectrum->add_option("--t-c", sa.temperature_c, "Override crystal temperature (C)");
  spectrum->add_flag("--operating-point", sa.operating_point, "Move to the exchanged-pair temperature first");
  spectrum->add_flag("--balance", sa.balance, "Equalize segment intensities");
  spectrum->add_flag("--per-segment", sa.per_segment, "Add per-segment amplitude columns");
  spectrum->add_option("--points", sa.points, "Samples per peak window")->capture_default_str();
  spectrum->add_option("--lobes", sa.lobes, "Window half-width in sinc lobes")->capture_default_str();
  spectrum->add_option("-o,--output", sa.output, "State JSON file ('-' for stdout)");
  spectrum->add_option("--spectrum-csv", sa.spectrum_csv, "Spectrum CSV file");
  bind(spectrum, cmd_spectrum, sa);

  // hom
  HomArgs ha;
  auto* hom = app.add_subcommand("hom", "Hong-Ou-Mandel interference")->require_subcommand(1);
  auto model_opts = [&](CLI::App* cmd) {
    cmd->add_option("--v", ha.v, "Visibility")->capture_default_str();
    cmd->add_option("--dw-thz", ha.dw_thz, "Bin detuning delta_omega/2pi (THz)")->capture_default_str();
    cmd->add_option("--tauc-ps", ha.tauc_ps, "Envelope half-width (ps)")->capture_default_str();
    cmd->add_option("--offset-fs", ha.offset_fs, "Delay origin (fs)")->capture_default_str();
    cmd->add_option("--range-ps", ha.range_ps, "Scan half-range (ps)")->capture_default_str();
    cmd->add_option("--points", ha.points, "Scan points")->capture_default_str();
    cmd->add_option("-o,--output", ha.output, "Output file ('-' for stdout)");
  };
  auto* hmodel = hom->add_subcommand("model", "Noise-free coincidence curve");
  model_opts(hmodel);
  hmodel->add_option("--n", ha.n, "Normalization N")->capture_default_str();
  bind(hmodel, cmd_hom_model, ha);

  auto* hsynth = hom->add_subcommand("synth", "Poisson-sampled scan");
  model_opts(hsynth);
  hsynth->add_option("--pairs", ha.pairs, "Pairs per point (N)")->capture_default_str();
  hsynth->add_option("--seed", ha.seed, "RNG seed")->capture_default_str();
  bind(hsynth, cmd_hom_synth, ha);

  auto* hfit = hom->add_subcommand("fit", "Fit the five-parameter model to a scan CSV");
  hfit->add_option("-i,--input", ha.input, "Scan CSV ('-' for stdin)")->capture_default_str();
  hfit->add_option("--omega-band-thz", ha.omega_band_thz, "Beat search band lo hi (THz)")->expected(2);
  hfit->add_option("--init", ha.init, "Start values V dw_THz tauc_ps")->expected(3);
  hfit->add_option("-o,--output", ha.output, "Output file ('-' for stdout)");
  bind(hfit, cmd_hom_fit, ha);

  // tomo
  TomoArgs ta;
  auto* tomo = app.add_subcommand("tomo", "Density matrices, mode transfer and tomography")->require_subcommand(1);
  auto state_opts = [&](CLI::App* cmd) {
    cmd->add_option("--p", ta.p, "Bin-1 weight p")->capture_default_str();
    cmd->add_option("--v", ta.v, "Coherence V")->capture_default_str();
    cmd->add_option("--phi", ta.phi, "Phase (rad)")->capture_default_str();
    cmd->add_option("--rho", ta.rho, "Density matrix JSON instead of (p, V, phi)")->check(CLI::ExistingFile);
    cmd->add_option("-o,--output", ta.output, "Output file ('-' for stdout)");
  };
  auto* tsim = tomo->add_subcommand("simulate", "Simulated projective counts");
  state_opts(tsim);
  tsim->add_option("--tau-fs", ta.tau_fs, "Mode-transfer delay for frequency states (fs)")->capture_default_str();
  tsim->add_option("--dw-thz", ta.dw_thz, "Bin detuning (THz)")->capture_default_str();
  tsim->add_option("--intensity", ta.intensity, "Expected counts for a unit-overlap projector")->capture_default_str();
  tsim->add_option("--seed", ta.seed, "RNG seed")->capture_default_str();
  tsim->add_flag("--noiseless", ta.noiseless, "Write exact means instead of Poisson samples");
  tsim->add_option("--settings", ta.settings, "Projector settings JSON")->check(CLI::ExistingFile);
  bind(tsim, cmd_tomo_simulate, ta);

  auto* trec = tomo->add_subcommand("reconstruct", "Maximum-likelihood reconstruction from counts CSV");
  trec->add_option("-i,--input", ta.input, "Counts CSV ('-' for stdin)")->capture_default_str();
  trec->add_option("--basis", ta.basis, "Basis labels of the data")->check(CLI::IsMember({"frequency", "polarization"}))
      ->capture_default_str();
  trec->add_option("--target-phi", ta.target_phi, "Phase of the fidelity target (rad)");
  trec->add_option("-o,--output", ta.output, "Output file ('-' for stdout)");
  bind(trec, cmd_tomo_reconstruct, ta);

  auto* tmet = tomo->add_subcommand("metrics", "Fidelity, concurrence and purity");
  state_opts(tmet);
  tmet->add_option("--target-phi", ta.target_phi, "Phase of the fidelity target (rad); default --phi");
  add_format(tmet, ta);
  bind(tmet, cmd_tomo_metrics, ta);

  auto* tconv = tomo->add_subcommand("convert", "Frequency-to-polarization transfer at a delay");
  state_opts(tconv);
  tconv->add_option("--tau-fs", ta.tau_fs, "Delay (fs)")->required();
  tconv->add_option("--dw-thz", ta.dw_thz, "Bin detuning (THz)")->capture_default_str();
  bind(tconv, cmd_tomo_convert, ta);

  auto* ttab = tomo->add_subcommand("delay-table", "Rate, phase, fidelity and concurrence versus delay");
  ttab->add_option("--p", ta.p, "Bin-1 weight p")->capture_default_str();
  ttab->add_option("--v", ta.v, "Visibility V")->capture_default_str();
  ttab->add_option("--phi", ta.phi, "Phase offset (rad)")->capture_default_str();
  ttab->add_option("--dw-thz", ta.dw_thz, "Bin detuning (THz)")->capture_default_str();
  ttab->add_option("--tauc-ps", ta.tauc_ps, "Envelope half-width (ps)")->capture_default_str();
  ttab->add_option("--tau-fs", ta.delays_fs, "Delays (fs)")->capture_default_str();
  ttab->add_option("--intensity", ta.intensity, "Tomography counts scale")->capture_default_str();
  ttab->add_option("--seed", ta.seed, "RNG seed for simulated tomography")->capture_default_str();
  ttab->add_flag("--no-mle", ta.no_mle, "Skip simulated tomography");
  ttab->add_option("-o,--output", ta.output, "Output file ('-' for stdout)");
  ttab->add_option("--format", ta.table_format, "Output format")->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  bind(ttab, cmd_tomo_delay_table, ta);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(g, "usage", e.what(), 2);
  }

  // Drop duplicate parent entries collected by the callbacks.
  std::vector<const CLI::App*> unique;
  for (const auto* a : chain) {
    if (a && std::find(unique.begin(), unique.end(), a) == unique.end()) unique.push_back(a);
  }

  try {
    Run run(g, unique);
    action(run);
    run.flush();
  } catch (const std::exception& e) {
    const auto info = classify(e);
    return report(g, info.type, e.what(), info.code);
  }
  return 0;
}
