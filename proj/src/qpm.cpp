#include "fbent/qpm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fbent/constants.hpp"

namespace fbent {

namespace {

constexpr int kMaxBisection = 200;

// Runs until the bracket collapses; the caller checks the residual.
double bisect(auto&& f, double lo, double hi, double f_lo) {
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < kMaxBisection; ++i) {
    mid = 0.5 * (lo + hi);
    const double f_mid = f(mid);
    if (f_mid == 0.0 || mid == lo || mid == hi) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

}  // namespace

double CrystalSpec::total_length() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.length;
  return total;
}

const PolingSegment& CrystalSpec::segment(std::size_t index) const {
  if (index >= segments.size()) {
    throw ArgumentError("segment index " + std::to_string(index) + " out of range (crystal has " +
                        std::to_string(segments.size()) + " segments)");
  }
  return segments[index];
}

void CrystalSpec::validate() const {
  if (segments.empty()) throw ConfigError("crystal needs at least one poling segment");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!(s.period > 0.0) || !(s.length > 0.0) || !(s.amplitude_scale > 0.0) || s.amplitude_scale > 1.0) {
      throw ConfigError("segment " + std::to_string(i) +
                        ": need period > 0, length > 0 and 0 < amplitude_scale <= 1");
    }
  }
  if (!(pump_wavelength > 0.0)) throw ConfigError("pump wavelength must be positive");
  for (const auto& [axis, set] : material.sellmeier) {
    if (temperature < set.valid_temperature_C[0] || temperature > set.valid_temperature_C[1]) {
      throw ConfigError("temperature " + std::to_string(temperature) + " C outside the range of " + set.name);
    }
  }
  for (auto pol : {Polarization::H, Polarization::V}) material.set_for(pol);
}

CrystalSpec crystal_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  CrystalSpec spec;
  try {
    for (const auto& seg : doc.at("segments")) {
      spec.segments.push_back({seg.at("period_um").get<double>() * kUm, seg.at("length_mm").get<double>() * kMm,
                               seg.value("amplitude_scale", 1.0)});
    }
    spec.temperature = doc.at("temperature_C").get<double>();
    spec.pump_wavelength = doc.at("pump_nm").get<double>() * kNm;
    spec.pump_polarization = polarization_from_string(doc.value("pump_polarization", "V"));
    spec.material.axis_map.clear();
    for (const auto& [pol, axis] : doc.at("axis_map").items()) {
      spec.material.axis_map[polarization_from_string(pol)] = axis_from_string(axis.get<std::string>());
    }
    if (doc.contains("sellmeier")) {
      for (const auto& [axis, set] : doc.at("sellmeier").items()) {
        spec.material.sellmeier[axis_from_string(axis)] = sellmeier_from_json(set);
      }
    } else {
      for (const auto& [axis, file] : doc.at("sellmeier_files").items()) {
        std::filesystem::path p = file.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        auto set = load_sellmeier(p);
        if (set.axis != axis_from_string(axis)) {
          throw ConfigError(p.string() + " describes the " + to_string(set.axis) + " axis, listed under " + axis);
        }
        spec.material.sellmeier[set.axis] = std::move(set);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed crystal document: ") + e.what());
  }
  spec.validate();
  return spec;
}

CrystalSpec load_crystal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open crystal file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return crystal_from_json(doc, path.parent_path());
}

nlohmann::json to_json(const CrystalSpec& spec) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : spec.segments) {
    segs.push_back({{"period_um", s.period / kUm}, {"length_mm", s.length / kMm},
                    {"amplitude_scale", s.amplitude_scale}});
  }
  nlohmann::json axis_map = nlohmann::json::object();
  for (const auto& [pol, axis] : spec.material.axis_map) axis_map[to_string(pol)] = to_string(axis);
  nlohmann::json sellmeier = nlohmann::json::object();
  for (const auto& [axis, set] : spec.material.sellmeier) sellmeier[to_string(axis)] = to_json(set);
  return {{"segments", segs},
          {"temperature_C", spec.temperature},
          {"pump_nm", spec.pump_wavelength / kNm},
          {"pump_polarization", to_string(spec.pump_polarization)},
          {"axis_map", axis_map},
          {"sellmeier", sellmeier}};
}

nlohmann::json to_json(const PhaseMatchPoint& p) {
  return {{"pump_nm", p.pump_wavelength / kNm},
          {"signal_nm", p.signal_wavelength / kNm},
          {"idler_nm", p.idler_wavelength / kNm},
          {"signal_pol", to_string(p.signal_pol)},
          {"idler_pol", to_string(p.idler_pol)},
          {"residual_rad_per_m", p.residual_mismatch}};
}

double idler_wavelength(double pump_wavelength, double signal_wavelength) {
  const double inv = 1.0 / pump_wavelength - 1.0 / signal_wavelength;
  if (!(inv > 0.0)) throw ArgumentError("signal wavelength must exceed the pump wavelength");
  return 1.0 / inv;
}

Grating Grating::period(double period) {
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw ArgumentError("poling period must be positive and finite; use Grating::unpoled() for no grating");
  }
  return Grating(kTwoPi / period);
}

double delta_k(const Material& material, const OpticalField& pump, const OpticalField& signal,
               const OpticalField& idler, Grating grating) {
  return material.k(pump) - material.k(signal) - material.k(idler) - grating.momentum();
}

PhaseMatchPoint solve_signal_idler(const CrystalSpec& spec, std::size_t segment_index, Polarization signal_pol,
                                   const SolveOptions& options) {
  const auto grating = Grating::period(spec.segment(segment_index).period);
  const double temperature = options.temperature.value_or(spec.temperature);
  const Polarization idler_pol = orthogonal(signal_pol);
  const OpticalField pump{spec.pump_wavelength, spec.pump_polarization, temperature};

  auto mismatch = [&](double ls) {
    const double li = idler_wavelength(spec.pump_wavelength, ls);
    return delta_k(spec.material, pump, {ls, signal_pol, temperature}, {li, idler_pol, temperature}, grating);
  };

  const auto [lo, hi] = options.signal_bracket;
  if (!(lo < hi) || lo <= spec.pump_wavelength) throw ArgumentError("invalid signal bracket");
  const int n = std::max(options.scan_points, 3);

  std::vector<double> grid(n);
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) {
    grid[i] = lo + (hi - lo) * i / (n - 1);
    values[i] = mismatch(grid[i]);
  }

  std::vector<std::pair<int, int>> brackets;
  for (int i = 0; i + 1 < n; ++i) {
    if (values[i] == 0.0) {
      brackets.emplace_back(i, i);
    } else if ((values[i] < 0.0) != (values[i + 1] < 0.0) && values[i + 1] != 0.0) {
      brackets.emplace_back(i, i + 1);
    }
  }
  if (values[n - 1] == 0.0) brackets.emplace_back(n - 1, n - 1);

  if (brackets.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    std::ostringstream msg;
    msg << "no phase-matching root for segment " << segment_index << " in [" << lo / kNm << ", " << hi / kNm
        << "] nm; delta k spans [" << *mn << ", " << *mx << "] rad/m";
    throw NoPhaseMatchError(msg.str(), *mn, *mx);
  }

  std::vector<double> roots;
  for (const auto& [a, b] : brackets) {
    roots.push_back(a == b ? grid[a] : bisect(mismatch, grid[a], grid[b], values[a]));
  }

  double root = roots.front();
  if (roots.size() > 1) {
    if (!options.branch) {
      std::ostringstream msg;
      msg << "segment " << segment_index << " has " << roots.size() << " phase-matching roots (signal nm:";
      for (double r : roots) msg << ' ' << r / kNm;
      msg << "); select a branch";
      throw AmbiguityError(msg.str(), roots);
    }
    root = *options.branch == Branch::signal_short ? roots.front() : roots.back();
  }

  PhaseMatchPoint point;
  point.pump_wavelength = spec.pump_wavelength;
  point.signal_wavelength = root;
  point.idler_wavelength = idler_wavelength(spec.pump_wavelength, root);
  point.signal_pol = signal_pol;
  point.idler_pol = idler_pol;
  point.residual_mismatch = mismatch(root);
  if (!(std::abs(point.residual_mismatch) < options.tolerance)) {
    throw ConvergenceError("bisection stalled at |delta k| = " + std::to_string(point.residual_mismatch) +
                           " rad/m");
  }
  return point;
}

double solve_period(const PhaseMatchPoint& target, const CrystalSpec& context) {
  const double imbalance =
      1.0 / target.pump_wavelength - 1.0 / target.signal_wavelength - 1.0 / target.idler_wavelength;
  if (std::abs(imbalance) * target.pump_wavelength > 1e-9) {
    throw ArgumentError("target wavelengths violate energy conservation");
  }
  const double t = context.temperature;
  const double mismatch =
      delta_k(context.material, {target.pump_wavelength, context.pump_polarization, t},
              {target.signal_wavelength, target.signal_pol, t}, {target.idler_wavelength, target.idler_pol, t},
              Grating::unpoled());
  if (!(mismatch > 0.0)) {
    throw NoPhaseMatchError("k_p - k_s - k_i = " + std::to_string(mismatch) +
                                " rad/m is not positive; no first-order period exists",
                            mismatch, mismatch);
  }
  return kTwoPi / mismatch;
}

std::vector<TuningSample> tuning_curve(const CrystalSpec& spec, std::size_t segment_index, const Sweep& sweep,
                                       Polarization signal_pol, const SolveOptions& options) {
  if (sweep.steps < 1) throw ArgumentError("tuning sweep needs at least one step");
  if (sweep.steps > 1 && sweep.from == sweep.to) throw ArgumentError("tuning sweep range is empty");
  spec.segment(segment_index);

  std::vector<TuningSample> samples(sweep.steps);
  for (int i = 0; i < sweep.steps; ++i) {
    const double value =
        sweep.steps == 1 ? sweep.from : sweep.from + (sweep.to - sweep.from) * i / (sweep.steps - 1);
    samples[i].value = value;
    CrystalSpec local = spec;
    SolveOptions opts = options;
    if (sweep.variable == SweepVariable::temperature) {
      local.temperature = value;
      opts.temperature.reset();
    } else {
      local.pump_wavelength = value;
    }
    try {
      samples[i].point = solve_signal_idler(local, segment_index, signal_pol, opts);
    } catch (const NumericalError&) {
    } catch (const RangeError&) {
    }
  }
  return samples;
}

void write_tuning_csv(std::ostream& out, const std::vector<TuningSample>& samples, SweepVariable variable) {
  out << "variable,lambda_s_nm,lambda_i_nm,residual_rad_per_m\n";
  const auto old = out.precision(12);
  for (const auto& s : samples) {
    out << (variable == SweepVariable::temperature ? s.value : s.value / kNm) << ',';
    if (s.point) {
      out << s.point->signal_wavelength / kNm << ',' << s.point->idler_wavelength / kNm << ','
          << s.point->residual_mismatch << '\n';
    } else {
      out << "nan,nan,nan\n";
    }
  }
  out.precision(old);
}

double find_operating_temperature(const CrystalSpec& spec, std::size_t first, std::size_t second,
                                  std::array<double, 2> bracket) {
  spec.segment(first);
  spec.segment(second);
  // Positive when the first segment's H photon is redder than the second segment's V photon.
  auto gap = [&](double t) {
    SolveOptions opts;
    opts.temperature = t;
    const auto a = solve_signal_idler(spec, first, Polarization::H, opts);
    const auto b = solve_signal_idler(spec, second, Polarization::H, opts);
    return (a.signal_wavelength - b.idler_wavelength) / kNm;
  };
  double lo = bracket[0];
  double hi = bracket[1];
  double g_lo = gap(lo);
  const double g_hi = gap(hi);
  if ((g_lo < 0.0) == (g_hi < 0.0)) {
    throw NoPhaseMatchError("segments " + std::to_string(first) + " and " + std::to_string(second) +
                                " do not emit a common pair between " + std::to_string(lo) + " and " +
                                std::to_string(hi) + " C",
                            g_lo, g_hi);
  }
  for (int i = 0; i < kMaxBisection && hi - lo > 1e-10; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double g = gap(mid);
    if ((g < 0.0) == (g_lo < 0.0)) {
      lo = mid;
      g_lo = g;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

CrystalSpec at_operating_point(const CrystalSpec& spec) {
  CrystalSpec tuned = spec;
  tuned.temperature = find_operating_temperature(spec);
  return tuned;
}

}  // namespace fbent
