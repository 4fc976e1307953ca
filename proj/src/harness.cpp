#include "usc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "usc/log.hpp"

namespace usc {

// ---------------------------------------------------------------------------
// presets and curve names

std::string to_string(Preset p) {
  switch (p) {
    case Preset::Fig2a: return "Fig2a";
    case Preset::Fig2b: return "Fig2b";
    case Preset::Fig2c: return "Fig2c";
    case Preset::Fig3EtaLow: return "Fig3_eta_low";
    case Preset::Fig3EtaMid: return "Fig3_eta_mid";
    case Preset::Fig3EtaHigh: return "Fig3_eta_high";
  }
  return "?";
}

std::vector<Preset> all_presets() {
  return {Preset::Fig2a, Preset::Fig2b, Preset::Fig2c, Preset::Fig3EtaLow, Preset::Fig3EtaMid, Preset::Fig3EtaHigh};
}

Preset parse_preset(const std::string& name) {
  for (Preset p : all_presets()) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown preset '" + name + "' (expected Fig2a, Fig2b, Fig2c, Fig3_eta_low, Fig3_eta_mid, Fig3_eta_high)");
}

std::string CurveSpec::name() const {
  return to_string(model) + "_" + to_string(gauge) + "_" + to_string(pi) + (gauge_corrected ? "_gc" : "_raw");
}

bool CurveSpec::expects_classical_overlap() const {
  const bool consistent = gauge_corrected || gauge == Gauge::Coulomb;
  const bool balanced = pi == BathCoupling::PplusQ || pi == BathCoupling::PminusQ;
  return model == ModelKind::Hopfield && consistent && balanced;
}

Truncation Truncation::doubled(int times) const {
  const int f = 1 << times;
  return Truncation{hopfield_n_cavity * f, hopfield_n_matter * f, hopfield_k * f, qrm_n_cavity * f, qrm_k * f};
}

RunConfig preset_config(Preset p) {
  RunConfig cfg;
  cfg.preset = p;
  cfg.kappa.reset();
  cfg.kappa_over_g = 0.05;
  const auto hop = [](BathCoupling pi, bool gc) { return CurveSpec{ModelKind::Hopfield, Gauge::Dipole, pi, gc}; };
  const auto qrm = [](BathCoupling pi, bool gc) { return CurveSpec{ModelKind::Rabi, Gauge::Dipole, pi, gc}; };
  switch (p) {
    case Preset::Fig2a:
      cfg.eta = 0.5;
      cfg.curves = {hop(BathCoupling::P, false), hop(BathCoupling::P, true)};
      break;
    case Preset::Fig2b:
      cfg.eta = 0.5;
      cfg.curves = {hop(BathCoupling::Q, false), hop(BathCoupling::Q, true)};
      break;
    case Preset::Fig2c:
      cfg.eta = 0.5;
      cfg.curves = {hop(BathCoupling::PplusQ, false), hop(BathCoupling::PplusQ, true), hop(BathCoupling::PminusQ, true)};
      break;
    case Preset::Fig3EtaLow:
    case Preset::Fig3EtaMid:
    case Preset::Fig3EtaHigh:
      cfg.eta = p == Preset::Fig3EtaLow ? 0.1 : (p == Preset::Fig3EtaMid ? 0.3 : 0.5);
      cfg.curves = {hop(BathCoupling::PplusQ, false), hop(BathCoupling::PplusQ, true), qrm(BathCoupling::PplusQ, false),
                    qrm(BathCoupling::PplusQ, true)};
      break;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// configuration

double RunConfig::resolved_kappa() const {
  if (kappa) return *kappa;
  return kappa_over_g * coupling();
}

void RunConfig::validate() const {
  if (!(omega_c > 0.0) || !(omega_0 > 0.0)) throw ConfigError("model.omega_c and model.omega_0 must be positive");
  if (!(eta >= 0.0)) throw ConfigError("model.eta must be non-negative");
  if (!(resolved_kappa() > 0.0)) {
    throw ConfigError("bath: kappa resolves to " + std::to_string(resolved_kappa()) +
                      "; set bath.kappa explicitly when eta = 0");
  }
  if (!(pump_ratio >= 0.0)) throw ConfigError("bath.pump_ratio must be non-negative");
  if (grid.points < 2 || !(grid.hi > grid.lo) || !(grid.lo > 0.0)) {
    throw ConfigError("grid: need points >= 2 and 0 < min < max");
  }
  if (curves.empty()) throw ConfigError("no quantum curves configured");
  const Truncation& t = truncation;
  if (t.hopfield_n_cavity < 2 || t.hopfield_n_matter < 2 || t.qrm_n_cavity < 2) {
    throw ConfigError("truncation: Fock dimensions must be >= 2");
  }
  if (t.hopfield_k < 2 || t.hopfield_k > t.hopfield_n_cavity * t.hopfield_n_matter) {
    throw ConfigError("truncation.hopfield_k must lie in [2, n_cavity * n_matter]");
  }
  if (t.qrm_k < 2 || t.qrm_k > 2 * t.qrm_n_cavity) throw ConfigError("truncation.qrm_k must lie in [2, 2 * qrm_n_cavity]");
  if (convergence_doublings < 0) throw ConfigError("report.convergence_doublings must be >= 0");
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string join_curves(const std::vector<CurveSpec>& curves) {
  std::string out;
  for (const CurveSpec& c : curves) out += (out.empty() ? "" : ",") + c.name();
  return out;
}

}  // namespace

Provenance RunConfig::provenance() const {
  Provenance p;
  p["model.omega_c"] = fmt(omega_c);
  p["model.omega_0"] = fmt(omega_0);
  p["model.eta"] = fmt(eta);
  p["model.diamagnetic"] = diamagnetic ? "true" : "false";
  p["bath.kappa"] = fmt(resolved_kappa());
  p["bath.pump_ratio"] = fmt(pump_ratio);
  p["bath.rate_model"] = "flat";
  p["curves"] = join_curves(curves);
  p["grid.min"] = fmt(grid.lo);
  p["grid.max"] = fmt(grid.hi);
  p["grid.points"] = std::to_string(grid.points);
  p["truncation.hopfield_n_cavity"] = std::to_string(truncation.hopfield_n_cavity);
  p["truncation.hopfield_n_matter"] = std::to_string(truncation.hopfield_n_matter);
  p["truncation.hopfield_k"] = std::to_string(truncation.hopfield_k);
  p["truncation.qrm_n_cavity"] = std::to_string(truncation.qrm_n_cavity);
  p["truncation.qrm_k"] = std::to_string(truncation.qrm_k);
  p["report.overlap_linf"] = fmt(thresholds.overlap_linf);
  p["report.peak_shift"] = fmt(thresholds.peak_shift);
  p["report.divergence_linf"] = fmt(thresholds.divergence_linf);
  p["report.prominence"] = fmt(thresholds.prominence);
  p["normalization"] = "unit_max";
  p["preset"] = preset ? to_string(*preset) : "none";
  return p;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (trim(v.substr(pos)).empty()) return i;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(v);
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

ModelKind to_model(const std::string& v) {
  const std::string s = lower(v);
  if (s == "hopfield") return ModelKind::Hopfield;
  if (s == "qrm" || s == "rabi") return ModelKind::Rabi;
  throw ConfigError("model.model: expected hopfield or qrm, got '" + v + "'");
}

Gauge to_gauge(const std::string& v) {
  const std::string s = lower(v);
  if (s == "dipole") return Gauge::Dipole;
  if (s == "coulomb") return Gauge::Coulomb;
  throw ConfigError("model.gauge: expected dipole or coulomb, got '" + v + "'");
}

}  // namespace

RunConfig parse_config(const std::string& text, RunConfig base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  std::map<std::string, std::string> kv;
  for (const auto& [section, children] : tree) {
    if (children.empty()) throw ConfigError("config: key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : children) kv[section + "." + key] = trim(value.data());
  }

  RunConfig cfg = std::move(base);
  const auto physics_override = [&](const std::string& key) {
    if (cfg.preset) warn("preset " + to_string(*cfg.preset) + ": explicit " + key + " overrides the preset value");
  };

  std::vector<ModelKind> models;
  std::optional<Gauge> gauge;
  std::vector<BathCoupling> pis;
  std::vector<bool> corrections;
  bool curves_touched = false;

  for (const auto& [key, v] : kv) {
    if (key == "model.omega_c") { physics_override(key); cfg.omega_c = to_double(key, v); }
    else if (key == "model.omega_0") { physics_override(key); cfg.omega_0 = to_double(key, v); }
    else if (key == "model.eta") { physics_override(key); cfg.eta = to_double(key, v); }
    else if (key == "model.diamagnetic") { physics_override(key); cfg.diamagnetic = to_bool(key, v); }
    else if (key == "model.model") {
      physics_override(key);
      curves_touched = true;
      for (const std::string& m : split_list(lower(v))) {
        if (m == "both") {
          models = {ModelKind::Hopfield, ModelKind::Rabi};
        } else {
          models.push_back(to_model(m));
        }
      }
    } else if (key == "model.gauge") { physics_override(key); curves_touched = true; gauge = to_gauge(v); }
    else if (key == "bath.pi") {
      physics_override(key);
      curves_touched = true;
      for (const std::string& p : split_list(v)) pis.push_back(parse_bath_coupling(p));
    } else if (key == "bath.gauge_corrected") {
      physics_override(key);
      curves_touched = true;
      if (lower(v) == "both") {
        corrections = {false, true};
      } else {
        corrections = {to_bool(key, v)};
      }
    } else if (key == "bath.kappa") { physics_override(key); cfg.kappa = to_double(key, v); }
    else if (key == "bath.kappa_over_g") { physics_override(key); cfg.kappa.reset(); cfg.kappa_over_g = to_double(key, v); }
    else if (key == "bath.pump_ratio") { physics_override(key); cfg.pump_ratio = to_double(key, v); }
    else if (key == "bath.rate_model") {
      if (lower(v) != "flat") throw ConfigError("bath.rate_model: only 'flat' is supported");
    }
    else if (key == "grid.min") cfg.grid.lo = to_double(key, v);
    else if (key == "grid.max") cfg.grid.hi = to_double(key, v);
    else if (key == "grid.points") cfg.grid.points = to_int(key, v);
    else if (key == "truncation.hopfield_n_cavity") cfg.truncation.hopfield_n_cavity = to_int(key, v);
    else if (key == "truncation.hopfield_n_matter") cfg.truncation.hopfield_n_matter = to_int(key, v);
    else if (key == "truncation.hopfield_k") cfg.truncation.hopfield_k = to_int(key, v);
    else if (key == "truncation.qrm_n_cavity") cfg.truncation.qrm_n_cavity = to_int(key, v);
    else if (key == "truncation.qrm_k") cfg.truncation.qrm_k = to_int(key, v);
    else if (key == "output.csv") cfg.output.csv = v;
    else if (key == "output.svg") cfg.output.svg = v;
    else if (key == "output.report") cfg.output.report = v;
    else if (key == "report.overlap_linf") cfg.thresholds.overlap_linf = to_double(key, v);
    else if (key == "report.peak_shift") cfg.thresholds.peak_shift = to_double(key, v);
    else if (key == "report.divergence_linf") cfg.thresholds.divergence_linf = to_double(key, v);
    else if (key == "report.prominence") cfg.thresholds.prominence = to_double(key, v);
    else if (key == "report.convergence_doublings") cfg.convergence_doublings = to_int(key, v);
    else throw ConfigError("config: unknown key '" + key + "'");
  }

  if (curves_touched) {
    // Unspecified curve axes keep the values of the first existing curve.
    const CurveSpec first = cfg.curves.empty() ? CurveSpec{} : cfg.curves.front();
    if (models.empty()) models = {first.model};
    if (pis.empty()) pis = {first.pi};
    if (corrections.empty()) corrections = {first.gauge_corrected};
    cfg.curves.clear();
    for (ModelKind m : models) {
      for (bool gc : corrections) {
        for (BathCoupling pi : pis) cfg.curves.push_back(CurveSpec{m, gauge.value_or(first.gauge), pi, gc});
      }
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

// ---------------------------------------------------------------------------
// pipeline

PipelineError::PipelineError(std::string stage, std::string curve, const std::string& what)
    : Error("[" + stage + (curve.empty() ? "" : " / " + curve) + "] " + what),
      stage_(std::move(stage)),
      curve_(std::move(curve)) {}

namespace {

template <class F>
auto in_stage(const char* stage, const std::string& curve, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, curve, e.what());
  }
}

}  // namespace

ModelParams model_params(const RunConfig& cfg, const CurveSpec& curve) {
  ModelParams p;
  p.omega_c = cfg.omega_c;
  p.omega_0 = cfg.omega_0;
  p.eta = cfg.eta;
  p.model = curve.model;
  p.gauge = curve.gauge;
  p.diamagnetic = cfg.diamagnetic;
  p.space = curve.model == ModelKind::Hopfield
                ? HilbertSpace::boson(cfg.truncation.hopfield_n_cavity, cfg.truncation.hopfield_n_matter)
                : HilbertSpace::two_level(cfg.truncation.qrm_n_cavity);
  return p;
}

BathSpec bath_spec(const RunConfig& cfg, const CurveSpec& curve) {
  BathSpec b;
  b.pi = curve.pi;
  b.gauge_corrected = curve.gauge_corrected;
  b.kappa = cfg.resolved_kappa();
  b.pump = cfg.pump_ratio * b.kappa;
  return b;
}

namespace {

struct ModelCacheEntry {
  ModelParams params;
  EigenSystem eig;
  CavityOperators ops;
};

ModelCacheEntry prepare_model(const RunConfig& cfg, const CurveSpec& curve) {
  const std::string name = curve.name();
  ModelCacheEntry e;
  e.params = model_params(cfg, curve);
  const int k = curve.model == ModelKind::Hopfield ? cfg.truncation.hopfield_k : cfg.truncation.qrm_k;
  const ComplexMatrix h = in_stage("hamiltonian", name, [&] { return build_hamiltonian(e.params); });
  e.eig = in_stage("eigensystem", name, [&] { return hermitian_eig_lowest(h, k); });
  e.ops = in_stage("hamiltonian", name, [&] { return gauge_corrected_cavity_op(e.params); });
  return e;
}

CurveResult curve_from_model(const RunConfig& cfg, const CurveSpec& curve, const ModelCacheEntry& model) {
  const std::string name = curve.name();
  const BathSpec bath = bath_spec(cfg, curve);
  const int k = curve.model == ModelKind::Hopfield ? cfg.truncation.hopfield_k : cfg.truncation.qrm_k;

  const ComplexMatrix pi = bath_operator(model.ops, bath, curve.gauge);
  GmeSolution gme;
  gme.transitions = in_stage("transitions", name, [&] { return dressed_transitions(model.eig, pi, k); });
  gme.liouvillian = in_stage("liouvillian", name, [&] {
    bath.validate();
    const ComplexMatrix parts[] = {gme_dissipator(gme.transitions, bath), pump_dissipator(gme.transitions, bath)};
    return build_liouvillian(gme.transitions.energies, parts);
  });
  gme.rho = in_stage("steady_state", name, [&] { return steady_state(gme.liouvillian); });

  const std::vector<double> grid = make_grid(cfg.grid.lo, cfg.grid.hi, cfg.grid.points);
  CurveResult r;
  r.spec = curve;
  r.trace_residual = trace_residual(gme.liouvillian);
  r.spectrum = in_stage("spectrum", name, [&] {
    return unit_max(emission_spectrum(gme.liouvillian, gme.transitions, gme.rho, grid));
  });
  Provenance& p = r.spectrum.provenance;
  p["curve"] = name;
  p["model"] = to_string(curve.model);
  p["gauge"] = to_string(curve.gauge);
  p["pi"] = to_string(curve.pi);
  p["gauge_corrected"] = curve.gauge_corrected ? "true" : "false";
  p["eta"] = fmt(cfg.eta);
  p["omega_c"] = fmt(cfg.omega_c);
  p["omega_0"] = fmt(cfg.omega_0);
  p["kappa"] = fmt(bath.kappa);
  p["pump"] = fmt(bath.pump);
  p["n_cavity"] = std::to_string(model.params.space.cavity_dim());
  p["n_matter"] = std::to_string(model.params.space.matter_dim());
  p["k"] = std::to_string(k);
  p["normalization"] = "unit_max";
  r.peaks = find_peaks(r.spectrum, cfg.thresholds.prominence);
  r.expects_overlap = curve.expects_classical_overlap();
  return r;
}

std::string model_key(const CurveSpec& c) { return to_string(c.model) + "/" + to_string(c.gauge); }

}  // namespace

CurveResult compute_curve(const RunConfig& cfg, const CurveSpec& curve) {
  cfg.validate();
  return curve_from_model(cfg, curve, prepare_model(cfg, curve));
}

RunResult run(const RunConfig& cfg) {
  cfg.validate();
  RunResult result;
  ComparisonReport& rep = result.report;
  rep.parameters = cfg.provenance();
  rep.provenance_hash = provenance_hash(rep.parameters);
  rep.thresholds = cfg.thresholds;

  const std::vector<double> grid = make_grid(cfg.grid.lo, cfg.grid.hi, cfg.grid.points);
  ClassicalParams cp;
  cp.omega_c = cfg.omega_c;
  cp.omega_0 = cfg.omega_0;
  cp.g = cfg.coupling();
  cp.kappa = cfg.resolved_kappa();
  Spectrum classical = in_stage("classical", "classical", [&] { return classical_spectrum(grid, cp); });
  if (*std::max_element(classical.intensity.begin(), classical.intensity.end()) > 0.0) {
    classical = unit_max(classical);
    classical.provenance = rep.parameters;
    classical.provenance["curve"] = "classical";
    rep.classical_available = true;
    rep.classical_peaks = find_peaks(classical, cfg.thresholds.prominence);
    result.classical = classical;
  } else {
    warn("classical spectrum is identically zero (g = 0); quantum-classical comparison skipped");
  }

  // Dressed eigensystems are shared between curves with the same model and gauge.
  std::map<std::string, ModelCacheEntry> cache;
  for (const CurveSpec& curve : cfg.curves) {
    const std::string key = model_key(curve);
    if (!cache.contains(key)) cache.emplace(key, prepare_model(cfg, curve));
    CurveResult r = curve_from_model(cfg, curve, cache.at(key));
    if (result.classical) {
      r.vs_classical = compare_spectra(r.spectrum, *result.classical, cfg.thresholds.prominence);
      const SpectrumComparison& c = *r.vs_classical;
      if (r.expects_overlap) {
        r.pass = c.linf <= cfg.thresholds.overlap_linf && c.peak_shift_max <= cfg.thresholds.peak_shift;
      } else {
        r.pass = c.linf > cfg.thresholds.divergence_linf || c.peak_count_a != c.peak_count_b;
      }
    }
    rep.pass = rep.pass && r.pass;
    rep.curves.push_back(std::move(r));
  }

  if (cfg.convergence_doublings > 0) rep.convergence = convergence_sweep(cfg, cfg.convergence_doublings);
  return result;
}

std::vector<ConvergenceRow> convergence_sweep(const RunConfig& cfg, int doublings) {
  if (doublings < 1) throw ConfigError("convergence_sweep: doublings must be >= 1");
  cfg.validate();
  std::vector<ConvergenceRow> rows;
  std::map<std::string, Spectrum> previous;
  std::map<std::string, double> last_delta;
  for (int step = 0; step <= doublings; ++step) {
    RunConfig c = cfg;
    c.truncation = cfg.truncation.doubled(step);
    c.convergence_doublings = 0;
    std::map<std::string, ModelCacheEntry> cache;
    for (const CurveSpec& curve : c.curves) {
      const std::string key = model_key(curve);
      if (!cache.contains(key)) cache.emplace(key, prepare_model(c, curve));
      const CurveResult r = curve_from_model(c, curve, cache.at(key));
      ConvergenceRow row;
      row.step = step;
      row.curve = curve.name();
      const ModelParams mp = model_params(c, curve);
      row.n_cavity = mp.space.cavity_dim();
      row.n_matter = mp.space.matter_dim();
      row.k = curve.model == ModelKind::Hopfield ? c.truncation.hopfield_k : c.truncation.qrm_k;
      if (const auto it = previous.find(row.curve); it != previous.end()) {
        for (std::size_t i = 0; i < r.spectrum.size(); ++i) {
          row.delta = std::max(row.delta, std::abs(r.spectrum.intensity[i] - it->second.intensity[i]));
        }
        if (const auto d = last_delta.find(row.curve); d != last_delta.end() && row.delta > d->second) {
          std::ostringstream msg;
          msg << "convergence: " << row.curve << " delta grew from " << d->second << " to " << row.delta
              << " at doubling " << step;
          warn(msg.str());
        }
        last_delta[row.curve] = row.delta;
      }
      previous[row.curve] = r.spectrum;
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// output

std::string provenance_hash(const Provenance& p) {
  std::uint64_t h = 14695981039346656037ull;
  const auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [k, v] : p) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string format_csv(const Provenance& provenance, const std::vector<std::string>& names,
                       const std::vector<const Spectrum*>& spectra) {
  if (names.size() != spectra.size() || spectra.empty()) throw ContractError("format_csv: need one name per spectrum");
  const std::size_t n = spectra.front()->size();
  for (const Spectrum* s : spectra) {
    if (s->size() != n || s->omega != spectra.front()->omega) throw ContractError("format_csv: spectra grids differ");
  }
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# provenance: " << provenance_hash(provenance) << '\n';
  for (const auto& [k, v] : provenance) os << "# " << k << " = " << v << '\n';
  os << "omega";
  for (const std::string& name : names) os << ',' << name;
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    os << spectra.front()->omega[i];
    for (const Spectrum* s : spectra) os << ',' << s->intensity[i];
    os << '\n';
  }
  return os.str();
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# provenance: ";
      if (line.rfind(tag, 0) == 0) t.provenance_hash = trim(line.substr(tag.size()));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!header) {
      if (cells.empty() || cells[0] != "omega") throw ConfigError("csv: header must start with 'omega'");
      t.columns.assign(cells.begin() + 1, cells.end());
      t.values.resize(t.columns.size());
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size() + 1) throw ConfigError("csv: row has the wrong number of cells: " + line);
    t.omega.push_back(to_double("csv omega", cells[0]));
    for (std::size_t c = 0; c < t.columns.size(); ++c) t.values[c].push_back(to_double("csv " + t.columns[c], cells[c + 1]));
  }
  if (!header) throw ConfigError("csv: no header row");
  return t;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<const Spectrum*>& spectra, const std::vector<std::string>& labels,
                       const std::string& title, const Provenance& provenance) {
  if (spectra.empty()) throw ContractError("emit_svg: no spectra to plot");
  if (labels.size() != spectra.size()) throw ContractError("emit_svg: need one label per spectrum");
  const auto& grid = spectra.front()->omega;
  for (const Spectrum* s : spectra) {
    if (s->omega != grid) throw ContractError("emit_svg: spectra must share a grid");
  }

  constexpr double width = 900, height = 540, left = 70, right = 230, top = 40, bottom = 60;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  const double xmin = grid.front(), xmax = grid.back();
  double ymax = 0.0;
  for (const Spectrum* s : spectra) ymax = std::max(ymax, *std::max_element(s->intensity.begin(), s->intensity.end()));
  if (!(ymax > 0.0)) ymax = 1.0;
  const auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double y) { return top + ph - y / ymax * ph; };
  static const char* palette[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<desc>provenance: " << provenance_hash(provenance) << '\n';
  for (const auto& [k, v] : provenance) os << xml_escape(k) << " = " << xml_escape(v) << '\n';
  os << "</desc>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << xml_escape(title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks
  const double xspan = xmax - xmin;
  const double xstep = xspan > 2.0 ? 0.5 : (xspan > 0.5 ? 0.1 : (xspan > 0.05 ? 0.01 : 0.001));
  for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-12; x += xstep) {
    os << "<line x1=\"" << sx(x) << "\" y1=\"" << top + ph << "\" x2=\"" << sx(x) << "\" y2=\"" << top + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << sx(x) << "\" y=\"" << top + ph + 20
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << std::setprecision(3)
       << std::defaultfloat << x << std::fixed << std::setprecision(2) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = ymax * i / 4.0;
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(y) << "\" x2=\"" << left << "\" y2=\"" << sy(y)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << y << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">omega / omega_0</text>\n";
  os << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\""
     << " transform=\"rotate(-90 18 " << top + ph / 2 << ")\">normalized intensity</text>\n";

  for (std::size_t c = 0; c < spectra.size(); ++c) {
    const char* color = palette[c % std::size(palette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.3\""
       << " points=\"";
    const Spectrum& s = *spectra[c];
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? " " : "") << sx(s.omega[i]) << ',' << sy(s.intensity[i]);
    os << "\"/>\n";
    const double ly = top + 16 + 20.0 * c;
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << xml_escape(labels[c]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_svg(const std::vector<const Spectrum*>& spectra, const std::vector<std::string>& labels,
              const std::string& title, const Provenance& provenance, const std::filesystem::path& path) {
  write_atomic(path, render_svg(spectra, labels, title, provenance));
}

std::string report_json(const ComparisonReport& report) {
  using nlohmann::json;
  const auto peaks_json = [](const std::vector<Peak>& peaks) {
    json arr = json::array();
    for (const Peak& p : peaks) {
      arr.push_back({{"omega", p.omega}, {"height", p.height}, {"halfwidth", p.halfwidth}, {"prominence", p.prominence}});
    }
    return arr;
  };
  json j;
  j["provenance_hash"] = report.provenance_hash;
  j["parameters"] = report.parameters;
  j["thresholds"] = {{"overlap_linf", report.thresholds.overlap_linf},
                     {"peak_shift", report.thresholds.peak_shift},
                     {"divergence_linf", report.thresholds.divergence_linf},
                     {"prominence", report.thresholds.prominence}};
  j["classical_available"] = report.classical_available;
  j["classical_peaks"] = peaks_json(report.classical_peaks);
  json curves = json::array();
  for (const CurveResult& c : report.curves) {
    json cj;
    cj["name"] = c.spec.name();
    cj["model"] = to_string(c.spec.model);
    cj["gauge"] = to_string(c.spec.gauge);
    cj["pi"] = to_string(c.spec.pi);
    cj["gauge_corrected"] = c.spec.gauge_corrected;
    cj["expectation"] = c.expects_overlap ? "overlap" : "divergence";
    cj["peaks"] = peaks_json(c.peaks);
    cj["trace_residual"] = c.trace_residual;
    if (c.vs_classical) {
      const double shift = c.vs_classical->peak_shift_max;
      cj["vs_classical"] = {{"linf", c.vs_classical->linf},
                            {"peak_shift_max", std::isfinite(shift) ? json(shift) : json(nullptr)},
                            {"peak_count", c.vs_classical->peak_count_a},
                            {"peak_count_classical", c.vs_classical->peak_count_b}};
    }
    cj["pass"] = c.pass;
    curves.push_back(cj);
  }
  j["curves"] = curves;
  json conv = json::array();
  for (const ConvergenceRow& r : report.convergence) {
    conv.push_back({{"step", r.step}, {"curve", r.curve}, {"n_cavity", r.n_cavity}, {"n_matter", r.n_matter},
                    {"k", r.k}, {"delta", r.delta}});
  }
  j["convergence"] = conv;
  j["pass"] = report.pass;
  return j.dump(2) + "\n";
}

void write_outputs(const RunConfig& cfg, const RunResult& result) {
  std::vector<const Spectrum*> spectra;
  std::vector<std::string> names;
  if (result.classical) {
    spectra.push_back(&*result.classical);
    names.push_back("classical");
  }
  for (const CurveResult& c : result.report.curves) {
    spectra.push_back(&c.spectrum);
    names.push_back(c.spec.name());
  }
  const Provenance& prov = result.report.parameters;
  in_stage("output", "", [&] {
    if (!cfg.output.csv.empty()) write_atomic(cfg.output.csv, format_csv(prov, names, spectra));
    if (!cfg.output.svg.empty()) {
      std::ostringstream title;
      title << (cfg.preset ? to_string(*cfg.preset) + ": " : "") << "eta = " << cfg.eta << ", kappa = " << cfg.resolved_kappa();
      emit_svg(spectra, names, title.str(), prov, cfg.output.svg);
    }
    if (!cfg.output.report.empty()) write_atomic(cfg.output.report, report_json(result.report));
    return 0;
  });
}

// ---------------------------------------------------------------------------
// invariant suite

std::vector<InvariantCheck> run_invariant_suite() {
  std::vector<InvariantCheck> out;
  const auto check = [&out](const std::string& name, auto&& body) {
    InvariantCheck c;
    c.name = name;
    try {
      std::ostringstream detail;
      c.pass = body(detail);
      c.detail = detail.str();
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("exception: ") + e.what();
    }
    out.push_back(c);
  };

  ModelParams hop;
  hop.eta = 0.5;
  hop.space = HilbertSpace::boson(12, 12);

  check("hamiltonian reconstruction", [&](std::ostream& d) {
    const ComplexMatrix h = build_hamiltonian(hop);
    const EigenSystem es = hermitian_eig(h);
    const double err = max_abs(h - es.vectors * es.values.asDiagonal() * es.vectors.adjoint());
    d << "max|H - V L V^dag| = " << err;
    return err <= kNumericPolicy.reconstruction_rel * max_abs(h);
  });

  check("dipole/coulomb eigenvalues", [&](std::ostream& d) {
    ModelParams c = hop;
    c.gauge = Gauge::Coulomb;
    const auto ed = excitation_energies(hop, 10);
    const auto ec = excitation_energies(c, 10);
    double err = 0.0;
    for (std::size_t i = 0; i < ed.size(); ++i) err = std::max(err, std::abs(ed[i] - ec[i]));
    d << "max difference " << err;
    return err <= 1e-8;
  });

  check("polariton poles", [&](std::ostream& d) {
    const PolePair num = numeric_polariton_poles(hop);
    const PolePair ref = hopfield_poles_resonant(0.5, 1.0);
    const double err = std::max(std::abs(num.omega_minus - ref.omega_minus), std::abs(num.omega_plus - ref.omega_plus));
    d << "numeric (" << num.omega_minus << ", " << num.omega_plus << "), error " << err;
    return err <= 1e-5;
  });

  const ComplexMatrix h = build_hamiltonian(hop);
  const EigenSystem eig = hermitian_eig(h);
  const CavityOperators ops = gauge_corrected_cavity_op(hop);
  BathSpec bath;
  bath.kappa = 0.025;
  bath.pump = 1e-4 * bath.kappa;

  check("liouvillian invariants", [&](std::ostream& d) {
    const GmeSolution s = solve_gme(eig, bath_operator(ops, bath, Gauge::Dipole), bath, 12);
    const LiouvillianDiagnostics diag = check_liouvillian(s.liouvillian);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> rs(s.rho, Eigen::EigenvaluesOnly);
    d << "trace residual " << diag.trace_residual << ", max Re eig " << diag.max_real_eigenvalue << ", min rho eig "
      << rs.eigenvalues().minCoeff();
    return diag.trace_residual <= 1e-10 && diag.max_real_eigenvalue <= 1e-8 && rs.eigenvalues().minCoeff() >= -1e-8;
  });

  check("zero pump relaxes to the dressed ground state", [&](std::ostream& d) {
    BathSpec b = bath;
    b.pump = 0.0;
    const GmeSolution s = solve_gme(eig, bath_operator(ops, b, Gauge::Dipole), b, 12);
    ComplexMatrix ground = ComplexMatrix::Zero(12, 12);
    ground(0, 0) = 1.0;
    const double err = max_abs(s.rho - ground);
    d << "max|rho - |0><0|| = " << err;
    return err <= 1e-8;
  });

  check("double sum equals collapsed dissipator", [&](std::ostream& d) {
    const TransitionSet t = dressed_transitions(eig, bath_operator(ops, bath, Gauge::Dipole), 12);
    const double err = max_abs(gme_dissipator_double_sum(t, bath) - lindblad_dissipator(t.x_plus, bath.kappa));
    d << "max difference " << err;
    return err <= 1e-12;
  });

  check("P+Q and P-Q spectra coincide", [&](std::ostream& d) {
    const std::vector<double> grid = make_grid(0.4, 1.9, 300);
    BathSpec plus = bath, minus = bath;
    plus.pi = BathCoupling::PplusQ;
    minus.pi = BathCoupling::PminusQ;
    const GmeSolution a = solve_gme(eig, bath_operator(ops, plus, Gauge::Dipole), plus, 12);
    const GmeSolution b = solve_gme(eig, bath_operator(ops, minus, Gauge::Dipole), minus, 12);
    const Spectrum sa = unit_max(emission_spectrum(a.liouvillian, a.transitions, a.rho, grid));
    const Spectrum sb = unit_max(emission_spectrum(b.liouvillian, b.transitions, b.rho, grid));
    double err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) err = std::max(err, std::abs(sa.intensity[i] - sb.intensity[i]));
    d << "linf " << err;
    return err <= 1e-10;
  });
  return out;
}

}  // namespace usc
