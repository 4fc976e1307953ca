#pragma once

// Run configuration, figure presets, the end-to-end quantum/classical
// pipeline, convergence sweeps and CSV/SVG/JSON emission.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "usc/gme.hpp"
#include "usc/models.hpp"
#include "usc/spectra.hpp"

namespace usc {

enum class Preset { Fig2a, Fig2b, Fig2c, Fig3EtaLow, Fig3EtaMid, Fig3EtaHigh };

std::string to_string(Preset p);
Preset parse_preset(const std::string& name);
std::vector<Preset> all_presets();

/// One quantum curve: model, gauge and bath coupling.
struct CurveSpec {
  ModelKind model = ModelKind::Hopfield;
  Gauge gauge = Gauge::Dipole;
  BathCoupling pi = BathCoupling::PplusQ;
  bool gauge_corrected = true;

  std::string name() const;
  /// True for the configuration that should reproduce the classical
  /// spectrum: Hopfield, gauge consistent, Pi = (P +- Q)/sqrt(2).
  bool expects_classical_overlap() const;
};

struct GridSpec {
  double lo = 0.02;
  double hi = 2.6;
  int points = 2000;
};

struct Truncation {
  int hopfield_n_cavity = 15;
  int hopfield_n_matter = 15;
  int hopfield_k = 20;
  int qrm_n_cavity = 30;
  int qrm_k = 24;

  Truncation doubled(int times) const;
};

struct Thresholds {
  double overlap_linf = 0.05;
  double peak_shift = 0.005;
  double divergence_linf = 0.10;
  double prominence = 0.05;
};

struct OutputSpec {
  std::string csv;
  std::string svg;
  std::string report;
};

struct RunConfig {
  double omega_c = 1.0;
  double omega_0 = 1.0;
  double eta = 0.5;
  bool diamagnetic = true;
  std::optional<double> kappa;  // absolute, units of omega_0
  double kappa_over_g = 0.05;   // used when kappa is not set
  double pump_ratio = kDefaultPumpRatio;
  std::vector<CurveSpec> curves{CurveSpec{}};
  GridSpec grid;
  Truncation truncation;
  Thresholds thresholds;
  OutputSpec output;
  std::optional<Preset> preset;
  int convergence_doublings = 0;

  double coupling() const { return eta * omega_c; }
  double resolved_kappa() const;
  /// Throws ConfigError on values outside the model's domain.
  void validate() const;
  /// Fully resolved parameter set, keyed "section.key".
  Provenance provenance() const;
};

/// Physics parameters for a named figure preset.
RunConfig preset_config(Preset p);

/// Parses a sectioned key-value file ([model], [bath], [grid], [truncation],
/// [output], [report]) on top of `base`. Keys that override preset physics
/// are reported through warn(). Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
RunConfig parse_config(const std::string& text, RunConfig base = {});

/// Per-model truncated space and model parameters for a curve.
ModelParams model_params(const RunConfig& cfg, const CurveSpec& curve);
BathSpec bath_spec(const RunConfig& cfg, const CurveSpec& curve);

struct CurveResult {
  CurveSpec spec;
  Spectrum spectrum;  // UnitMax
  std::vector<Peak> peaks;
  double trace_residual = 0.0;
  std::optional<SpectrumComparison> vs_classical;
  bool expects_overlap = false;
  bool pass = true;
};

struct ConvergenceRow {
  int step = 0;
  std::string curve;
  int n_cavity = 0;
  int n_matter = 0;
  int k = 0;
  double delta = 0.0;  // linf to the previous step's spectrum (0 for step 0)
};

struct ComparisonReport {
  std::string provenance_hash;
  Provenance parameters;
  std::vector<Peak> classical_peaks;
  bool classical_available = false;
  std::vector<CurveResult> curves;
  std::vector<ConvergenceRow> convergence;
  Thresholds thresholds;
  bool pass = true;
};

struct RunResult {
  std::optional<Spectrum> classical;  // UnitMax; absent when identically zero
  ComparisonReport report;
};

/// Error raised from inside the pipeline; names the stage and curve.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, std::string curve, const std::string& what);
  const std::string& stage() const { return stage_; }
  const std::string& curve() const { return curve_; }

 private:
  std::string stage_;
  std::string curve_;
};

/// Quantum spectrum for one curve (UnitMax).
CurveResult compute_curve(const RunConfig& cfg, const CurveSpec& curve);

/// Full pipeline without file output.
RunResult run(const RunConfig& cfg);

/// Writes CSV, SVG and JSON report to the paths in cfg.output (empty paths skipped).
void write_outputs(const RunConfig& cfg, const RunResult& result);

/// Repeats the quantum curves with (N, K) doubled `doublings` times.
std::vector<ConvergenceRow> convergence_sweep(const RunConfig& cfg, int doublings);

/// 16-hex-digit FNV-1a digest of the provenance map.
std::string provenance_hash(const Provenance& p);

/// CSV text: "# provenance: <hash>", "# key = value" lines, then
/// "omega,<curve names>" and one row per grid point.
std::string format_csv(const Provenance& provenance, const std::vector<std::string>& names,
                       const std::vector<const Spectrum*>& spectra);

struct CsvTable {
  std::string provenance_hash;
  std::vector<std::string> columns;  // excluding omega
  std::vector<double> omega;
  std::vector<std::vector<double>> values;  // one vector per column
};

CsvTable parse_csv(const std::string& text);

/// Standalone SVG 1.1 line plot; throws ContractError for an empty list.
std::string render_svg(const std::vector<const Spectrum*>& spectra, const std::vector<std::string>& labels,
                       const std::string& title, const Provenance& provenance);
void emit_svg(const std::vector<const Spectrum*>& spectra, const std::vector<std::string>& labels,
              const std::string& title, const Provenance& provenance, const std::filesystem::path& path);

std::string report_json(const ComparisonReport& report);

/// Writes `content` to `path` through a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct InvariantCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Fast self-test of the structural invariants (CLI --seed-check).
std::vector<InvariantCheck> run_invariant_suite();

}  // namespace usc
