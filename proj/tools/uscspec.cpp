// uscspec: quantum vs classical emission spectra of an ultrastrongly
// coupled cavity-dipole system.
//
//   uscspec run --preset Fig2c --out results
//   uscspec poles --eta 0.5
//   uscspec converge --preset Fig3_eta_high --doublings 1
//   uscspec compare results/spectra.csv --a classical --b hopfield_dipole_P+Q_gc
//   uscspec --seed-check
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 threshold failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "usc/harness.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kThreshold = 4 };

usc::RunConfig resolve_config(const std::string& config_path, const std::string& preset) {
  usc::RunConfig base = preset.empty() ? usc::RunConfig{} : usc::preset_config(usc::parse_preset(preset));
  if (config_path.empty()) {
    base.validate();
    return base;
  }
  return usc::load_config(config_path, base);
}

void route_outputs(usc::RunConfig& cfg, const std::string& out_dir) {
  if (out_dir.empty()) return;
  fs::create_directories(out_dir);
  const std::string stem = cfg.preset ? usc::to_string(*cfg.preset) : std::string("spectra");
  if (cfg.output.csv.empty()) cfg.output.csv = (fs::path(out_dir) / (stem + ".csv")).string();
  if (cfg.output.svg.empty()) cfg.output.svg = (fs::path(out_dir) / (stem + ".svg")).string();
  if (cfg.output.report.empty()) cfg.output.report = (fs::path(out_dir) / (stem + "_report.json")).string();
}

void print_report(const usc::ComparisonReport& rep) {
  std::cout << "provenance " << rep.provenance_hash << '\n';
  if (rep.classical_available) {
    std::cout << "classical peaks:";
    for (const usc::Peak& p : rep.classical_peaks) std::cout << ' ' << std::setprecision(6) << p.omega;
    std::cout << '\n';
  }
  for (const usc::CurveResult& c : rep.curves) {
    std::cout << std::left << std::setw(30) << c.spec.name() << std::right;
    std::cout << " peaks:";
    for (const usc::Peak& p : c.peaks) std::cout << ' ' << std::setprecision(6) << p.omega;
    if (c.vs_classical) {
      std::cout << "  linf=" << std::setprecision(4) << c.vs_classical->linf
                << "  shift=" << c.vs_classical->peak_shift_max << "  expect="
                << (c.expects_overlap ? "overlap" : "divergence") << "  " << (c.pass ? "pass" : "FAIL");
    }
    std::cout << '\n';
  }
  for (const usc::ConvergenceRow& r : rep.convergence) {
    std::cout << "converge step " << r.step << ' ' << r.curve << " N=" << r.n_cavity << 'x' << r.n_matter
              << " K=" << r.k << " delta=" << std::setprecision(3) << r.delta << '\n';
  }
  std::cout << (rep.pass ? "PASS" : "FAIL") << '\n';
}

void print_poles(double eta, double omega_0, double omega_c) {
  const auto line = [](const char* label, double lo, double hi) {
    std::cout << std::left << std::setw(34) << label << std::right << std::fixed << std::setprecision(8) << std::setw(14)
              << lo << std::setw(14) << hi << '\n';
  };
  std::cout << std::left << std::setw(34) << "formula" << std::right << std::setw(14) << "omega_-" << std::setw(14)
            << "omega_+" << '\n';
  const double g = eta * omega_c;
  line("hopfield (general)", usc::hopfield_poles_general(omega_0, omega_c, g).omega_minus,
       usc::hopfield_poles_general(omega_0, omega_c, g).omega_plus);
  if (omega_c == omega_0) {
    const usc::PolePair r = usc::hopfield_poles_resonant(eta, omega_0);
    line("hopfield (resonant)", r.omega_minus, r.omega_plus);
    const usc::PolePair bs = usc::bloch_siegert_poles(eta, omega_0);
    line("bloch-siegert limit", bs.omega_minus, bs.omega_plus);
    const usc::FlaggedPolePair nd = usc::no_diamagnetic_poles(eta, omega_0);
    line(nd.lower_pole_valid ? "no diamagnetic term" : "no diamagnetic term (unstable)", nd.poles.omega_minus,
         nd.poles.omega_plus);
    const usc::PolePair q = usc::qrm_bs_poles(eta, omega_0);
    line("qrm bloch-siegert", q.omega_minus, q.omega_plus);
    std::cout << "ground state shift " << std::setprecision(12) << usc::ground_state_energy(eta, omega_0) << '\n';
  }
  usc::ModelParams p;
  p.omega_0 = omega_0;
  p.omega_c = omega_c;
  p.eta = eta;
  p.space = usc::HilbertSpace::boson(40, 40);
  const usc::PolePair n = usc::numeric_polariton_poles(p);
  line("hopfield numeric (N=40)", n.omega_minus, n.omega_plus);
}

int compare_columns(const std::string& file, const std::string& a, const std::string& b, double prominence) {
  std::ifstream in(file);
  if (!in) throw usc::ConfigError("cannot open " + file);
  std::stringstream ss;
  ss << in.rdbuf();
  const usc::CsvTable t = usc::parse_csv(ss.str());
  const auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (t.columns[i] == name) {
        usc::Spectrum s;
        s.omega = t.omega;
        s.intensity = t.values[i];
        return usc::unit_max(s);
      }
    }
    throw usc::ConfigError("column '" + name + "' not in " + file);
  };
  const usc::SpectrumComparison c = usc::compare_spectra(column(a), column(b), prominence);
  std::cout << "linf " << std::setprecision(6) << c.linf << "\npeak_shift_max " << c.peak_shift_max << "\npeaks "
            << c.peak_count_a << ' ' << c.peak_count_b << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum vs classical emission spectra of ultrastrongly coupled cavity-dipole systems"};
  app.require_subcommand(0, 1);
  bool seed_check = false;
  app.add_flag("--seed-check", seed_check, "Run the invariant self-test suite");

  std::string config_path, preset, out_dir;
  int converge_steps = 0;
  auto* run_cmd = app.add_subcommand("run", "Compute spectra, compare against the classical model");
  run_cmd->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  run_cmd->add_option("--preset", preset, "Fig2a|Fig2b|Fig2c|Fig3_eta_low|Fig3_eta_mid|Fig3_eta_high");
  run_cmd->add_option("--out", out_dir, "Output directory for CSV/SVG/report");
  run_cmd->add_option("--converge", converge_steps, "Also run this many (N, K) doublings")->check(CLI::NonNegativeNumber);

  double eta = 0.5, omega_0 = 1.0, omega_c = 1.0;
  auto* poles_cmd = app.add_subcommand("poles", "Print the analytic pole formulas");
  poles_cmd->add_option("--eta", eta, "Normalized coupling")->check(CLI::NonNegativeNumber);
  poles_cmd->add_option("--omega-0", omega_0, "Dipole frequency");
  poles_cmd->add_option("--omega-c", omega_c, "Cavity frequency");

  int doublings = 1;
  auto* conv_cmd = app.add_subcommand("converge", "Truncation convergence table");
  conv_cmd->add_option("--config", config_path, "Config file")->check(CLI::ExistingFile);
  conv_cmd->add_option("--preset", preset, "Preset name");
  conv_cmd->add_option("--doublings", doublings, "Number of (N, K) doublings")->check(CLI::PositiveNumber);
  conv_cmd->add_option("--out", out_dir, "Output directory for the report");

  std::string csv_file, col_a = "classical", col_b;
  double prominence = 0.05;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare two columns of a spectra CSV");
  cmp_cmd->add_option("file", csv_file, "CSV written by run")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--a", col_a, "First column");
  cmp_cmd->add_option("--b", col_b, "Second column")->required();
  cmp_cmd->add_option("--prominence", prominence, "Peak prominence fraction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (seed_check) {
      bool ok = true;
      for (const usc::InvariantCheck& c : usc::run_invariant_suite()) {
        std::cout << (c.pass ? "ok   " : "FAIL ") << c.name << ": " << c.detail << '\n';
        ok = ok && c.pass;
      }
      if (!ok) return kNumerical;
      if (app.get_subcommands().empty()) return kOk;
    }

    if (run_cmd->parsed()) {
      usc::RunConfig cfg = resolve_config(config_path, preset);
      if (converge_steps > 0) cfg.convergence_doublings = converge_steps;
      route_outputs(cfg, out_dir);
      const usc::RunResult result = usc::run(cfg);
      usc::write_outputs(cfg, result);
      print_report(result.report);
      return result.report.pass ? kOk : kThreshold;
    }
    if (poles_cmd->parsed()) {
      print_poles(eta, omega_0, omega_c);
      return kOk;
    }
    if (conv_cmd->parsed()) {
      const usc::RunConfig cfg = resolve_config(config_path, preset);
      usc::ComparisonReport rep;
      rep.parameters = cfg.provenance();
      rep.provenance_hash = usc::provenance_hash(rep.parameters);
      rep.thresholds = cfg.thresholds;
      rep.convergence = usc::convergence_sweep(cfg, doublings);
      for (const usc::ConvergenceRow& r : rep.convergence) {
        std::cout << "step " << r.step << ' ' << std::left << std::setw(30) << r.curve << std::right << " N=" << r.n_cavity
                  << 'x' << r.n_matter << " K=" << r.k << " delta=" << std::setprecision(3) << r.delta << '\n';
      }
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        usc::write_atomic(fs::path(out_dir) / "convergence_report.json", usc::report_json(rep));
      }
      return kOk;
    }
    if (cmp_cmd->parsed()) return compare_columns(csv_file, col_a, col_b, prominence);

    std::cout << app.help();
    return kOk;
  } catch (const usc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const usc::PipelineError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const usc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
