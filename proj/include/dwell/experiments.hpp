#pragma once

// Ensemble experiments on open tables and the reports built from them.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dwell/measures.hpp"

namespace dwell {

/// counts[n] is the number of accepted samples that returned after n map
/// iterations; counts[0] is always 0.
struct ReturnHistogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t accepted = 0;  ///< returned + censored
  std::uint64_t censored = 0;
  std::uint64_t corner_discarded = 0;

  void add_return(std::uint64_t n);
  void merge(const ReturnHistogram& other);
  std::uint64_t returned() const { return accepted - censored; }
  std::uint64_t total() const { return accepted + corner_discarded; }
  std::uint64_t max_n() const;
  double probability(std::uint64_t n) const;
};

struct EnsembleParams {
  std::uint64_t samples = 1'000'000;
  std::uint64_t max_iterations = kDefaultMaxIterations;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  int grid_q = 400;
  int grid_p = 400;
  double max_censored_fraction = 1e-3;
  /// Throw ExcessCensoring instead of only flagging the result.
  bool strict_censoring = false;
};

struct CensoringDiagnostic {
  std::uint64_t censored = 0;
  double fraction = 0.0;
  double mean_n_lower = 0.0;  ///< censored samples excluded
  double mean_n_bracket = 0.0;  ///< lower + N_max * fraction
  bool reliable = true;
};

struct EnsembleResult {
  ReturnHistogram histogram;
  MeasureEstimate mean_n;
  MeasureEstimate mean_tau;
  CoverageStudy coverage;
  CensoringDiagnostic censoring;
  std::uint64_t max_iterations = 0;
  std::uint64_t seed = 0;
};

/// Samples incoming states on the openings and follows each to its first
/// return. Sample i uses the stream (seed, i); the result is bitwise identical
/// for every worker count.
EnsembleResult run_scattering_ensemble(const BilliardTable& table, const ParticleSpec& particle,
                                       const EnsembleParams& params);

struct KacComparison {
  MeasureEstimate lhs;  ///< mu(C) <n>
  BoxCountEstimate rhs;  ///< mu(Gamma')
  double z = 0.0;
  bool passed = false;  ///< |z| < 3
};

KacComparison kac_check(const EnsembleResult& ensemble, const BilliardTable& table, const ParticleSpec& particle,
                        bool strict = false);

struct PermutationKac {
  double lhs = 0.0;  ///< sum over C of the return time, times the cell measure
  double rhs = 0.0;  ///< measure of the union of the forward images of C
  std::uint64_t lhs_steps = 0;
  std::uint64_t rhs_cells = 0;
};

/// Kac's identity on a finite permutation map. perm[i] is the image of cell i;
/// section lists the cells forming C.
PermutationKac kac_on_permutation(std::span<const std::uint32_t> perm, std::span<const std::uint32_t> section,
                                  double cell_measure);

struct ErgodicityVerdict {
  double fraction = 0.0;
  double sigma = 0.0;
  double allowance = 0.0;
  double threshold = 0.0;  ///< 1 - 3 sigma - allowance
  bool weakly_ergodic = false;
  bool converged = true;
};

/// Coverage-fraction verdict. The threshold is a finite-resolution construction,
/// not a property of the dynamics.
ErgodicityVerdict weak_ergodicity_test(const CoverageStudy& study, bool strict = false);

struct TailBin {
  std::uint64_t n_lo = 0;  ///< inclusive
  std::uint64_t n_hi = 0;  ///< exclusive
  std::uint64_t count = 0;
  double n_center = 0.0;
  double density = 0.0;  ///< P(n) averaged over the bin
};

struct TailDiagnostic {
  std::vector<TailBin> bins;  ///< bins used in the fit
  double power_slope = 0.0;  ///< d log P / d log n
  double power_r2 = 0.0;
  double exp_rate = 0.0;  ///< -d log P / d n
  double exp_r2 = 0.0;
  bool exponential = false;  ///< log-linear fits better than log-log
};

/// Log-binned tail fit over the largest decade of bins holding at least 10
/// counts each. Throws InsufficientTail with fewer than 1000 counts beyond n = 10.
TailDiagnostic tail_diagnostic(const ReturnHistogram& histogram);

/// Assembles the geometric bundle for a billiard from an ensemble's coverage.
ShellVolumes shell_volumes(const BilliardTable& table, const ParticleSpec& particle, const CoverageStudy& coverage);

/// <tau> = (dOmega'/dE) / Omega_Sigma.
MeasureEstimate classical_dwell_formula(const ShellVolumes& volumes);

struct SemiclassicalBundle {
  double h = 0.0;
  double density_of_states = 0.0;  ///< h^-d dOmega/dE
  double channels = 0.0;  ///< Omega_Sigma / h^(d-1)
  double wigner_from_weyl = 0.0;  ///< h rho / N
  MeasureEstimate wigner;  ///< dOmega/dE / Omega_Sigma, h-free
};

/// Weyl estimates at Planck constant h = 2 pi hbar for a system with d degrees
/// of freedom. Throws InvalidParams if h fails to cancel to 1e-12.
SemiclassicalBundle semiclassical_bundle(const ShellVolumes& volumes, double hbar, int dimensions);

/// Energy-averaged Wigner delay from externally supplied density and channel count.
double average_wigner_delay(double h, double channels, double density_of_states);

struct CorrespondenceReport {
  std::string system;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;

  std::optional<MeasureEstimate> mean_n;
  MeasureEstimate mean_tau;
  std::optional<MeasureEstimate> omega_sigma;
  std::optional<MeasureEstimate> d_omega_dE;
  std::optional<MeasureEstimate> gamma_over_c;
  std::optional<MeasureEstimate> gamma_prime_over_c;
  MeasureEstimate tau_geometric;  ///< (1/Omega_Sigma) dOmega/dE
  std::optional<MeasureEstimate> tau_accessible;  ///< (1/Omega_Sigma) dOmega'/dE
  MeasureEstimate wigner_ratio;  ///< <tau_W> / <tau>
  double correspondence_z = 0.0;
  bool correspondence_holds = true;

  std::optional<MeasureEstimate> coverage_fraction;
  std::optional<ErgodicityVerdict> ergodicity;
  std::optional<KacComparison> kac;
  std::optional<double> dwell_formula_z;  ///< <tau> vs (1/Omega_Sigma) dOmega'/dE
  std::optional<TailDiagnostic> tail;
  std::string tail_note;
  CensoringDiagnostic censoring;
  std::uint64_t corner_discarded = 0;
  bool converged = true;
  std::vector<std::string> notes;

  nlohmann::ordered_json to_json() const;
  std::string to_text() const;
};

/// Full billiard report. Throws NoOpening on a closed table.
CorrespondenceReport correspondence_report(const BilliardTable& table, const ParticleSpec& particle,
                                           const EnsembleResult& ensemble);

}  // namespace dwell
