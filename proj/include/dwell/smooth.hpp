#pragma once

// Scattering in a 2D smooth potential: a waveguide along x <= 0 that opens
// into a cavity at x > 0. The section plane is x = 0.

#include <cstdint>
#include <memory>
#include <string>

#include "dwell/expr.hpp"
#include "dwell/experiments.hpp"
#include "dwell/stats.hpp"
#include "dwell/vec2.hpp"

namespace dwell {

class Potential {
 public:
  virtual ~Potential() = default;
  virtual double value(double x, double y) const = 0;
  virtual Vec2 gradient(double x, double y) const = 0;
  /// A value no larger than the potential anywhere in the declared box.
  virtual double lower_bound() const { return 0.0; }
  virtual std::string name() const = 0;
};

/// C-infinity switch: 0 for x <= 0, 1 for x >= 1.
double smooth_switch(double x);
double smooth_switch_derivative(double x);

/// V = 1/2 w0^2 (1 - g s(x) G(x)) y^2 + U0 exp((x - x_w)/lambda) s(x),
/// G(x) = exp(-(x - x_c)^2 / sigma^2), s the switch above. With g = 0 the
/// system is separable.
struct CavityParams {
  double omega0 = 1.0;
  double g = 0.5;
  double x_c = 4.0;
  double sigma = 2.0;
  double u0 = 1.0;
  double x_w = 10.0;
  double lambda = 0.5;
};

class CavityPotential final : public Potential {
 public:
  explicit CavityPotential(CavityParams p);
  double value(double x, double y) const override;
  Vec2 gradient(double x, double y) const override;
  std::string name() const override { return params_.g == 0.0 ? "separable" : "cavity"; }
  const CavityParams& params() const { return params_; }
  /// End-cap term U0 exp((x - x_w)/lambda) s(x).
  double cap(double x) const;

 private:
  CavityParams params_;
};

/// V = 1/2 m w^2 y^2 everywhere.
class HarmonicChannel final : public Potential {
 public:
  HarmonicChannel(double omega, double mass);
  double value(double x, double y) const override;
  Vec2 gradient(double x, double y) const override;
  std::string name() const override { return "harmonic"; }

 private:
  double k_;
};

class FreePotential final : public Potential {
 public:
  double value(double, double) const override { return 0.0; }
  Vec2 gradient(double, double) const override { return {0.0, 0.0}; }
  std::string name() const override { return "free"; }
};

/// V = V0 |y / a|^n for even n >= 2.
class PowerWell final : public Potential {
 public:
  PowerWell(double v0, double a, int n);
  double value(double x, double y) const override;
  Vec2 gradient(double x, double y) const override;
  std::string name() const override { return "power"; }

 private:
  double v0_, a_;
  int n_;
};

/// V = 1/2 (x^2 + y^2) + 1/2 x^2 y^2, a bounded nonintegrable well.
class AnharmonicWell final : public Potential {
 public:
  double value(double x, double y) const override;
  Vec2 gradient(double x, double y) const override;
  std::string name() const override { return "anharmonic_well"; }
};

class ExpressionPotential final : public Potential {
 public:
  /// lower_bound is supplied by the user since it cannot be derived.
  ExpressionPotential(Expression v, Expression dvdx, Expression dvdy, double lower_bound);
  double value(double x, double y) const override { return v_(x, y); }
  Vec2 gradient(double x, double y) const override { return {dvdx_(x, y), dvdy_(x, y)}; }
  double lower_bound() const override { return lower_; }
  std::string name() const override { return "expression"; }

 private:
  Expression v_, dvdx_, dvdy_;
  double lower_;
};

struct SmoothSystem {
  std::shared_ptr<const Potential> potential;
  double mass = 1.0;
  double x_max = 12.0;  ///< box is (0, x_max] x [y_min, y_max]
  double y_min = -1.6;
  double y_max = 1.6;

  double transverse(double y) const { return potential->value(0.0, y); }
  double h_perp(double y, double py) const { return 0.5 * py * py / mass + transverse(y); }
};

/// Default cavity with its bounding box.
SmoothSystem default_cavity_system();
/// The cavity with g = 0.
SmoothSystem separable_system();

/// Largest |V(x, y) - V_perp(y)| over a grid on x in [-x_max, 0]. Must be <= 1e-12.
double waveguide_deviation(const SmoothSystem& system);
/// Fraction of points on the box faces x = x_max, y = y_min, y = y_max where V <= E.
double confinement_violation(const SmoothSystem& system, double energy, int points_per_face = 4096);
/// Max relative mismatch between the gradient and central differences of V over a grid in the box.
double gradient_mismatch(const Potential& potential, const SmoothSystem& box);

struct PhaseState {
  double x = 0.0, y = 0.0, px = 0.0, py = 0.0;
};

/// One kick-drift-kick leapfrog step.
PhaseState integrate_step(const PhaseState& s, double dt, const Potential& potential, double mass);
double hamiltonian(const PhaseState& s, const Potential& potential, double mass);

struct SectionState {
  double y = 0.0;
  double py = 0.0;
  double t0 = 0.0;
  double energy = 0.0;
};

struct SmoothDwell {
  double tau = 0.0;
  bool censored = false;
  std::uint64_t steps = 0;
};

inline constexpr double kDefaultSmoothDt = 1e-3;
inline constexpr double kDefaultSmoothTmax = 2000.0;

/// Integrates from the section until x returns through 0 with p_x < 0; the
/// crossing is refined by bisection on the last step to 1e-10 dt. Throws
/// EscapeOutOfBox if the orbit leaves the declared box.
SmoothDwell smooth_dwell(const SectionState& start, const SmoothSystem& system, double dt = kDefaultSmoothDt,
                         double t_max = kDefaultSmoothTmax);

/// Uniform on {H_perp < E} by rejection from the transverse box. Throws NoOpenChannel if none is found.
SectionState sample_section(SampleStream& rng, const SmoothSystem& system, double energy);

/// Integral of 2 sqrt(2m(E - V_perp))_+ dy by adaptive quadrature between turning points.
MeasureEstimate omega_sigma_smooth(const SmoothSystem& system, double energy);
/// Rejection estimate over the transverse box.
MeasureEstimate omega_sigma_mc(const SmoothSystem& system, double energy, std::uint64_t n_samples,
                               std::uint64_t seed);

struct SmoothVolumes {
  MeasureEstimate omega;
  MeasureEstimate d_omega_dE;
  double delta_e = 0.0;
};

/// 4D rejection estimate of Omega(E) over the box and dOmega/dE by central
/// difference at E +/- delta_e on the same samples.
SmoothVolumes omega_smooth(const SmoothSystem& system, double energy, std::uint64_t n_samples, std::uint64_t seed,
                           double relative_delta = 0.01, unsigned workers = 1);

struct SmoothEnsembleParams {
  std::uint64_t samples = 2000;
  double dt = kDefaultSmoothDt;
  double t_max = kDefaultSmoothTmax;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::uint64_t volume_samples = 2'000'000;
};

struct SmoothEnsembleResult {
  MeasureEstimate mean_tau;
  std::uint64_t accepted = 0;
  std::uint64_t censored = 0;
};

SmoothEnsembleResult run_smooth_ensemble(const SmoothSystem& system, double energy, const SmoothEnsembleParams& params);

/// Ensemble <tau> against (1/Omega_Sigma) dOmega/dE. The report states that
/// Omega' = Omega is assumed. Throws NoOpenChannel when Omega_Sigma = 0.
CorrespondenceReport smooth_correspondence(const SmoothSystem& system, double energy,
                                           const SmoothEnsembleParams& params);

struct EnergyDrift {
  double max_deviation = 0.0;  ///< max |E(t) - E0| / |E0|
  double secular = 0.0;  ///< max over windows of |<E>_window - <E>_first| / |E0|
};

/// Integrates `steps` steps and compares window-averaged energies.
EnergyDrift energy_drift(const PhaseState& start, const Potential& potential, double mass, double dt,
                         std::uint64_t steps, std::uint64_t window);

}  // namespace dwell
