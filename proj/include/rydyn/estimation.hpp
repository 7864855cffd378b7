#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rydyn/kinetics.hpp"

namespace rydyn {

enum class Observable { loss, counts };

std::string to_string(Observable o);
Observable parse_observable(const std::string& text);  ///< "loss" or "counts"

struct ProbeSample {
  double r3 = 0.0;     ///< s^-1
  double value = 0.0;  ///< loss rate or scaled counts, s^-1
  double sigma = 1.0;
};

/// Probe-intensity scan at a fixed excitation. `known` carries R2, A_r, A_s,
/// Gamma_r and the dark exchange rate; gamma, Gamma_s and f_d are the unknowns.
struct ProbeScanDataset {
  Observable observable = Observable::loss;
  std::vector<ProbeSample> samples;
  bool has_sigma = true;  ///< false: unit weights
  KineticsParams known;
  DetectionGeometry geometry;

  void validate() const;
};

enum class FitMode {
  standard,  ///< gamma and Gamma_s (loss) or gamma and amplitude (counts), Gamma_r held fixed
  combined,  ///< gamma and the identifiable loss combination gamma Gamma_s / A_s + Gamma_r
  dark,      ///< standard loss fit plus the dark capacity f_d
};

std::string to_string(FitMode m);
FitMode parse_fit_mode(const std::string& text);

struct FitOptions {
  FitMode mode = FitMode::standard;
  int max_iterations = 500;
  double step_tolerance = 1e-8;  ///< relative parameter step
};

struct FitResult {
  Observable observable = Observable::loss;
  FitMode mode = FitMode::standard;
  std::vector<std::string> names;
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd residuals;  ///< data - model
  double chi_square = 0.0;    ///< weighted residual sum
  int degrees_of_freedom = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  double gamma = 0.0;
  double other_loss = 0.0;        ///< Gamma_s (derived in combined mode)
  double loss_combination = 0.0;  ///< gamma Gamma_s / A_s + Gamma_r
  double amplitude = 0.0;         ///< counts: R2 times the detection product
  double dark_fraction = 0.0;

  double value(const std::string& name) const;  ///< throws DomainError for unknown names
  double error(const std::string& name) const;  ///< 1-sigma from the covariance diagonal
};

/// Model prediction for one R3 given the fitted parameter vector.
double probe_model(const ProbeScanDataset& d, FitMode mode, const Eigen::VectorXd& parameters, double r3);

/// Deterministic starting point: gamma from the half-saturation knee, Gamma_s
/// (or the amplitude) from the R3 = 0 intercept.
Eigen::VectorXd initial_guess(const ProbeScanDataset& d, FitMode mode);

/// Weighted Levenberg-Marquardt fit of the loss curve.
FitResult fit_loss_curve(const ProbeScanDataset& d, const FitOptions& options = {});
/// Same solver for the probe count curve; the amplitude absorbs R2 and geometry.
FitResult fit_count_curve(const ProbeScanDataset& d, const FitOptions& options = {});
/// Dispatches on d.observable.
FitResult fit_dataset(const ProbeScanDataset& d, const FitOptions& options = {});

/// Independent fits, OpenMP across datasets.
std::vector<FitResult> fit_batch(std::span<const ProbeScanDataset> datasets, const FitOptions& options = {});
/// Serial reference; identical results.
std::vector<FitResult> fit_batch_serial(std::span<const ProbeScanDataset> datasets,
                                        const FitOptions& options = {});

enum class NoiseKind { none, gaussian, poisson };

std::string to_string(NoiseKind k);
NoiseKind parse_noise_kind(const std::string& text);

struct NoiseModel {
  NoiseKind kind = NoiseKind::none;
  double relative_sigma = 0.05;  ///< gaussian
  double exposure = 1.0;         ///< poisson: seconds of counting per point
};

/// Exact model values on `grid` plus optional noise from a generator seeded
/// with `seed`; identical seeds give identical datasets.
ProbeScanDataset synthesize_dataset(const KineticsParams& truth, const DetectionGeometry& geometry,
                                    Observable observable, std::span<const double> grid,
                                    const NoiseModel& noise, std::uint64_t seed);

/// Evenly spaced R3 grid on [0, max].
std::vector<double> probe_grid(double max_r3, int points);

enum class SpeedConvention { rms, mean };

struct CaptureParams {
  double density = 1e13;        ///< m^-3
  double temperature = 100e-6;  ///< K
  double c6 = 0.0;              ///< J m^6
  double mass = 0.0;            ///< kg, 0 selects Rb-87
  SpeedConvention speed = SpeedConvention::rms;

  void validate() const;
};

/// C6 given as C6/h in GHz um^6, returned in J m^6.
double c6_from_ghz_um6(double c6_ghz_um6);

/// eta v pi (C6 / kT)^(1/3).
double capture_rate(const CaptureParams& p);
double thermal_speed(double temperature, double mass, SpeedConvention convention);

/// exp(-dE / kT).
double boltzmann_suppression(double energy_gap, double temperature);

/// Mean free-electron number, production / dissipation.
double electron_steady(double production, double dissipation);

}  // namespace rydyn
