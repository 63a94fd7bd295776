#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "drc/spectroscopy.hpp"
#include "drc/trap.hpp"

namespace drc {

// ---------------------------------------------------------------------------
// Damped least-squares fit of a measured (or synthetic) power spectrum to the
// sideband forward model: per-axis occupations and trap frequencies, a global
// instrumental line-width floor, and overall amplitude/offset.  The model's
// scattering rate is tied to the width floor (Gamma_sc = 2*pi*min_width): in
// the Lamb-Dicke regime the rate is otherwise only visible as an overall
// scale, which the amplitude already carries, so leaving it free would make
// the normal matrix singular.  Frequencies in `data` are relative to the
// optical carrier (negative = red side).
// ---------------------------------------------------------------------------

// The nine fit parameters, packed as
//   [n_x, n_y, n_z, omega_x, omega_y, omega_z, min_width, amplitude, offset].
// The trap's anharmonicities, Lamb-Dicke projections, and depth stay fixed.
struct FitModelParams {
    std::array<double, 3> mean_n{0.5, 0.5, 0.5};
    std::array<double, 3> omega{};  // rad/s
    double min_width_hz = 1.0e4;
    double amplitude = 1.0;
    double offset = 0.0;
};

// Box bounds on the packed parameter vector.
struct FitBounds {
    FitModelParams lower;
    FitModelParams upper;
    // Generous physical box around an initial guess: occupations in
    // [0, max(30, 3n)], frequencies within a factor 2, width within
    // [1/20, 20]x, amplitude and offset effectively unbounded.
    static FitBounds around(const FitModelParams& initial);
};

struct FitOptions {
    // Fit log(1+n) instead of n internally; the converged optimum is
    // invariant, uncertainties are mapped back by the delta method.
    bool log_occupation = false;
    // Weight residuals by 1/psd (averaged-PSD noise is proportional to the
    // level), which calibrates the reported uncertainties for shot-noise
    // data; plain unweighted least squares is the default.
    bool weight_by_variance = false;
    double fd_rel_step = 1e-6;  // central-difference Jacobian step
    int max_iterations = 200;
};

struct FitResult {
    FitModelParams params;
    FitModelParams uncertainties;  // 1 sigma, same packing
    Eigen::MatrixXd covariance;    // 9x9, residual-variance scaled
    double residual_norm = 0.0;    // sqrt(chi2) at the optimum
    int iterations = 0;
    bool converged = false;
};

// Forward model sampled on a relative frequency grid (Hz).
std::vector<double> fit_model_psd(const TrapConfig& trap, const FitModelParams& params,
                                  const std::vector<double>& freq_rel_hz);

// Central-difference Jacobian of the model w.r.t. the packed parameters.
Eigen::MatrixXd fit_model_jacobian(const TrapConfig& trap, const FitModelParams& params,
                                   const std::vector<double>& freq_rel_hz,
                                   double rel_step = 1e-6);

// Levenberg-damped Gauss-Newton fit.  Throws BoundsViolation (initial outside
// the box or inverted bounds), ConfigError (grid does not cover the candidate
// sidebands), FitDiverged, and SingularNormalMatrix when the normal matrix is
// rank-deficient at the solution (flat data, collided axes).
FitResult fit_spectrum(const Spectrum& data, const TrapConfig& trap,
                       const FitModelParams& initial, const FitBounds& bounds,
                       const FitOptions& options = {});

// Multi-start driver: the plain initial plus n_starts-1 deterministic
// perturbations (+-10%, seeds split from master_seed) fitted in parallel;
// the converged result with the smallest residual wins.  Bit-reproducible
// for fixed inputs regardless of worker count.
FitResult fit_spectrum_multistart(const Spectrum& data, const TrapConfig& trap,
                                  const FitModelParams& initial, const FitBounds& bounds,
                                  const FitOptions& options, int n_starts,
                                  std::uint64_t master_seed, int workers = 0);

// Hands-free starting point: trap frequencies from the largest background-
// subtracted peaks at positive frequency (assigned to axes by proximity to
// the reference trap's frequencies), occupations from band-integrated
// sideband asymmetries, width from the tallest peak's FWHM, amplitude by
// linear projection onto the model.
FitModelParams auto_initial_params(const Spectrum& data, const TrapConfig& reference);

// Cut the band [carrier - half_span, carrier + half_span] out of an absolute-
// frequency PSD and re-express it relative to the carrier.  When
// counting_bin_s > 0 the rectangular-bin rolloff sinc^2(pi f dt) of the
// counting chain is divided out.
Spectrum extract_beat_band(const Spectrum& psd_abs, double carrier_hz,
                           double half_span_hz, double counting_bin_s = 0.0);

// Flat key-value record of a fit: parameters, uncertainties, convergence
// metadata, and the covariance as a row-major array.
nlohmann::json fit_result_json(const FitResult& result);

// Physics summary of a converged fit: occupations with uncertainties and
// ground-state fractions per axis, frequencies in kHz with the deviation from
// the reference (informational), and the line-width scale note.  Throws
// ConfigError when the result did not converge.
nlohmann::json fit_report(const FitResult& result, const TrapConfig& reference);

}  // namespace drc
