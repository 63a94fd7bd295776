#ifndef DRC_SCAN_HPP
#define DRC_SCAN_HPP

#include <array>
#include <iosfwd>
#include <vector>

#include "drc/dissipators.hpp"
#include "drc/lindblad.hpp"
#include "drc/trap.hpp"

namespace drc {

// One offset-field point of a cooling scan: survival after the configured
// duration (all three axes combined), stationary occupation per axis, and the
// 1/e loss time of the combined slowest decay.
struct ScanPoint {
    double b_off_gauss = 0.0;
    double survival = 1.0;
    std::array<double, 3> mean_n{};
    double tau_s = 0.0;
};

struct ScanOptions {
    enum class Method { rate, lindblad };
    Method method = Method::rate;  // rate: golden-rule chains (fast, default)
    double initial_mean_n = 2.0;   // thermal start per axis
    int time_samples = 64;
    double stark_per_mf = 0.0;              // differential light shift, rad/s per m_F
    double transverse_coupling_factor = 0.3;  // x/z exchange relative to y
    int workers = 0;                        // 0 = default_worker_count()
};

// Sweeps the offset field and runs the three independent per-axis cooling
// problems at each value, with the absorbing boundary at the configured trap
// depth and the configured background heating.  Points are independent tasks;
// the result order follows b_values regardless of scheduling.
std::vector<ScanPoint> scan_offset_field(const TrapConfig& trap, const FieldConfig& field,
                                         const std::vector<double>& b_values,
                                         const DissipatorSet& diss, double duration,
                                         const ScanOptions& opt = {});

// Evenly spaced field values including both endpoints.
std::vector<double> field_range(double b_min_gauss, double b_max_gauss, int count);

// Index of the best-survival point (ties -> lowest field).
int argmax_survival(const std::vector<ScanPoint>& curve);

// Exponential lifetime of a survival curve: fit of a*exp(-t/tau).
// Throws FitDiverged when the curve has fewer than 10 samples, is not
// strictly decreasing, or the fit fails.
struct LifetimeFit {
    double tau_s = 0.0;
    double tau_err_s = 0.0;
};
LifetimeFit survival_lifetime(const std::vector<double>& times,
                              const std::vector<double>& survival);
LifetimeFit survival_lifetime(const CoolingTrajectory& traj);

// CSV writers (header row + one line per entry).
void write_scan_csv(std::ostream& os, const std::vector<ScanPoint>& curve);
void write_trajectory_csv(std::ostream& os, const std::vector<double>& times,
                          const std::array<std::vector<double>, 3>& mean_n,
                          const std::vector<double>& survival);

}  // namespace drc

#endif
