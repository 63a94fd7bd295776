#ifndef DRC_DISSIPATORS_HPP
#define DRC_DISSIPATORS_HPP

#include <array>
#include <vector>

#include "drc/trap.hpp"

namespace drc {

// Squared Clebsch-Gordan weight for sigma- absorption |F, m> -> |F+1, m-1> on the
// cycling transition, normalized so the stretched transition (m = -F) has weight 1:
// (F - m + 1)(F - m + 2) / ((2F + 1)(2F + 2)).
double absorption_weight(int f, int m);

// Squared Clebsch-Gordan weight for decay |F+1, m_excited> -> |F, m_excited - q> with
// photon polarization q in {-1, 0, +1}; the three branches sum to 1.
double emission_weight(int f, int m_excited, int q);

// One absorption-emission cycle: sigma- absorption from m_from followed by emission
// of polarization q, landing in m_to = m_from - 1 - q.
struct PumpChannel {
    int m_from;
    int m_to;
    int q;
    double weight;  // absorption_weight(m_from) * emission_weight(m_from - 1, q)
};

// All allowed optical-pumping cycles for ground manifold F, zero-weight branches
// dropped, ordered by (m_from, then q = +1, 0, -1).
std::vector<PumpChannel> pump_channels(int f);

// Full dissipative budget of a cooling run: optical pumping with its recoil,
// technical background heating, and the trap-depth absorbing boundary.
struct DissipatorSet {
    int f_total = constants::cesium::f_ground;
    double pump_rate = 0.0;  // stretched-transition scattering rate, 1/s
    std::vector<PumpChannel> channels;
    // Quanta added per scattering event along each axis: eta_i^2 * geometry_i.
    std::array<double, 3> recoil_per_event{};
    std::array<double, 3> background_heating{};  // quanta/s per axis
    double boundary_loss_rate = 0.0;             // 1/s, applied at the boundary level

    static DissipatorSet from_laser(const TrapConfig& trap, const FieldConfig& field,
                                    const LaserConfig& laser,
                                    const std::array<double, 3>& geometry = {0.4, 0.4, 0.4},
                                    const std::array<double, 3>& background = {0.0, 0.0, 0.0});

    double scatter_rate_from(int m) const;  // photon rate out of |F, m>, 1/s
    double mean_spin_step(int m) const;     // <Delta m_F> per scattering event from |F, m>
};

}  // namespace drc

#endif
