#include "drc/dissipators.hpp"

#include <string>

#include "drc/errors.hpp"

namespace drc {

double absorption_weight(int f, int m) {
    if (m < -f || m > f) return 0.0;
    const double num = double(f - m + 1) * double(f - m + 2);
    return num / (double(2 * f + 1) * double(2 * f + 2));
}

double emission_weight(int f, int m_excited, int q) {
    const int m_f = m_excited - q;
    if (m_f < -f || m_f > f || m_excited < -(f + 1) || m_excited > f + 1) return 0.0;
    switch (q) {
        case 1:
            return double(f + m_f + 1) * double(f + m_f + 2) /
                   (double(2 * f + 1) * double(2 * f + 2));
        case 0:
            return double(f - m_f + 1) * double(f + m_f + 1) /
                   (double(2 * f + 1) * double(f + 1));
        case -1:
            return double(f - m_f + 1) * double(f - m_f + 2) /
                   (double(2 * f + 1) * double(2 * f + 2));
        default:
            throw ConfigError("photon polarization q must be -1, 0, or +1");
    }
}

std::vector<PumpChannel> pump_channels(int f) {
    std::vector<PumpChannel> out;
    for (int m = -f; m <= f; ++m) {
        const double absorb = absorption_weight(f, m);
        for (int q : {1, 0, -1}) {
            const double w = absorb * emission_weight(f, m - 1, q);
            if (w == 0.0) continue;
            out.push_back({m, m - 1 - q, q, w});
        }
    }
    return out;
}

DissipatorSet DissipatorSet::from_laser(const TrapConfig& trap, const FieldConfig& field,
                                        const LaserConfig& laser,
                                        const std::array<double, 3>& geometry,
                                        const std::array<double, 3>& background) {
    DissipatorSet d;
    d.f_total = field.f_total;
    d.pump_rate = laser.scattering_rate();
    d.channels = pump_channels(d.f_total);
    for (Axis a : all_axes) {
        const int i = axis_index(a);
        const double eta = lamb_dicke(trap, a);
        d.recoil_per_event[i] = eta * eta * geometry[i];
        if (background[i] < 0.0)
            throw ConfigError("background heating must be non-negative on axis " +
                              std::string(axis_name(a)));
        d.background_heating[i] = background[i];
    }
    return d;
}

double DissipatorSet::scatter_rate_from(int m) const {
    double acc = 0.0;
    for (const auto& c : channels)
        if (c.m_from == m) acc += c.weight;
    return pump_rate * acc;
}

double DissipatorSet::mean_spin_step(int m) const {
    double total = 0.0, drift = 0.0;
    for (const auto& c : channels) {
        if (c.m_from != m) continue;
        total += c.weight;
        drift += c.weight * (c.m_to - c.m_from);
    }
    return total > 0.0 ? drift / total : 0.0;
}

}  // namespace drc
