#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "drc/spectroscopy.hpp"

namespace drc {

// ---------------------------------------------------------------------------
// Heterodyne detection chain: the fluorescence spectrum beats against a local
// oscillator offset by `carrier_offset_hz`, and a single-photon counter
// records the intensity as a stream of click times.  The beat is modeled at
// the intensity level — an inhomogeneous Poisson process whose rate is
//
//   lambda(t) = mean_rate * (1 + sum_k m_k cos(2 pi f_k t + phi_k)),
//
// one tone per spectral component at f_k = carrier_offset + component center.
// Each tone's phase diffuses as a Wiener process with D = 2*pi*FWHM, which
// gives the tone its Lorentzian line width within a single record.
// Modulation depths split the total budget in proportion to the square root
// of the component weights (field amplitudes beat against the local
// oscillator), so the averaged PSD of many click streams reproduces the model
// spectrum shape on top of the flat shot-noise floor of level 2*mean_rate.
// Binning at width dt rolls tones off by the counting transfer sinc^2(pi f dt).
// ---------------------------------------------------------------------------

// Photon arrival record.  Timestamps are strictly increasing, in [0, duration).
struct ClickStream {
    double duration = 0.0;  // s
    std::vector<double> timestamps;
    std::uint64_t seed = 0;
};

// Spectral model driving the rate modulation: the Lorentzian decomposition of
// the fluorescence spectrum plus the total modulation budget sum_k m_k.
struct SpectrumModel {
    std::vector<SidebandComponent> components;
    double total_modulation = 0.5;  // sum of tone depths, must stay below 1
};

// Draw one click stream.  Deterministic per (model, rates, seed): tone phases
// and line-width detunings are drawn first (in component order), then the
// thinning candidates.  Throws ConfigError when fewer than 100 clicks are
// expected or the carrier offset does not clear the spectral extent, and
// ModulationOverflow when the modulation budget reaches 1.
ClickStream simulate_click_stream(const SpectrumModel& model, double mean_rate,
                                  double carrier_offset_hz, double duration,
                                  std::uint64_t seed);

// Welch spectral estimate of a click record.
struct PsdEstimate {
    Spectrum spectrum;             // absolute frequency, 0 .. 1/(2*bin_width)
    double window_length_s = 0.0;  // resolution bandwidth = 1/window_length
    double overlap = 0.0;
    int segments = 0;      // periodograms averaged within one stream
    int realizations = 1;  // independent streams averaged together
};

// Bin the clicks at bin_width, split into Hann-windowed segments of
// window_length with the given overlap fraction, and average the segment
// periodograms.  The signal is the binned rate in 1/s with the segment mean
// removed, so a homogeneous stream gives a flat floor at 2*mean_rate and a
// rate modulation of amplitude A integrates to a peak of power A^2/2.
// Throws WindowTooLong (duration < 2*window_length) and ConfigError.
PsdEstimate welch_psd(const ClickStream& stream, double window_length_s, double overlap,
                      double bin_width_s);

// Same estimator on an explicit uniformly sampled signal (test/diagnostic
// entry point; samples are values at t = i*bin_width from t = 0).
PsdEstimate welch_psd_signal(const std::vector<double>& signal, double window_length_s,
                             double overlap, double bin_width_s);

// Pointwise mean of estimates on identical grids; realization counts add.
// Throws GridMismatch.
PsdEstimate average_psds(const std::vector<PsdEstimate>& estimates);

// Full chain at one working point: n_realizations click streams with seeds
// split_seed(master_seed, k), Welch-transformed in parallel and averaged.
// Bit-identical for fixed inputs regardless of worker count.
PsdEstimate averaged_heterodyne_psd(const SpectrumModel& model, double mean_rate,
                                    double carrier_offset_hz, double duration,
                                    double window_length_s, double overlap,
                                    double bin_width_s, int n_realizations,
                                    std::uint64_t master_seed, int workers = 0);

// Binary click-stream container: 8-byte magic "DRCCLK01", then duration,
// seed, click count, and the timestamps as little-endian 64-bit values.
void write_clicks_binary(std::ostream& os, const ClickStream& stream);
ClickStream read_clicks_binary(std::istream& is);

// CSV fallback: a "t_s" header then one timestamp per row.
void write_clicks_csv(std::ostream& os, const ClickStream& stream);

}  // namespace drc
