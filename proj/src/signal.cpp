#include "drc/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>

#include "drc/constants.hpp"
#include "drc/errors.hpp"
#include "drc/seeding.hpp"
#include "drc/worker_pool.hpp"

namespace drc {

namespace {

static_assert(std::endian::native == std::endian::little,
              "click-stream container assumes a little-endian host");

constexpr char kClickMagic[8] = {'D', 'R', 'C', 'C', 'L', 'K', '0', '1'};

// One spectral component as a phase-diffusing tone.  A Wiener phase with
// diffusion D = 2*pi*FWHM gives the component its Lorentzian line shape
// within a single record — the same mechanism that broadens the physical
// line.  The phase walk is advanced lazily on a node grid of spacing
// 1/(40*FWHM) (piecewise-linear in between, which distorts the width at the
// few-percent level) as the strictly increasing candidate times sweep by.
struct Tone {
    double depth = 0.0;       // m_k
    double omega = 0.0;       // rad/s, absolute beat frequency
    double node_spacing = 0.0;  // s, zero = coherent tone
    double sigma = 0.0;       // phase std per node step
    double phase_a = 0.0;     // phase at node and node+1
    double phase_b = 0.0;
    std::int64_t node = 0;

    double modulation(double t, std::mt19937_64& rng,
                      std::normal_distribution<double>& gauss) {
        if (node_spacing <= 0.0) return depth * std::cos(omega * t + phase_a);
        while (t >= node_spacing * static_cast<double>(node + 1)) {
            ++node;
            phase_a = phase_b;
            phase_b += sigma * gauss(rng);
        }
        const double frac = (t - node_spacing * static_cast<double>(node)) / node_spacing;
        const double phase = phase_a + frac * (phase_b - phase_a);
        return depth * std::cos(omega * t + phase);
    }
};

// Build the tone table for one realization: modulation depths proportional to
// the square root of the component weights (beat amplitudes against the local
// oscillator), initial phases uniform, then one Gaussian draw per tone to arm
// the first phase-diffusion step.
std::vector<Tone> draw_tones(const SpectrumModel& model, double carrier_offset_hz,
                             std::mt19937_64& rng,
                             std::normal_distribution<double>& gauss) {
    double amplitude_sum = 0.0;
    for (const SidebandComponent& c : model.components) {
        if (c.rate > 0.0) amplitude_sum += std::sqrt(c.rate);
    }
    std::vector<Tone> tones;
    if (amplitude_sum <= 0.0) return tones;

    std::uniform_real_distribution<double> phase_dist(0.0, constants::two_pi);
    for (const SidebandComponent& c : model.components) {
        if (c.rate <= 0.0) continue;
        const double phase = phase_dist(rng);
        const double depth =
            model.total_modulation * std::sqrt(c.rate) / amplitude_sum;
        if (depth < 1e-6 * model.total_modulation) continue;  // < 1e-12 of the power
        Tone tone;
        tone.depth = depth;
        tone.omega = constants::two_pi * (carrier_offset_hz + c.center_frequency_hz);
        tone.phase_a = phase;
        if (c.width_hz > 0.0) {
            tone.node_spacing = 1.0 / (40.0 * c.width_hz);
            tone.sigma = std::sqrt(constants::two_pi * c.width_hz * tone.node_spacing);
            tone.phase_b = phase + tone.sigma * gauss(rng);
        }
        tones.push_back(tone);
    }
    return tones;
}

double modulated_rate(double mean_rate, std::vector<Tone>& tones, double t,
                      std::mt19937_64& rng, std::normal_distribution<double>& gauss) {
    double m = 1.0;
    for (Tone& tone : tones) m += tone.modulation(t, rng, gauss);
    return mean_rate * m;
}

std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

// Shared Welch engine.  `fill_rate` writes nfft rate samples (1/s) starting at
// the given bin index; the engine demeans, Hann-windows, and averages the
// segment periodograms with the variance-preserving 1/(fs * sum w^2) scaling,
// so a flat rate signal of mean R gives a floor 2R and a modulation of
// amplitude A integrates to A^2/2.
PsdEstimate welch_core(std::int64_t total_bins, double window_length_s, double overlap,
                       double bin_width_s,
                       const std::function<void(std::int64_t, int, double*)>& fill_rate) {
    if (!(bin_width_s > 0.0)) throw ConfigError("bin width must be positive");
    if (!(window_length_s > 0.0)) throw ConfigError("window length must be positive");
    if (!(overlap >= 0.0) || !(overlap < 1.0)) {
        throw ConfigError("overlap fraction must lie in [0, 1)");
    }
    int nfft = static_cast<int>(std::llround(window_length_s / bin_width_s));
    nfft += nfft & 1;  // keep the grid even so Nyquist is a bin
    if (nfft < 8) throw ConfigError("window must span at least 8 bins");
    if (total_bins < 2 * static_cast<std::int64_t>(nfft)) {
        throw WindowTooLong("record holds " + std::to_string(total_bins) +
                            " bins, need at least two windows of " + std::to_string(nfft));
    }
    const int hop = std::max(1, static_cast<int>(std::llround(nfft * (1.0 - overlap))));
    const double fs = 1.0 / bin_width_s;

    std::vector<double> window(nfft);
    double window_power = 0.0;
    for (int i = 0; i < nfft; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(constants::two_pi * i / nfft));
        window_power += window[i] * window[i];
    }

    double* in = fftw_alloc_real(nfft);
    fftw_complex* out = fftw_alloc_complex(nfft / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        plan = fftw_plan_dft_r2c_1d(nfft, in, out, FFTW_ESTIMATE);
    }

    const int n_freq = nfft / 2 + 1;
    std::vector<double> accum(n_freq, 0.0);
    int segments = 0;
    for (std::int64_t start = 0; start + nfft <= total_bins; start += hop) {
        fill_rate(start, nfft, in);
        double mean = 0.0;
        for (int i = 0; i < nfft; ++i) mean += in[i];
        mean /= nfft;
        for (int i = 0; i < nfft; ++i) in[i] = (in[i] - mean) * window[i];
        fftw_execute(plan);
        for (int k = 0; k < n_freq; ++k) {
            accum[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
        }
        ++segments;
    }
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);

    PsdEstimate estimate;
    estimate.window_length_s = window_length_s;
    estimate.overlap = overlap;
    estimate.segments = segments;
    estimate.realizations = 1;
    estimate.spectrum.frequency_hz.resize(n_freq);
    estimate.spectrum.psd.resize(n_freq);
    const double scale = 1.0 / (fs * window_power * segments);
    for (int k = 0; k < n_freq; ++k) {
        estimate.spectrum.frequency_hz[k] = fs * static_cast<double>(k) / nfft;
        const double one_sided = (k == 0 || k == nfft / 2) ? 1.0 : 2.0;
        estimate.spectrum.psd[k] = one_sided * scale * accum[k];
    }
    estimate.spectrum.resolution_bandwidth_hz = 1.0 / window_length_s;
    estimate.spectrum.averaging_count = segments;
    return estimate;
}

void write_raw(std::ostream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
T read_raw(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw ConfigError("click-stream record truncated");
    return value;
}

}  // namespace

ClickStream simulate_click_stream(const SpectrumModel& model, double mean_rate,
                                  double carrier_offset_hz, double duration,
                                  std::uint64_t seed) {
    if (!(duration > 0.0)) throw ConfigError("record duration must be positive");
    if (!(mean_rate > 0.0)) throw ConfigError("mean count rate must be positive");
    if (mean_rate * duration < 100.0) {
        throw ConfigError("expected click count " + std::to_string(mean_rate * duration) +
                          " is below 100; lengthen the record or raise the rate");
    }
    if (!(model.total_modulation >= 0.0)) {
        throw ConfigError("modulation budget must be non-negative");
    }
    if (model.total_modulation >= 1.0) {
        throw ModulationOverflow("total modulation depth " +
                                 std::to_string(model.total_modulation) +
                                 " would drive the rate negative");
    }
    double extent = 0.0;
    bool any = false;
    for (const SidebandComponent& c : model.components) {
        if (c.rate <= 0.0) continue;
        extent = std::max(extent, std::abs(c.center_frequency_hz));
        any = true;
    }
    if (any && !(carrier_offset_hz > extent)) {
        throw ConfigError("carrier offset " + std::to_string(carrier_offset_hz) +
                          " Hz must exceed the spectral extent " + std::to_string(extent) +
                          " Hz");
    }

    std::mt19937_64 rng(split_seed(seed, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Tone> tones = draw_tones(model, carrier_offset_hz, rng, gauss);

    double depth_sum = 0.0;
    for (const Tone& t : tones) depth_sum += t.depth;
    const double lambda_max = mean_rate * (1.0 + depth_sum);

    ClickStream stream;
    stream.duration = duration;
    stream.seed = seed;
    stream.timestamps.reserve(static_cast<std::size_t>(mean_rate * duration * 1.1) + 16);

    std::exponential_distribution<double> gap(lambda_max);
    std::uniform_real_distribution<double> accept(0.0, 1.0);
    double t = gap(rng);
    double last = -1.0;
    while (t < duration) {
        const double rate_t = modulated_rate(mean_rate, tones, t, rng, gauss);
        if (accept(rng) * lambda_max <= rate_t && t > last) {
            stream.timestamps.push_back(t);
            last = t;
        }
        t += gap(rng);
    }
    return stream;
}

PsdEstimate welch_psd(const ClickStream& stream, double window_length_s, double overlap,
                      double bin_width_s) {
    if (!(bin_width_s > 0.0)) throw ConfigError("bin width must be positive");
    if (stream.duration < 2.0 * window_length_s) {
        throw WindowTooLong("record of " + std::to_string(stream.duration) +
                            " s is shorter than two windows of " +
                            std::to_string(window_length_s) + " s");
    }
    const std::int64_t total_bins =
        static_cast<std::int64_t>(std::floor(stream.duration / bin_width_s * (1.0 + 1e-15)));
    const std::vector<double>& ts = stream.timestamps;
    const double inv_bin = 1.0 / bin_width_s;

    return welch_core(total_bins, window_length_s, overlap, bin_width_s,
                      [&](std::int64_t start, int nfft, double* buffer) {
                          std::fill(buffer, buffer + nfft, 0.0);
                          const double t0 = static_cast<double>(start) * bin_width_s;
                          const double t1 = static_cast<double>(start + nfft) * bin_width_s;
                          auto it = std::lower_bound(ts.begin(), ts.end(), t0);
                          for (; it != ts.end() && *it < t1; ++it) {
                              int idx = static_cast<int>((*it - t0) * inv_bin);
                              idx = std::clamp(idx, 0, nfft - 1);
                              buffer[idx] += inv_bin;  // one count, in rate units
                          }
                      });
}

PsdEstimate welch_psd_signal(const std::vector<double>& signal, double window_length_s,
                             double overlap, double bin_width_s) {
    return welch_core(static_cast<std::int64_t>(signal.size()), window_length_s, overlap,
                      bin_width_s, [&](std::int64_t start, int nfft, double* buffer) {
                          std::copy(signal.begin() + start, signal.begin() + start + nfft,
                                    buffer);
                      });
}

PsdEstimate average_psds(const std::vector<PsdEstimate>& estimates) {
    if (estimates.empty()) throw ConfigError("no spectral estimates to average");
    const PsdEstimate& first = estimates.front();
    PsdEstimate mean = first;
    mean.realizations = 0;
    std::fill(mean.spectrum.psd.begin(), mean.spectrum.psd.end(), 0.0);
    for (const PsdEstimate& e : estimates) {
        const bool same_grid =
            e.spectrum.frequency_hz.size() == first.spectrum.frequency_hz.size() &&
            !e.spectrum.frequency_hz.empty() &&
            e.spectrum.frequency_hz.front() == first.spectrum.frequency_hz.front() &&
            e.spectrum.frequency_hz.back() == first.spectrum.frequency_hz.back();
        if (!same_grid) {
            throw GridMismatch("spectral estimates live on different frequency grids");
        }
        for (std::size_t k = 0; k < mean.spectrum.psd.size(); ++k) {
            mean.spectrum.psd[k] += e.spectrum.psd[k];
        }
        mean.realizations += e.realizations;
    }
    const double inv = 1.0 / static_cast<double>(estimates.size());
    for (double& p : mean.spectrum.psd) p *= inv;
    mean.spectrum.averaging_count = mean.realizations * first.segments;
    return mean;
}

PsdEstimate averaged_heterodyne_psd(const SpectrumModel& model, double mean_rate,
                                    double carrier_offset_hz, double duration,
                                    double window_length_s, double overlap,
                                    double bin_width_s, int n_realizations,
                                    std::uint64_t master_seed, int workers) {
    if (n_realizations < 1) throw ConfigError("need at least one realization");
    std::vector<PsdEstimate> slots(static_cast<std::size_t>(n_realizations));
    parallel_for(
        n_realizations,
        [&](int k) {
            const ClickStream stream =
                simulate_click_stream(model, mean_rate, carrier_offset_hz, duration,
                                      split_seed(master_seed, static_cast<std::uint64_t>(k)));
            slots[static_cast<std::size_t>(k)] =
                welch_psd(stream, window_length_s, overlap, bin_width_s);
        },
        workers);
    return average_psds(slots);
}

void write_clicks_binary(std::ostream& os, const ClickStream& stream) {
    write_raw(os, kClickMagic, sizeof(kClickMagic));
    write_raw(os, &stream.duration, sizeof(double));
    write_raw(os, &stream.seed, sizeof(std::uint64_t));
    const std::uint64_t count = stream.timestamps.size();
    write_raw(os, &count, sizeof(std::uint64_t));
    if (count > 0) {
        write_raw(os, stream.timestamps.data(), count * sizeof(double));
    }
    if (!os) throw ConfigError("failed to write click-stream record");
}

ClickStream read_clicks_binary(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kClickMagic, sizeof(magic)) != 0) {
        throw ConfigError("not a click-stream record (bad magic)");
    }
    ClickStream stream;
    stream.duration = read_raw<double>(is);
    stream.seed = read_raw<std::uint64_t>(is);
    const std::uint64_t count = read_raw<std::uint64_t>(is);
    if (count > (1ULL << 33)) throw ConfigError("click-stream record claims absurd length");
    stream.timestamps.resize(count);
    if (count > 0) {
        is.read(reinterpret_cast<char*>(stream.timestamps.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        if (!is) throw ConfigError("click-stream record truncated");
    }
    double last = -1.0;
    for (double t : stream.timestamps) {
        if (!(t >= 0.0) || t >= stream.duration || t <= last) {
            throw ConfigError("click-stream timestamps are not increasing within range");
        }
        last = t;
    }
    return stream;
}

void write_clicks_csv(std::ostream& os, const ClickStream& stream) {
    os << "t_s\n";
    os.precision(17);
    for (double t : stream.timestamps) os << t << '\n';
}

}  // namespace drc
