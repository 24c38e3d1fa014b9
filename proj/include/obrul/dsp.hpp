#pragma once

#include <filesystem>

#include "obrul/types.hpp"

namespace obrul::dsp {

/// One-sided power spectral density in g^2/Hz.
struct PowerSpectrum {
  double bin_width_hz = 0.0;
  Vector psd;

  Index bins() const { return psd.size(); }
  double bin_frequency(Index k) const { return static_cast<double>(k) * bin_width_hz; }
  double nyquist_hz() const { return bin_frequency(bins() - 1); }
};

/// Band edges mixing constant-absolute-width edges in the low region with
/// constant-percentage (2^(1/n) ratio) edges above the transition.
struct OctaveBandSpec {
  double m = 0.0;        // constant absolute band width, Hz
  int n = 0;             // bands per octave in the percentage region
  long k = 0;            // transition exponent offset
  Index n_const = 0;     // number of constant-width edges
  Vector edges_hz;       // strictly increasing, edges_hz[0] == 0

  Index band_count() const { return edges_hz.size() - 1; }
  double band_low(Index i) const { return edges_hz[i]; }
  double band_high(Index i) const { return edges_hz[i + 1]; }
  double band_center(Index i) const { return 0.5 * (band_low(i) + band_high(i)); }

  /// Band holding frequency f under the half-open convention (low, high];
  /// -1 when f lies outside (edges_hz[0], edges_hz[last]].
  Index band_of(double f_hz) const;
};

/// Periodic Hann window: w[t] = 0.5 * (1 - cos(2*pi*t/len)), t = 0..len-1.
Vector hann_window(Index len);

/// One-sided, window-power-normalized PSD:
///   psd(k) = |DFT(window .* channel)[k]|^2 / (sample_rate * sum(window^2)),
/// interior bins doubled. Parseval holds: sum(psd) * bin_width == mean square.
PowerSpectrum power_spectrum(VectorRef channel, double sample_rate_hz, VectorRef window);

OctaveBandSpec band_edges(double m, int n, double f_max_hz);

/// Arithmetic mean of the psd bins falling in each band; empty bands give 0.
Vector filter_spectrum(const PowerSpectrum& spectrum, const OctaveBandSpec& spec);

/// 10*log10(x) with the argument floored at 1e-12 (reference level 1 g^2/Hz).
double to_decibel(double x);

inline constexpr double kDecibelFloor = 1e-12;

/// CSV export: band_index,f_low_hz,f_high_hz,center_hz.
void write_band_spec_csv(const OctaveBandSpec& spec, const std::filesystem::path& path);

}  // namespace obrul::dsp
