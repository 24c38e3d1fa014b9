#include "obrul/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "obrul/errors.hpp"
#include "obrul/io.hpp"

namespace obrul::dsp {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Index OctaveBandSpec::band_of(double f_hz) const {
  const double* begin = edges_hz.data();
  const double* end = begin + edges_hz.size();
  const double* pos = std::lower_bound(begin, end, f_hz);
  const Index idx = pos - begin;
  if (idx == 0 || idx == edges_hz.size()) return -1;
  return idx - 1;
}

Vector hann_window(Index len) {
  if (len < 2) {
    throw StructuralError("hann window length must be >= 2, got " + std::to_string(len));
  }
  Vector w(len);
  for (Index t = 0; t < len; ++t) {
    w[t] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(t) / static_cast<double>(len)));
  }
  return w;
}

PowerSpectrum power_spectrum(VectorRef channel, double sample_rate_hz, VectorRef window) {
  const Index len = channel.size();
  if (window.size() != len) {
    throw StructuralError("window length " + std::to_string(window.size()) +
                          " does not match record length " + std::to_string(len));
  }
  std::vector<double> buf(static_cast<std::size_t>(len));
  for (Index i = 0; i < len; ++i) buf[static_cast<std::size_t>(i)] = window[i] * channel[i];

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, buf);

  const Index half = len / 2;
  const double window_power = window.squaredNorm();
  const double scale = 1.0 / (sample_rate_hz * window_power);

  PowerSpectrum out;
  out.bin_width_hz = sample_rate_hz / static_cast<double>(len);
  out.psd.resize(half + 1);
  for (Index k = 0; k <= half; ++k) {
    double p = std::norm(freq[static_cast<std::size_t>(k)]) * scale;
    const bool interior = k > 0 && !(len % 2 == 0 && k == half);
    if (interior) p *= 2.0;
    out.psd[k] = p;
  }
  return out;
}

OctaveBandSpec band_edges(double m, int n, double f_max_hz) {
  if (m <= 0.0 || n < 1 || f_max_hz <= m) {
    throw ArgumentError("band_edges requires m > 0, n >= 1, f_max > m");
  }
  OctaveBandSpec spec;
  spec.m = m;
  spec.n = n;

  const double nn = static_cast<double>(n);
  spec.k = static_cast<long>(std::ceil(nn * std::log2(m / (std::exp2(1.0 / nn) - 1.0))));
  spec.n_const =
      static_cast<Index>(std::floor((1.0 / m) * std::exp2(static_cast<double>(spec.k + 1) / nn) + 1.0));

  std::vector<double> edges;
  for (Index i = 1; i <= spec.n_const; ++i) {
    edges.push_back(m * static_cast<double>(i - 1));
  }
  const double last_const = edges.back();
  for (long j = 1;; ++j) {
    const double e = std::exp2(static_cast<double>(j + spec.k) / nn);
    if (e > f_max_hz) break;
    if (e <= last_const) continue;  // duplicate at the transition is dropped
    edges.push_back(e);
  }

  spec.edges_hz = Eigen::Map<const Vector>(edges.data(), static_cast<Index>(edges.size()));
  for (Index i = 1; i < spec.edges_hz.size(); ++i) {
    if (!(spec.edges_hz[i] > spec.edges_hz[i - 1])) {
      throw Error("internal: band edges not strictly increasing");
    }
  }
  return spec;
}

Vector filter_spectrum(const PowerSpectrum& spectrum, const OctaveBandSpec& spec) {
  if (spec.edges_hz.size() < 2) {
    throw RangeError("band spec has no bands");
  }
  if (spec.edges_hz[spec.edges_hz.size() - 1] > spectrum.nyquist_hz() * (1.0 + 1e-12)) {
    throw RangeError("band spec extends past the spectrum Nyquist frequency");
  }
  const Index bands = spec.band_count();
  Vector sums = Vector::Zero(bands);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(static_cast<int>(bands));
  for (Index bin = 0; bin < spectrum.bins(); ++bin) {
    const Index b = spec.band_of(spectrum.bin_frequency(bin));
    if (b < 0) continue;
    sums[b] += spectrum.psd[bin];
    counts[static_cast<int>(b)] += 1;
  }
  for (Index b = 0; b < bands; ++b) {
    if (counts[static_cast<int>(b)] > 0) sums[b] /= counts[static_cast<int>(b)];
  }
  return sums;
}

double to_decibel(double x) {
  return 10.0 * std::log10(std::max(x, kDecibelFloor));
}

void write_band_spec_csv(const OctaveBandSpec& spec, const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (Index i = 0; i < spec.band_count(); ++i) {
    rows.push_back({std::to_string(i), io::format_double(spec.band_low(i)),
                    io::format_double(spec.band_high(i)),
                    io::format_double(spec.band_center(i))});
  }
  io::write_csv(path, {"band_index", "f_low_hz", "f_high_hz", "center_hz"}, rows);
}

}  // namespace obrul::dsp
