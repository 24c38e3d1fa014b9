#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "obrul/types.hpp"

namespace obrul::ingest {

namespace fs = std::filesystem;

struct Record {
  double timestamp_s = 0.0;
  Vector horiz;  // acceleration, g
  Vector vert;
};

/// A run-to-failure sequence of fixed-length two-channel snapshots.
struct RecordSet {
  double sample_rate_hz = 0.0;
  Index record_len = 0;
  double record_interval_s = 0.0;
  std::vector<Record> records;

  /// Enforces the structural invariants (sample counts, strictly increasing
  /// equally spaced timestamps). Throws StructuralError.
  void validate() const;
};

/// Acquisition parameters; read from the sidecar meta.txt (key=value lines
/// sample_rate_hz, record_len, record_interval_s).
struct RecordFormat {
  double sample_rate_hz = 25600.0;
  Index record_len = 2560;
  double record_interval_s = 10.0;
};

RecordFormat load_record_format(const fs::path& meta_file);

/// Loads the canonical record CSVs (header timestamp_s,horiz_g,vert_g, one
/// file per snapshot) from a directory or a single file. Records are ordered
/// by timestamp regardless of filename.
RecordSet load_record_set(const fs::path& path, const RecordFormat& format);

/// Writes a RecordSet in the canonical layout: rec-NNNN.csv files plus meta.txt.
void write_record_set(const RecordSet& set, const fs::path& dir);

struct SynthConfig {
  double sample_rate_hz = 25600.0;
  Index record_len = 2560;
  double record_interval_s = 10.0;

  double shaft_hz = 30.0;
  std::vector<double> fault_freqs_hz;       // e.g. BPFO/BPFI/BSF/FTF
  std::vector<double> resonance_centers_hz;

  Index duration_records = 100;
  Index degradation_onset_record = 60;
  double degradation_rate = 0.05;  // amplitude growth per record after onset
  double noise_std_g = 0.02;
  std::uint64_t seed = 1;

  double shaft_amp_g = 0.5;
  double fault_amp_g = 0.05;
  double resonance_amp_g = 0.05;
  double resonance_bandwidth_frac = 0.05;  // half-width of the excited band
  int resonance_components = 7;
};

/// Deterministic synthetic run: fixed-phase sinusoids at the shaft and fault
/// frequencies, narrowband resonance excitation, white noise. Amplitudes of
/// the deterministic content grow linearly after the onset record.
RecordSet synth_bearing_run(const SynthConfig& cfg);

}  // namespace obrul::ingest
