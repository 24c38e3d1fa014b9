#include "obrul/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "obrul/errors.hpp"
#include "obrul/io.hpp"
#include "obrul/rng.hpp"

namespace obrul::ingest {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void RecordSet::validate() const {
  if (sample_rate_hz <= 0.0 || record_len <= 0 || record_interval_s <= 0.0) {
    throw StructuralError("record set has non-positive acquisition parameters");
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    if (r.horiz.size() != record_len || r.vert.size() != record_len) {
      throw StructuralError("record " + std::to_string(i) + " has " +
                            std::to_string(r.horiz.size()) + "/" +
                            std::to_string(r.vert.size()) + " samples, expected " +
                            std::to_string(record_len));
    }
    if (i > 0) {
      const double dt = r.timestamp_s - records[i - 1].timestamp_s;
      if (!(dt > 0.0)) {
        throw StructuralError("record timestamps not strictly increasing at index " +
                              std::to_string(i));
      }
      if (std::abs(dt - record_interval_s) > 1e-9 * std::max(1.0, record_interval_s)) {
        throw StructuralError("record spacing " + io::format_double(dt) +
                              " differs from record_interval_s at index " + std::to_string(i));
      }
    }
  }
}

RecordFormat load_record_format(const fs::path& meta_file) {
  RecordFormat fmt;
  bool have_rate = false, have_len = false, have_interval = false;
  for (const auto& [key, value] : io::read_key_values(meta_file)) {
    if (key == "sample_rate_hz") {
      fmt.sample_rate_hz = io::parse_double(value, meta_file.string(), 0);
      have_rate = true;
    } else if (key == "record_len") {
      fmt.record_len = io::parse_long(value, meta_file.string(), 0);
      have_len = true;
    } else if (key == "record_interval_s") {
      fmt.record_interval_s = io::parse_double(value, meta_file.string(), 0);
      have_interval = true;
    }
  }
  if (!have_rate || !have_len || !have_interval) {
    throw ParseError("meta file " + meta_file.string() +
                     " must define sample_rate_hz, record_len, record_interval_s");
  }
  return fmt;
}

namespace {

Record load_record_file(const fs::path& file, const RecordFormat& fmt) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw IoError("cannot open record file: " + file.string());
  }
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) {
    throw ParseError("empty record file: " + file.string());
  }
  ++lineno;
  {
    const auto header = io::split_csv_line(line);
    if (header.size() != 3 || header[0] != "timestamp_s" || header[1] != "horiz_g" ||
        header[2] != "vert_g") {
      throw ParseError("bad header at " + file.string() + ":1, expected timestamp_s,horiz_g,vert_g");
    }
  }
  Record rec;
  rec.horiz.resize(fmt.record_len);
  rec.vert.resize(fmt.record_len);
  Index row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != 3) {
      throw ParseError("expected 3 columns, got " + std::to_string(cells.size()) + " at " +
                       file.string() + ":" + std::to_string(lineno));
    }
    const double ts = io::parse_double(cells[0], file.string(), lineno);
    const double h = io::parse_double(cells[1], file.string(), lineno);
    const double v = io::parse_double(cells[2], file.string(), lineno);
    if (row >= fmt.record_len) {
      throw StructuralError("record file " + file.string() + " has more than " +
                            std::to_string(fmt.record_len) + " data rows");
    }
    if (row == 0) rec.timestamp_s = ts;
    rec.horiz[row] = h;
    rec.vert[row] = v;
    ++row;
  }
  if (row != fmt.record_len) {
    throw StructuralError("record file " + file.string() + " has " + std::to_string(row) +
                          " data rows, expected " + std::to_string(fmt.record_len));
  }
  return rec;
}

}  // namespace

RecordSet load_record_set(const fs::path& path, const RecordFormat& format) {
  if (!fs::exists(path)) {
    throw IoError("record path does not exist: " + path.string());
  }
  const std::vector<fs::path> files = io::list_files(path, ".csv");
  if (files.empty()) {
    throw NoDataError("no record csv files under " + path.string());
  }
  RecordSet set;
  set.sample_rate_hz = format.sample_rate_hz;
  set.record_len = format.record_len;
  set.record_interval_s = format.record_interval_s;
  set.records.reserve(files.size());
  for (const auto& f : files) {
    set.records.push_back(load_record_file(f, format));
  }
  std::stable_sort(set.records.begin(), set.records.end(),
                   [](const Record& a, const Record& b) { return a.timestamp_s < b.timestamp_s; });
  set.validate();
  return set;
}

void write_record_set(const RecordSet& set, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::string meta;
    meta += "sample_rate_hz = " + io::format_double(set.sample_rate_hz) + "\n";
    meta += "record_len = " + std::to_string(set.record_len) + "\n";
    meta += "record_interval_s = " + io::format_double(set.record_interval_s) + "\n";
    io::write_text_file(dir / "meta.txt", meta);
  }
  const double dt = 1.0 / set.sample_rate_hz;
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const Record& rec = set.records[i];
    std::string out = "timestamp_s,horiz_g,vert_g\n";
    for (Index t = 0; t < set.record_len; ++t) {
      out += io::format_double(rec.timestamp_s + static_cast<double>(t) * dt);
      out += ',';
      out += io::format_double(rec.horiz[t]);
      out += ',';
      out += io::format_double(rec.vert[t]);
      out += '\n';
    }
    char name[32];
    std::snprintf(name, sizeof(name), "rec-%05zu.csv", i);
    io::write_text_file(dir / name, out);
  }
}

RecordSet synth_bearing_run(const SynthConfig& cfg) {
  const double nyquist = cfg.sample_rate_hz / 2.0;
  if (cfg.degradation_onset_record < 0 || cfg.degradation_onset_record >= cfg.duration_records) {
    throw ConfigError("degradation_onset_record must lie in [0, duration_records)");
  }
  auto check_freq = [&](double f, const char* what) {
    if (f >= nyquist) {
      throw ConfigError(std::string(what) + " frequency " + io::format_double(f) +
                        " Hz is not below Nyquist " + io::format_double(nyquist) + " Hz");
    }
  };
  check_freq(cfg.shaft_hz, "shaft");
  for (double f : cfg.fault_freqs_hz) check_freq(f, "fault");
  for (double f : cfg.resonance_centers_hz) check_freq(f, "resonance center");

  struct Component {
    double freq;
    double amp;
    double phase_h;
    double phase_v;
  };

  Rng rng(cfg.seed);
  std::vector<Component> parts;
  auto add = [&](double f, double a) {
    parts.push_back({f, a, rng.uniform(0.0, 2.0 * kPi), rng.uniform(0.0, 2.0 * kPi)});
  };
  add(cfg.shaft_hz, cfg.shaft_amp_g);
  for (double f : cfg.fault_freqs_hz) add(f, cfg.fault_amp_g);
  const int nres = std::max(1, cfg.resonance_components);
  for (double c : cfg.resonance_centers_hz) {
    const double half = c * cfg.resonance_bandwidth_frac;
    for (int q = 0; q < nres; ++q) {
      const double f = std::min(c - half + (2.0 * half) * rng.uniform(), nyquist * 0.999);
      add(f, cfg.resonance_amp_g / std::sqrt(static_cast<double>(nres)));
    }
  }

  RecordSet set;
  set.sample_rate_hz = cfg.sample_rate_hz;
  set.record_len = cfg.record_len;
  set.record_interval_s = cfg.record_interval_s;
  set.records.resize(static_cast<std::size_t>(cfg.duration_records));

  const double dt = 1.0 / cfg.sample_rate_hz;
  for (Index r = 0; r < cfg.duration_records; ++r) {
    Record& rec = set.records[static_cast<std::size_t>(r)];
    rec.timestamp_s = static_cast<double>(r) * cfg.record_interval_s;
    rec.horiz.setZero(cfg.record_len);
    rec.vert.setZero(cfg.record_len);

    const double growth =
        1.0 + cfg.degradation_rate *
                  static_cast<double>(std::max<Index>(0, r - cfg.degradation_onset_record));
    for (const Component& p : parts) {
      const double a = p.amp * growth;
      const double w = 2.0 * kPi * p.freq;
      for (Index t = 0; t < cfg.record_len; ++t) {
        const double arg = w * static_cast<double>(t) * dt;
        rec.horiz[t] += a * std::sin(arg + p.phase_h);
        rec.vert[t] += a * std::sin(arg + p.phase_v);
      }
    }
    if (cfg.noise_std_g > 0.0) {
      for (Index t = 0; t < cfg.record_len; ++t) rec.horiz[t] += cfg.noise_std_g * rng.gaussian();
      for (Index t = 0; t < cfg.record_len; ++t) rec.vert[t] += cfg.noise_std_g * rng.gaussian();
    }
  }
  return set;
}

}  // namespace obrul::ingest
