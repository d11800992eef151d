// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/dsp/io.hpp"

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "egw/common/error.hpp"

namespace egw::dsp {

EcgSignal read_signal_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Format, "signal CSV: missing 'fs=' header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line.rfind("fs=", 0) == 0, ErrorKind::Format, "signal CSV: first line must be 'fs=<Hz>'");
  int fs = 0;
  auto res = std::from_chars(line.data() + 3, line.data() + line.size(), fs);
  require(res.ec == std::errc{} && res.ptr == line.data() + line.size() && fs > 0, ErrorKind::Format,
          "signal CSV: invalid sampling rate '" + line.substr(3) + "'");

  std::vector<double> samples;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v = 0;
    auto r = std::from_chars(line.data(), line.data() + line.size(), v);
    require(r.ec == std::errc{} && r.ptr == line.data() + line.size(), ErrorKind::Format,
            "signal CSV line " + std::to_string(row) + ": bad sample '" + line + "'");
    samples.push_back(v);
  }
  EcgSignal out;
  out.sampling_rate = fs;
  out.samples = Eigen::Map<const Vector<double>>(samples.data(), static_cast<Eigen::Index>(samples.size()));
  return out;
}

EcgSignal read_signal_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open signal file " + path.string());
  return read_signal_csv(in);
}

void write_signal_csv(std::ostream& out, const EcgSignal& signal) {
  out << "fs=" << signal.sampling_rate << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < signal.size(); ++i) {
    auto res = std::to_chars(buf, buf + sizeof(buf), signal.samples[i]);
    out.write(buf, res.ptr - buf);
    out.put('\n');
  }
}

void write_signal_csv(const std::filesystem::path& path, const EcgSignal& signal) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write signal file " + path.string());
  write_signal_csv(out, signal);
}

}  // namespace egw::dsp
