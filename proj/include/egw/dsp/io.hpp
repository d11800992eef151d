// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <filesystem>
#include <iosfwd>

#include "egw/dsp/signal.hpp"

namespace egw::dsp {

/// Signal CSV: first line "fs=<Hz>", then one millivolt sample per line.
EcgSignal read_signal_csv(std::istream& in);
EcgSignal read_signal_csv(const std::filesystem::path& path);
void write_signal_csv(std::ostream& out, const EcgSignal& signal);
void write_signal_csv(const std::filesystem::path& path, const EcgSignal& signal);

}  // namespace egw::dsp
