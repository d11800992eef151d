// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include <iostream>

#include "egw/cli/cli.hpp"

int main(int argc, char** argv) { return egw::cli::run(argc, argv, std::cout, std::cerr); }
