// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include "egw/nn/gradcheck.hpp"
#include "egw/nn/layers.hpp"
#include "egw/nn/model.hpp"
#include "egw/nn/tensor.hpp"
