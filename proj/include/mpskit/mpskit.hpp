// Copyright 2026 The mpskit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpskit/core.hpp"
#include "mpskit/dataset.hpp"
#include "mpskit/image.hpp"
#include "mpskit/integrate.hpp"
#include "mpskit/intensity.hpp"
#include "mpskit/io.hpp"
#include "mpskit/metrics.hpp"
#include "mpskit/pipeline.hpp"
#include "mpskit/render.hpp"
#include "mpskit/solver.hpp"
#include "mpskit/spectral.hpp"
#include "mpskit/srd.hpp"
