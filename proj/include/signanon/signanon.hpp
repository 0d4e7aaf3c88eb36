// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "signanon/attention.hpp"
#include "signanon/backbones.hpp"
#include "signanon/face.hpp"
#include "signanon/face_types.hpp"
#include "signanon/flow.hpp"
#include "signanon/fusion.hpp"
#include "signanon/interfaces.hpp"
#include "signanon/pipeline.hpp"
#include "signanon/rng.hpp"
#include "signanon/schedule.hpp"
#include "signanon/synthetic.hpp"
#include "signanon/tensor.hpp"
