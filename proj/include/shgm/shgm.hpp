// Copyright 2026 The SHGM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#pragma once

#define SHGM_VERSION "0.1.0"

#include "shgm/admm.hpp"
#include "shgm/config.hpp"
#include "shgm/error.hpp"
#include "shgm/hankel.hpp"
#include "shgm/image.hpp"
#include "shgm/inpaint.hpp"
#include "shgm/metrics.hpp"
#include "shgm/patch.hpp"
#include "shgm/png_io.hpp"
#include "shgm/rng.hpp"
#include "shgm/sampler.hpp"
#include "shgm/score.hpp"
#include "shgm/score_net.hpp"
#include "shgm/train.hpp"
