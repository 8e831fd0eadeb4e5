// Copyright 2026 The fedsim Authors. All Rights Reserved.
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
// =============================================================================

#pragma once

#include "fedsim/aggregation.hpp"
#include "fedsim/config.hpp"
#include "fedsim/cost.hpp"
#include "fedsim/data.hpp"
#include "fedsim/engine.hpp"
#include "fedsim/masking.hpp"
#include "fedsim/model.hpp"
#include "fedsim/params.hpp"
#include "fedsim/report.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/sampling.hpp"
