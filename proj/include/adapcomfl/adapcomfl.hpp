// Copyright 2026 The AdapComFL Authors. All Rights Reserved.
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

#include "adapcomfl/aggregation.hpp"
#include "adapcomfl/bandwidth.hpp"
#include "adapcomfl/federation.hpp"
#include "adapcomfl/lstm.hpp"
#include "adapcomfl/mlkit.hpp"
#include "adapcomfl/netsim.hpp"
#include "adapcomfl/predictor.hpp"
#include "adapcomfl/sketch.hpp"
#include "adapcomfl/sketch_io.hpp"
#include "adapcomfl/trace.hpp"
