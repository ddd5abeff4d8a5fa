// Copyright 2026 The fiberq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Umbrella header.

#include "fiberq/analysis.hpp"
#include "fiberq/channel.hpp"
#include "fiberq/config.hpp"
#include "fiberq/errors.hpp"
#include "fiberq/hash.hpp"
#include "fiberq/instruments.hpp"
#include "fiberq/io.hpp"
#include "fiberq/linalg.hpp"
#include "fiberq/polcore.hpp"
#include "fiberq/quantum.hpp"
#include "fiberq/rng.hpp"
#include "fiberq/scenario.hpp"
#include "fiberq/stabilizer.hpp"
#include "fiberq/tomography.hpp"
