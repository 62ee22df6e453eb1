// Copyright 2026 The PANDA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "panda/auditor.hpp"
#include "panda/errors.hpp"
#include "panda/grid.hpp"
#include "panda/ingest.hpp"
#include "panda/mechanism.hpp"
#include "panda/policy_graph.hpp"
#include "panda/random.hpp"
#include "panda/scenario.hpp"
#include "panda/seir.hpp"
#include "panda/surveillance.hpp"
#include "panda/trajectory.hpp"
