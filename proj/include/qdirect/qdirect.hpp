// Copyright 2026 The qdirect Authors
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

#pragma once

#include "qdirect/core.hpp"
#include "qdirect/de_search.hpp"
#include "qdirect/decomposition.hpp"
#include "qdirect/io.hpp"
#include "qdirect/measurement.hpp"
#include "qdirect/random.hpp"
#include "qdirect/studies.hpp"
#include "qdirect/version.hpp"
