// Copyright 2026 The vsdesign Authors.
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

#ifndef VSDESIGN_VSDESIGN_HPP
#define VSDESIGN_VSDESIGN_HPP

#include "vsdesign/error.hpp"
#include "vsdesign/estimator.hpp"
#include "vsdesign/harness.hpp"
#include "vsdesign/linalg.hpp"
#include "vsdesign/rng.hpp"
#include "vsdesign/sampler.hpp"
#include "vsdesign/scores.hpp"
#include "vsdesign/stats.hpp"
#include "vsdesign/verify.hpp"

#endif  // VSDESIGN_VSDESIGN_HPP
