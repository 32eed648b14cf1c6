// Copyright 2026 The cohere Authors
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

#include <cstdint>
#include <initializer_list>

namespace cohere {

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Child seed for a coordinate tuple, e.g. derive_seed(seed, {m, s, trial}).
// Depends only on the base seed and the coordinates, so work can be split
// across threads in any order and still draw the same streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords);

}  // namespace cohere
