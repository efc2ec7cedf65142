// Copyright 2026 The jacospec Authors.
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

/// Inverse error functions. Forward erf/erfc come from <cmath>.

namespace jacospec {

/// Solves erf(x) = y for y in (-1, 1).
double erf_inv(double y);

/// Solves erfc(x) = c for c in (0, 2). Accurate for c near 0 where
/// erf_inv(1 - c) would lose digits.
double erfc_inv(double c);

}  // namespace jacospec
