/*
   Copyright 2026 The edf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <catch2/catch_amalgamated.hpp>

#include "fitter_properties.hpp"

TEST_CASE("fitter invariants on 1000 random small instances", "[fitters][property]")
{
    const auto report = edf::test::check_fitter_properties(1000, 20260101);
    CHECK(report.instances == 1000);
    for (const auto& v : report.violations) {
        UNSCOPED_INFO(v);
    }
    CHECK(report.violations.empty());
}
