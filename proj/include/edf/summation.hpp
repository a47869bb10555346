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

#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace edf {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            compensation_ += (sum_ - t) + x;
        } else {
            compensation_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

struct SampleMoments {
    double mean = 0.0;
    double stddev = 0.0; // n - 1 denominator
    std::size_t count = 0;
};

/// Two-pass mean and sample standard deviation, summed in index order.
inline SampleMoments sample_moments(std::span<const double> xs) noexcept
{
    SampleMoments m;
    m.count = xs.size();
    if (xs.empty()) {
        return m;
    }
    CompensatedSum total;
    for (double x : xs) {
        total.add(x);
    }
    m.mean = total.value() / static_cast<double>(xs.size());
    if (xs.size() < 2) {
        return m;
    }
    CompensatedSum squares;
    for (double x : xs) {
        const double d = x - m.mean;
        squares.add(d * d);
    }
    m.stddev = std::sqrt(squares.value() / static_cast<double>(xs.size() - 1));
    return m;
}

} // namespace edf
