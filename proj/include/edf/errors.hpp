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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(const std::string& what, std::size_t expected, std::size_t actual)
        : Error(what + ": expected dimension " + std::to_string(expected) + ", got "
                + std::to_string(actual)),
          expected_(expected),
          actual_(actual)
    {
    }

    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

/// Numerical rank fell below the number of columns.
class RankDeficient : public Error {
public:
    RankDeficient(std::size_t rank, std::size_t columns)
        : Error("rank deficient design: numerical rank " + std::to_string(rank) + " < "
                + std::to_string(columns) + " columns"),
          rank_(rank),
          columns_(columns)
    {
    }

    std::size_t rank() const noexcept { return rank_; }
    std::size_t columns() const noexcept { return columns_; }

private:
    std::size_t rank_;
    std::size_t columns_;
};

/// Every candidate subset of the requested size is rank deficient.
class InfeasibleSubset : public Error {
public:
    explicit InfeasibleSubset(std::size_t k)
        : Error("no full-rank column subset of size " + std::to_string(k)), k_(k)
    {
    }

    std::size_t k() const noexcept { return k_; }

private:
    std::size_t k_;
};

class SubsetTooLarge : public Error {
public:
    SubsetTooLarge(std::size_t p, std::size_t limit)
        : Error("exhaustive subset search supports at most " + std::to_string(limit)
                + " columns, got " + std::to_string(p))
    {
    }
};

class NotLinear : public Error {
public:
    using Error::Error;
};

class DimensionTooLarge : public Error {
public:
    DimensionTooLarge(std::size_t n, std::size_t limit)
        : Error("quadrature supports n <= " + std::to_string(limit) + ", got n = "
                + std::to_string(n))
    {
    }
};

class NonFiniteStatistic : public Error {
public:
    using Error::Error;
};

/// A fit or statistic failed inside a Monte Carlo replicate.
class ReplicateFailure : public Error {
public:
    ReplicateFailure(std::size_t index, const std::string& cause)
        : Error("replicate " + std::to_string(index) + ": " + cause), index_(index)
    {
    }

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class IncompleteGrid : public Error {
public:
    using Error::Error;
};

} // namespace edf
