/*
 * Copyright 2026 The selcl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace selcl {

/// Random engine used everywhere. All randomness flows through an explicit
/// engine owned by the caller, so results are reproducible from a seed.
using Rng = std::mt19937_64;

/// Derives an independent engine for a named stream of a run seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `row()` is the 1-based data row (0 for the header).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class LabelOutOfRange : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A NaN or Inf showed up in a parameter tensor.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace selcl
