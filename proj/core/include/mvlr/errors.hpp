// Copyright 2026 The MVLR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mvlr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible. Messages name every offending shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value lies outside its documented domain (severity, k, step, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A serialized file (MVLT, PPM, manifest) is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

// The filesystem refused an operation or a file is missing.
class IoError : public Error {
 public:
  using Error::Error;
};

// A function evaluated to NaN/Inf where a finite value is required.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss or gradient.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvlr
