#pragma once

#include <stdexcept>
#include <string>

namespace sdprel {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Treebank and relation ingest.
class FormatError : public Error {
 public:
  using Error::Error;
};
class CycleError : public Error {
 public:
  using Error::Error;
};
class MultiRootError : public Error {
 public:
  using Error::Error;
};
class OverlapError : public Error {
 public:
  using Error::Error;
};
class NoSpanHeadError : public Error {
 public:
  using Error::Error;
};
class UnknownLabelError : public Error {
 public:
  using Error::Error;
};
class DanglingEntityError : public Error {
 public:
  using Error::Error;
};

// Paths and features.
class TokenOutOfRange : public Error {
 public:
  using Error::Error;
};
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};
class MalformedLine : public Error {
 public:
  using Error::Error;
};
class MissingPath : public Error {
 public:
  using Error::Error;
};

// Model, tuner and evaluation.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};
class EmptyDataset : public Error {
 public:
  using Error::Error;
};
class OutOfSpace : public Error {
 public:
  using Error::Error;
};
class SingularKernel : public Error {
 public:
  using Error::Error;
};
class TooFewInstances : public Error {
 public:
  using Error::Error;
};
class MisalignedInstances : public Error {
 public:
  using Error::Error;
};

}  // namespace sdprel
