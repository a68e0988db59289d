#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cliniflow {

// Root of every error raised by the library. Each subclass corresponds to one
// failure kind that callers are expected to distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CLINIFLOW_ERROR(Name)            \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// core model
CLINIFLOW_ERROR(OutOfBounds);
CLINIFLOW_ERROR(DuplicateId);
CLINIFLOW_ERROR(InvalidAnnotation);

// span engine
CLINIFLOW_ERROR(InvalidRange);
CLINIFLOW_ERROR(ArityMismatch);

// provenance
CLINIFLOW_ERROR(SelfDerivation);
CLINIFLOW_ERROR(CycleDetected);
CLINIFLOW_ERROR(ProvenanceError);

// converters
CLINIFLOW_ERROR(IoFailure);
CLINIFLOW_ERROR(SurfaceMismatch);
CLINIFLOW_ERROR(EmptyProjection);
CLINIFLOW_ERROR(MalformedJson);

// text operations
CLINIFLOW_ERROR(ScopeError);
CLINIFLOW_ERROR(RuleError);

// pipeline engine
CLINIFLOW_ERROR(DuplicateName);
CLINIFLOW_ERROR(MissingInput);
CLINIFLOW_ERROR(PipelineInvalid);

// cli
CLINIFLOW_ERROR(ConfigError);
CLINIFLOW_ERROR(MissingCounterpart);

#undef CLINIFLOW_ERROR

class DecodeFailure : public Error {
 public:
  DecodeFailure(std::string source, std::size_t byte_offset)
      : Error(source + ": invalid UTF-8 at byte " + std::to_string(byte_offset)),
        source_(std::move(source)),
        byte_offset_(byte_offset) {}

  const std::string& source() const { return source_; }
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::string source_;
  std::size_t byte_offset_;
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class StepFailure : public Error {
 public:
  StepFailure(std::size_t step_index, std::string op_name, const std::string& cause)
      : Error("step " + std::to_string(step_index) + " (" + op_name + ") failed: " + cause),
        step_index_(step_index),
        op_name_(std::move(op_name)) {}

  std::size_t step_index() const { return step_index_; }
  const std::string& op_name() const { return op_name_; }

 private:
  std::size_t step_index_;
  std::string op_name_;
};

}  // namespace cliniflow
