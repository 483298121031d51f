#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lfid {

enum class ErrorCode {
  InvalidArgument,
  Io,
  // template files
  MagicMismatch,
  VersionMismatch,
  TruncatedPayload,
  MalformedPayload,
  // ingest / descriptor
  EmptyRoi,
  MissingPatchType,
  PatchSetMismatch,
  // matcher
  CoincidentMinutiae,
  DegenerateTriplet,
  ZeroMatrix,
  ZeroTensor,
  EmptyTemplate,
  // scoring
  EmptyCorrespondences,
  // synth
  PlacementFailure,
  // dbsearch
  DuplicateSubject,
  EmptyDb,
  MissingTruth,
  QueryMismatch,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// True for errors caused by corrupt or inconsistent stored data rather than bad
// user input. The CLI maps these to exit status 3.
bool is_data_integrity_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lfid
