#pragma once

#include <stdexcept>
#include <string>

namespace magescan {

// Base class for every error raised by the library. `code()` is a stable
// machine-readable identifier; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail)
      : std::runtime_error(detail), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define MAGESCAN_DEFINE_ERROR(NAME, CODE)                     \
  class NAME : public ::magescan::Error {                     \
   public:                                                    \
    explicit NAME(const std::string& detail)                  \
        : ::magescan::Error(CODE, detail) {}                  \
  }

// behavior_model
MAGESCAN_DEFINE_ERROR(UnknownBehaviorError, "UnknownBehavior");
MAGESCAN_DEFINE_ERROR(EmptyStepError, "EmptyStep");

// ingestion
MAGESCAN_DEFINE_ERROR(ParseError, "ParseError");
MAGESCAN_DEFINE_ERROR(UnmappedActionError, "UnmappedAction");
MAGESCAN_DEFINE_ERROR(InconsistentInlineFlagError, "InconsistentInlineFlag");

// dfa_engine
MAGESCAN_DEFINE_ERROR(MissingWeightError, "MissingWeight");
MAGESCAN_DEFINE_ERROR(DuplicatePatternNameError, "DuplicatePatternName");
MAGESCAN_DEFINE_ERROR(InvalidThresholdsError, "InvalidThresholds");

// feature_extraction
MAGESCAN_DEFINE_ERROR(SchemaMismatchError, "SchemaMismatch");

// classifiers
MAGESCAN_DEFINE_ERROR(DegenerateDataError, "DegenerateData");
MAGESCAN_DEFINE_ERROR(NonConvergenceError, "NonConvergence");
MAGESCAN_DEFINE_ERROR(InsufficientClassSamplesError, "InsufficientClassSamples");
MAGESCAN_DEFINE_ERROR(LengthMismatchError, "LengthMismatch");
MAGESCAN_DEFINE_ERROR(WrongFamilyError, "WrongFamily");
MAGESCAN_DEFINE_ERROR(ProbabilityUndefinedError, "ProbabilityUndefined");
MAGESCAN_DEFINE_ERROR(GradientUndefinedError, "GradientUndefined");
MAGESCAN_DEFINE_ERROR(ScoreUndefinedError, "ScoreUndefined");

// adversarial
MAGESCAN_DEFINE_ERROR(InitFailureError, "InitFailure");
MAGESCAN_DEFINE_ERROR(AttackNotApplicableError, "AttackNotApplicable");

// explanation
MAGESCAN_DEFINE_ERROR(TooManyFeaturesError, "TooManyFeatures");

// corpus_gen
MAGESCAN_DEFINE_ERROR(EmptyLibraryError, "EmptyLibrary");

// cli / config
MAGESCAN_DEFINE_ERROR(ConfigError, "ConfigError");
MAGESCAN_DEFINE_ERROR(IoError, "IoError");
MAGESCAN_DEFINE_ERROR(InvalidArgumentError, "InvalidArgument");

#undef MAGESCAN_DEFINE_ERROR

}  // namespace magescan
