#pragma once

#include <stdexcept>
#include <string>

namespace affordkit {

enum class ErrorCode {
  // geometry
  NonPositiveDepth,
  InvalidDepth,
  LogNearPi,
  // ingest
  ManifestParse,
  MissingFile,
  DimensionMismatch,
  BadLandmarkObservation,
  DegenerateConfig,
  // metric calibration / refinement
  NoValidObservations,
  NonPositiveScale,
  DivergedOptimization,
  EmptyOverlap,
  // affordance extraction
  EmptyHandMask,
  NoValidHandDepth,
  NoVisiblePoints,
  NothingAboveThreshold,
  // volume queries
  DegenerateNormal,
  // guidance costs
  EmptyGoals,
  EmptyAgentPoints,
  DegenerateSegment,
  // diffusion
  BadScheduleParams,
  BadStepIndex,
  HorizonMismatch,
  EmptyBatch,
  // denoisers
  NumericalUnderflow,
  EmptyDataset,
  DivergedTraining,
  // cli
  UnknownTarget,
  IoError,
  InvalidArgument,
};

const char* error_code_name(ErrorCode code);

/// Domain error. The code identifies the failed contract; the message adds context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::LogNearPi: return "LogNearPi";
    case ErrorCode::ManifestParse: return "ManifestParse";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadLandmarkObservation: return "BadLandmarkObservation";
    case ErrorCode::DegenerateConfig: return "DegenerateConfig";
    case ErrorCode::NoValidObservations: return "NoValidObservations";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::DivergedOptimization: return "DivergedOptimization";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::EmptyHandMask: return "EmptyHandMask";
    case ErrorCode::NoValidHandDepth: return "NoValidHandDepth";
    case ErrorCode::NoVisiblePoints: return "NoVisiblePoints";
    case ErrorCode::NothingAboveThreshold: return "NothingAboveThreshold";
    case ErrorCode::DegenerateNormal: return "DegenerateNormal";
    case ErrorCode::EmptyGoals: return "EmptyGoals";
    case ErrorCode::EmptyAgentPoints: return "EmptyAgentPoints";
    case ErrorCode::DegenerateSegment: return "DegenerateSegment";
    case ErrorCode::BadScheduleParams: return "BadScheduleParams";
    case ErrorCode::BadStepIndex: return "BadStepIndex";
    case ErrorCode::HorizonMismatch: return "HorizonMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DivergedTraining: return "DivergedTraining";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace affordkit
