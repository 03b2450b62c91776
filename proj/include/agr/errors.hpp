#pragma once

#include <stdexcept>
#include <string>

namespace agr {

// Base class for all library errors.
class AgrError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model table or belief violates a stochasticity invariant.
class ModelInvariantViolation : public AgrError {
 public:
  using AgrError::AgrError;
};

// Bayes update conditioned on an observation with zero probability.
class ZeroProbabilityObservation : public AgrError {
 public:
  using AgrError::AgrError;
};

// sample_step called past the horizon.
class EpisodeFinished : public AgrError {
 public:
  using AgrError::AgrError;
};

// Exact solver exceeded its node cap.
class TreeTooLarge : public AgrError {
 public:
  using AgrError::AgrError;
};

// A policy has no action for a reached history or belief.
class UndefinedPolicyAction : public AgrError {
 public:
  using AgrError::AgrError;
};

// An AGR problem spec fails validation; message names the violated invariant.
class SpecInconsistent : public AgrError {
 public:
  using AgrError::AgrError;
};

// Bad domain or solver parameters.
class InvalidParams : public AgrError {
 public:
  using AgrError::AgrError;
};

// A map layout fails a structural or reachability check.
class InvalidLayout : public AgrError {
 public:
  using AgrError::AgrError;
};

// A variant transform was given an empty action set to penalize.
class EmptyActionSet : public AgrError {
 public:
  using AgrError::AgrError;
};

// An operation needs the S_P x S_T x G_T factorization of a compiled model
// but the metadata is absent or does not match the model.
class MissingFactorizationMetadata : public AgrError {
 public:
  using AgrError::AgrError;
};

// Vector/model dimensions disagree.
class DimensionMismatch : public AgrError {
 public:
  using AgrError::AgrError;
};

// Entropy is undefined for goal sets with fewer than two goals.
class DegenerateGoalSet : public AgrError {
 public:
  using AgrError::AgrError;
};

// Malformed interchange-format file.
class FormatError : public AgrError {
 public:
  using AgrError::AgrError;
};

// Malformed or invalid configuration file.
class ConfigError : public AgrError {
 public:
  using AgrError::AgrError;
};

}  // namespace agr
