#pragma once

#include <stdexcept>
#include <string>

namespace oslab {

/// Base class for every error raised by the library.
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
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class ZeroMatrix : public Error {
 public:
  using Error::Error;
};

/// A most expanding plane was requested where the singular spectrum has no gap.
/// `index()` is the dimension k at which gr_k(g) <= 1 + tolerance.
class DegenerateGap : public Error {
 public:
  DegenerateGap(int index, const std::string& what) : Error(what), index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

/// Two flags are too close to degenerate for their intersection to be meaningful.
/// `pair()` is the 1-based component index whose alignment fell below the cutoff.
class NonTransversal : public Error {
 public:
  NonTransversal(int pair, const std::string& what) : Error(what), pair_(pair) {}
  int pair() const { return pair_; }

 private:
  int pair_;
};

class NotARefinement : public Error {
 public:
  using Error::Error;
};

class InfeasibleRange : public Error {
 public:
  using Error::Error;
};

class NoSchedule : public Error {
 public:
  using Error::Error;
};

/// Avalanche Principle hypotheses not met. `index()` is the offending matrix
/// position (or -1 for the parameter constraint).
class HypothesisFailure : public Error {
 public:
  HypothesisFailure(int index, std::string condition, const std::string& what)
      : Error(what), index_(index), condition_(std::move(condition)) {}
  int index() const { return index_; }
  const std::string& condition() const { return condition_; }

 private:
  int index_;
  std::string condition_;
};

/// Experiment configuration rejected. `path()` names the offending field,
/// e.g. "continuity.h[2]".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace oslab
