#ifndef ADAPTQP_ERRORS_HPP
#define ADAPTQP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace adaptqp {

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct AsymmetricP : std::runtime_error {
  explicit AsymmetricP(const std::string& what) : std::runtime_error(what) {}
};

struct BoundsCrossed : std::runtime_error {
  explicit BoundsCrossed(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteEntry : std::runtime_error {
  explicit NonFiniteEntry(const std::string& what) : std::runtime_error(what) {}
};

struct AlreadyScaled : std::runtime_error {
  explicit AlreadyScaled(const std::string& what) : std::runtime_error(what) {}
};

struct SingularSystem : std::runtime_error {
  explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

struct StaleFactorization : std::runtime_error {
  explicit StaleFactorization(const std::string& what) : std::runtime_error(what) {}
};

struct StaleResiduals : std::runtime_error {
  explicit StaleResiduals(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct NoRecordedForward : std::runtime_error {
  explicit NoRecordedForward(const std::string& what) : std::runtime_error(what) {}
};

struct EpisodeFinished : std::runtime_error {
  explicit EpisodeFinished(const std::string& what) : std::runtime_error(what) {}
};

struct HistoryTooShort : std::runtime_error {
  explicit HistoryTooShort(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidArgument : std::runtime_error {
  explicit InvalidArgument(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace adaptqp

#endif
