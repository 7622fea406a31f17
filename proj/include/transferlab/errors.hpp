#pragma once

#include <stdexcept>
#include <string>

namespace transferlab {

// Base class for every error the library raises on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct StratificationError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };
struct UnsupportedOperation : Error { using Error::Error; };
struct InvalidArguments : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ZeroVarianceError : Error { using Error::Error; };
struct NoInitialAdversarial : Error { using Error::Error; };
struct DegenerateGradient : Error { using Error::Error; };
struct StepFailure : Error { using Error::Error; };
struct InvalidSource : Error { using Error::Error; };
struct InsufficientSources : Error { using Error::Error; };
struct AttackQualityError : Error { using Error::Error; };

// Every Monte Carlo probe landed on the same side of the boundary. The flag
// tells the caller which way to adjust the probe radius before retrying.
struct DegenerateEstimate : Error {
  DegenerateEstimate(const std::string& what, bool all_adversarial_)
      : Error(what), all_adversarial(all_adversarial_) {}
  bool all_adversarial;
};

}  // namespace transferlab
