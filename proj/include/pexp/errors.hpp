#ifndef PEXP_ERRORS_HPP
#define PEXP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pexp {

/// An iterative solver stopped before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved residual " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Two quadrature resolutions disagree beyond the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved relative tolerance " + std::to_string(achieved) +
                           ")"),
        achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// No Monte Carlo draw landed in the small ball; raise eps or the sample count.
class ZeroHits : public std::runtime_error {
 public:
  ZeroHits(double eps, std::size_t samples)
      : std::runtime_error("no draw inside the ball of radius " + std::to_string(eps) + " out of " +
                           std::to_string(samples) + " samples"),
        eps_(eps) {}
  double eps() const noexcept { return eps_; }

 private:
  double eps_;
};

/// Parameters fall outside the hypotheses of the requested rate result.
class OutsideHypotheses : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters are admissible but the formula degenerates (e.g. division by zero).
class DegenerateValue : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace pexp

#endif  // PEXP_ERRORS_HPP
