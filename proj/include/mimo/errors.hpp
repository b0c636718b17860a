#pragma once

#include <stdexcept>
#include <string>

namespace mimo {

// Cholesky factorization hit a non-positive pivot. Signals a rank-deficient
// stacked channel (or an effective regularizer of zero on a singular Gram).
class not_positive_definite : public std::runtime_error {
  public:
    explicit not_positive_definite(const std::string &what) : std::runtime_error(what) {}
};

// Channel generation kept producing row-rank-deficient matrices.
class rank_deficiency_persistent : public std::runtime_error {
  public:
    explicit rank_deficiency_persistent(const std::string &what) : std::runtime_error(what) {}
};

// A null-space-based precoder needs more dimensions than the channel leaves.
class insufficient_null_space : public std::runtime_error {
  public:
    explicit insufficient_null_space(const std::string &what) : std::runtime_error(what) {}
};

// A precoding direction collapsed to (numerically) zero norm.
class zero_direction : public std::runtime_error {
  public:
    explicit zero_direction(const std::string &what) : std::runtime_error(what) {}
};

// Scenario file problem; message names the offending key.
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string &what) : std::runtime_error(what) {}
};

} // namespace mimo
