#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mslin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Discrete bundles are indexed by n ∈ ℕ, continuous ones by t ≥ 0.
enum class TimeKind { discrete, continuous };

const char* to_string(TimeKind kind);

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Schema violations, dimension mismatches and unknown tags in a configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A step matrix whose smallest singular value is below the invertibility floor.
class SingularStep : public Error {
public:
    using Error::Error;
};

/// Neither the fixed-point nor the Newton scheme inverted F_n = A_n + f_n.
class NonContractiveInverse : public Error {
public:
    using Error::Error;
};

/// Terms of an unstable-scale series did not decay; the scale is likely misclassified.
class NoDecayDetected : public Error {
public:
    using Error::Error;
};

class CertificateNotPassed : public Error {
public:
    using Error::Error;
};

/// The inverse-pair and transport identities need vanishing center forcing.
class CenterNotTrivial : public Error {
public:
    using Error::Error;
};

/// λ_total ≥ 1, or a time of the wrong kind was passed to an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Largest singular value (spectral norm) of a dense matrix.
double spectral_norm(const Matrix& m);

/// Smallest singular value of a square matrix.
double smallest_singular_value(const Matrix& m);

}  // namespace mslin
