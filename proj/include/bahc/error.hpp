#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace bahc {

/// Coarse failure category; the CLI maps each to an exit code.
enum class ErrorKind { Config, Data, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// A row of the data has zero sample variance, so its correlations are undefined.
class ZeroVarianceError : public DataError {
public:
    explicit ZeroVarianceError(std::size_t row)
        : DataError("row " + std::to_string(row) + " has zero variance"), row_(row) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class NonpositiveDiagonalError : public DataError {
public:
    explicit NonpositiveDiagonalError(std::size_t index)
        : DataError("diagonal entry " + std::to_string(index) + " is not positive"), index_(index) {}
    [[nodiscard]] std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class SingularCovarianceError : public NumericalError {
public:
    SingularCovarianceError(double min_eigenvalue, double max_eigenvalue)
        : NumericalError("covariance is numerically singular (min eigenvalue " + std::to_string(min_eigenvalue) +
                         ", max eigenvalue " + std::to_string(max_eigenvalue) + ")"),
          min_eigenvalue_(min_eigenvalue),
          max_eigenvalue_(max_eigenvalue) {}

    [[nodiscard]] double min_eigenvalue() const noexcept { return min_eigenvalue_; }
    [[nodiscard]] double max_eigenvalue() const noexcept { return max_eigenvalue_; }
    [[nodiscard]] double condition_number() const noexcept {
        return min_eigenvalue_ > 0.0 ? max_eigenvalue_ / min_eigenvalue_ : std::numeric_limits<double>::infinity();
    }

private:
    double min_eigenvalue_;
    double max_eigenvalue_;
};

class DegenerateBootstrapError : public NumericalError {
public:
    explicit DegenerateBootstrapError(std::size_t bootstrap)
        : NumericalError("bootstrap " + std::to_string(bootstrap) +
                         " kept producing zero-variance rows after the retry limit"),
          bootstrap_(bootstrap) {}
    [[nodiscard]] std::size_t bootstrap() const noexcept { return bootstrap_; }

private:
    std::size_t bootstrap_;
};

class NonpositiveEigenvalueError : public NumericalError {
public:
    explicit NonpositiveEigenvalueError(std::size_t rank)
        : NumericalError("eigenvalue at rank " + std::to_string(rank) + " is not positive"), rank_(rank) {}
    [[nodiscard]] std::size_t rank() const noexcept { return rank_; }

private:
    std::size_t rank_;
};

}  // namespace bahc
