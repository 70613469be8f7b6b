#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dbp {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rmat = Eigen::MatrixXd;
using rvec = Eigen::VectorXd;

//
// error hierarchy; the CLI maps ConfigError/TopologyError to exit code 2
// and NumericalError to exit code 3
//
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

class DimensionError : public Error
{
public:
    using Error::Error;
};

class DomainError : public Error
{
public:
    using Error::Error;
};

class TopologyError : public Error
{
public:
    using Error::Error;
};

class NumericalError : public Error
{
public:
    using Error::Error;
};

/// Execution policy for the data-parallel kernels. `serial` is the
/// reference path; `parallel` must produce bitwise-identical results.
enum class Exec
{
    serial,
    parallel
};

/// Runs fn(0..n-1). Iterations must write disjoint outputs.
template <typename Fn>
void for_each_index(Exec exec, int n, Fn&& fn)
{
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i)
            fn(i);
    } else {
        for (int i = 0; i < n; ++i)
            fn(i);
    }
}

inline void require(bool cond, const std::string& what)
{
    if (!cond)
        throw ConfigError(what);
}

inline void require_dims(bool cond, const std::string& what)
{
    if (!cond)
        throw DimensionError(what);
}

} // namespace dbp
