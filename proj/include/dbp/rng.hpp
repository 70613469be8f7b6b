#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "dbp/common.hpp"

namespace dbp {

//
// Named random substreams. A stream is identified by (seed, module tag,
// node index, trial index); adding nodes or trials never perturbs the
// draws of any other stream.
//
std::uint64_t substream_seed(std::uint64_t seed, std::string_view tag,
                             std::uint64_t node = 0, std::uint64_t trial = 0);

class Rng
{
public:
    Rng(std::uint64_t seed, std::string_view tag, std::uint64_t node = 0,
        std::uint64_t trial = 0)
        : engine_(substream_seed(seed, tag, node, trial))
    {
    }

    /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    cplx cgauss(double variance = 1.0);

    /// Matrix of i.i.d. CN(0, variance) entries.
    cmat cgauss(Eigen::Index rows, Eigen::Index cols, double variance = 1.0);

    double uniform01();

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Unit-modulus QPSK symbol.
    cplx qpsk();

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace dbp
