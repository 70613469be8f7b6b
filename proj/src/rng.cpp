#include "dbp/rng.hpp"

#include <cmath>

namespace dbp {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::string_view tag,
                             std::uint64_t node, std::uint64_t trial)
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ fnv1a(tag));
    h = splitmix64(h ^ (node + 0x51ed2701ULL));
    h = splitmix64(h ^ (trial + 0x2545f491ULL));
    return h;
}

cplx Rng::cgauss(double variance)
{
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
}

cmat Rng::cgauss(Eigen::Index rows, Eigen::Index cols, double variance)
{
    cmat out(rows, cols);
    // column-major fill order is part of the reproducibility contract
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r)
            out(r, c) = cgauss(variance);
    return out;
}

double Rng::uniform01()
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

std::uint64_t Rng::below(std::uint64_t n)
{
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

cplx Rng::qpsk()
{
    const double a = std::sqrt(0.5);
    const auto bits = below(4);
    return {(bits & 1U) ? a : -a, (bits & 2U) ? a : -a};
}

} // namespace dbp
