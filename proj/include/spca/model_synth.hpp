#pragma once

// Spiked Wigner / Wishart instance generation and the binary instance dump.
//
//   Wigner:   Y = sqrt(lambda/n) x x^T + Z,  x_i ~ Ber(eps),  Z symmetric with
//             (Z_ij)_{i<=j} iid N(0,1) (unit-variance diagonal)
//   Wishart:  Y = sqrt(lambda/n) u v^T + Z,  u_i ~ N(0,1), v_j ~ Ber(eps),
//             Z (m x n) iid N(0,1)
//
// Each component is drawn from its own Philox substream of the instance seed.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "spca/error.hpp"
#include "spca/rng.hpp"

namespace spca {

struct WignerInstance {
    long n = 0;
    double lambda = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    Eigen::VectorXd x; ///< hidden signal, scoring only
    Eigen::MatrixXd Y;
};

struct WishartInstance {
    long m = 0;
    long n = 0;
    double lambda = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    Eigen::VectorXd u; ///< hidden dense factor, scoring only
    Eigen::VectorXd v; ///< hidden sparse factor, scoring only
    Eigen::MatrixXd Y;

    double alpha() const { return static_cast<double>(m) / static_cast<double>(n); }
};

namespace detail {

inline void check_model_params(long n, double lambda, double epsilon)
{
    require(n >= 1, "dimension must be >= 1");
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be finite and >= 0");
    require_sparsity(epsilon);
}

inline Eigen::VectorXd bernoulli_vector(long n, double epsilon, std::uint64_t seed)
{
    auto eng = make_stream(seed, Stream::signal);
    Eigen::VectorXd x(n);
    for (long i = 0; i < n; ++i) x(i) = eng.uniform01() < epsilon ? 1.0 : 0.0;
    return x;
}

} // namespace detail

inline WignerInstance sample_wigner(long n, double lambda, double epsilon, std::uint64_t seed)
{
    detail::check_model_params(n, lambda, epsilon);
    WignerInstance inst;
    inst.n = n;
    inst.lambda = lambda;
    inst.epsilon = epsilon;
    inst.seed = seed;
    inst.x = detail::bernoulli_vector(n, epsilon, seed);

    const double scale = std::sqrt(lambda / static_cast<double>(n));
    NormalSampler noise(make_stream(seed, Stream::noise));
    inst.Y.resize(n, n);
    for (long i = 0; i < n; ++i) {
        for (long j = i; j < n; ++j) {
            const double y = scale * inst.x(i) * inst.x(j) + noise();
            inst.Y(i, j) = y;
            inst.Y(j, i) = y;
        }
    }
    return inst;
}

inline WishartInstance sample_wishart(long m, long n, double lambda, double epsilon, std::uint64_t seed)
{
    detail::check_model_params(n, lambda, epsilon);
    detail::require(m >= 1, "dimension m must be >= 1");
    WishartInstance inst;
    inst.m = m;
    inst.n = n;
    inst.lambda = lambda;
    inst.epsilon = epsilon;
    inst.seed = seed;
    inst.v = detail::bernoulli_vector(n, epsilon, seed);

    NormalSampler dense(make_stream(seed, Stream::dense_factor));
    inst.u.resize(m);
    for (long i = 0; i < m; ++i) inst.u(i) = dense();

    const double scale = std::sqrt(lambda / static_cast<double>(n));
    NormalSampler noise(make_stream(seed, Stream::noise));
    inst.Y.resize(m, n);
    for (long i = 0; i < m; ++i)
        for (long j = 0; j < n; ++j) inst.Y(i, j) = scale * inst.u(i) * inst.v(j) + noise();
    return inst;
}

// ---------------------------------------------------------------------------
// Instance dump
//
// Observation file: one ASCII header line
//   SPCA-INSTANCE 1 model=<wigner|wishart> m=<rows> n=<cols> lambda=<%.17g> epsilon=<%.17g> seed=<u64>
// followed by m*n IEEE-754 doubles, little-endian, row-major.
// Sidecar "<path>.signal": header line
//   SPCA-SIGNAL 1 model=<...> m=<rows> n=<cols>
// then x (n doubles) for Wigner, or u (m doubles) followed by v (n doubles).

struct InstanceHeader {
    std::string model;
    long m = 0;
    long n = 0;
    double lambda = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline void write_le(std::ostream& os, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    char buf[8];
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<char>((bits >> (8 * k)) & 0xFF);
    os.write(buf, 8);
}

inline double read_le(std::istream& is)
{
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw ParameterError("instance file truncated");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t{buf[k]} << (8 * k);
    return std::bit_cast<double>(bits);
}

inline std::string fmt17(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::map<std::string, std::string> parse_header_fields(const std::string& line,
                                                              const std::string& magic)
{
    std::istringstream is(line);
    std::string tag, version;
    is >> tag >> version;
    if (tag != magic || version != "1") throw ParameterError("not a " + magic + " v1 file");
    std::map<std::string, std::string> kv;
    std::string tok;
    while (is >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ParameterError("malformed header token: " + tok);
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

inline void write_observation(const std::string& path, const InstanceHeader& h, const Eigen::MatrixXd& Y)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParameterError("cannot open " + path + " for writing");
    os << "SPCA-INSTANCE 1 model=" << h.model << " m=" << h.m << " n=" << h.n
       << " lambda=" << fmt17(h.lambda) << " epsilon=" << fmt17(h.epsilon) << " seed=" << h.seed << '\n';
    for (long i = 0; i < Y.rows(); ++i)
        for (long j = 0; j < Y.cols(); ++j) write_le(os, Y(i, j));
}

inline void write_signal(const std::string& path, const std::string& model, long m, long n,
                         std::initializer_list<const Eigen::VectorXd*> parts)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParameterError("cannot open " + path + " for writing");
    os << "SPCA-SIGNAL 1 model=" << model << " m=" << m << " n=" << n << '\n';
    for (const auto* p : parts)
        for (long i = 0; i < p->size(); ++i) write_le(os, (*p)(i));
}

} // namespace detail

inline void write_instance(const std::string& path, const WignerInstance& inst)
{
    detail::write_observation(path, {"wigner", inst.n, inst.n, inst.lambda, inst.epsilon, inst.seed}, inst.Y);
    detail::write_signal(path + ".signal", "wigner", inst.n, inst.n, {&inst.x});
}

inline void write_instance(const std::string& path, const WishartInstance& inst)
{
    detail::write_observation(path, {"wishart", inst.m, inst.n, inst.lambda, inst.epsilon, inst.seed}, inst.Y);
    detail::write_signal(path + ".signal", "wishart", inst.m, inst.n, {&inst.u, &inst.v});
}

/// Reads the observation file; fills `Y` and returns the header.
inline InstanceHeader read_observation(const std::string& path, Eigen::MatrixXd& Y)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParameterError("cannot open " + path);
    std::string line;
    std::getline(is, line);
    const auto kv = detail::parse_header_fields(line, "SPCA-INSTANCE");
    InstanceHeader h;
    try {
        h.model = kv.at("model");
        h.m = std::stol(kv.at("m"));
        h.n = std::stol(kv.at("n"));
        h.lambda = std::stod(kv.at("lambda"));
        h.epsilon = std::stod(kv.at("epsilon"));
        h.seed = std::stoull(kv.at("seed"));
    } catch (const std::exception&) {
        throw ParameterError("incomplete instance header in " + path);
    }
    detail::require(h.m >= 1 && h.n >= 1, "instance dimensions must be positive");
    Y.resize(h.m, h.n);
    for (long i = 0; i < h.m; ++i)
        for (long j = 0; j < h.n; ++j) Y(i, j) = detail::read_le(is);
    return h;
}

inline WignerInstance read_wigner_instance(const std::string& path)
{
    WignerInstance inst;
    const auto h = read_observation(path, inst.Y);
    detail::require(h.model == "wigner" && h.m == h.n, path + " is not a Wigner instance");
    inst.n = h.n;
    inst.lambda = h.lambda;
    inst.epsilon = h.epsilon;
    inst.seed = h.seed;

    std::ifstream is(path + ".signal", std::ios::binary);
    if (!is) throw ParameterError("missing signal sidecar " + path + ".signal");
    std::string line;
    std::getline(is, line);
    detail::parse_header_fields(line, "SPCA-SIGNAL");
    inst.x.resize(h.n);
    for (long i = 0; i < h.n; ++i) inst.x(i) = detail::read_le(is);
    return inst;
}

inline WishartInstance read_wishart_instance(const std::string& path)
{
    WishartInstance inst;
    const auto h = read_observation(path, inst.Y);
    detail::require(h.model == "wishart", path + " is not a Wishart instance");
    inst.m = h.m;
    inst.n = h.n;
    inst.lambda = h.lambda;
    inst.epsilon = h.epsilon;
    inst.seed = h.seed;

    std::ifstream is(path + ".signal", std::ios::binary);
    if (!is) throw ParameterError("missing signal sidecar " + path + ".signal");
    std::string line;
    std::getline(is, line);
    detail::parse_header_fields(line, "SPCA-SIGNAL");
    inst.u.resize(h.m);
    inst.v.resize(h.n);
    for (long i = 0; i < h.m; ++i) inst.u(i) = detail::read_le(is);
    for (long j = 0; j < h.n; ++j) inst.v(j) = detail::read_le(is);
    return inst;
}

} // namespace spca
