#include "dbp/serialize.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace dbp::io {

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_matrix_block(std::ostream& os, const std::string& tag, const cmat& A)
{
    os << tag << ',' << A.rows() << ',' << A.cols() << '\n';
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        for (Eigen::Index c = 0; c < A.cols(); ++c) {
            if (c)
                os << ',';
            os << fmt(A(r, c).real()) << ',' << fmt(A(r, c).imag());
        }
        os << '\n';
    }
}

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ','))
        out.push_back(f);
    return out;
}

} // namespace

cmat read_matrix_rows(std::istream& is, Eigen::Index rows, Eigen::Index cols)
{
    cmat A(rows, cols);
    std::string line;
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(is, line))
            throw ConfigError("matrix block truncated");
        const auto f = split(line);
        if (static_cast<Eigen::Index>(f.size()) != 2 * cols)
            throw ConfigError("matrix row has " + std::to_string(f.size()) + " fields, expected " +
                              std::to_string(2 * cols));
        for (Eigen::Index c = 0; c < cols; ++c)
            A(r, c) = cplx(std::stod(f[2 * c]), std::stod(f[2 * c + 1]));
    }
    return A;
}

void write_precoders(std::ostream& os, const model::SystemConfig& cfg, const dl::PrecoderSet& P)
{
    const std::size_t K = P.Z.empty() ? 0 : P.Z.front().size();
    os << "precoder_set,schema_version=" << kSchemaVersion << ",n_sc=" << P.Z.size()
       << ",n_users=" << K << ",n_dn=" << cfg.C << ",p_max=" << fmt(P.p_max) << '\n';
    for (std::size_t j = 0; j < P.Z.size(); ++j)
        for (std::size_t k = 0; k < K; ++k)
            for (int i = 0; i < cfg.C; ++i)
                write_matrix_block(os, "Z," + std::to_string(i) + ',' + std::to_string(k) + ',' + std::to_string(j),
                                   P.block(cfg, static_cast<int>(j), static_cast<int>(k), i));
}

dl::PrecoderSet read_precoders(std::istream& is, const model::SystemConfig& cfg)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("precoder_set,", 0) != 0)
        throw ConfigError("precoder file: missing precoder_set header");
    int n_sc = -1, n_users = -1;
    dl::PrecoderSet P;
    for (const auto& kv : split(line)) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            continue;
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "schema_version" && std::stoi(val) != kSchemaVersion)
            throw ConfigError("precoder file: unsupported schema_version " + val);
        if (key == "n_sc")
            n_sc = std::stoi(val);
        else if (key == "n_users")
            n_users = std::stoi(val);
        else if (key == "p_max")
            P.p_max = std::stod(val);
        else if (key == "n_dn" && std::stoi(val) != cfg.C)
            throw ConfigError("precoder file: DN count does not match the configuration");
    }
    if (n_sc < 0 || n_users < 0)
        throw ConfigError("precoder file: header lacks n_sc or n_users");
    P.Z.assign(n_sc, std::vector<cmat>(n_users));
    std::vector<std::vector<std::vector<cmat>>> parts(n_sc, std::vector<std::vector<cmat>>(n_users, std::vector<cmat>(cfg.C)));
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto f = split(line);
        if (f.size() != 6 || f[0] != "Z")
            throw ConfigError("precoder file: expected a Z,dn,user,subcarrier,rows,cols line");
        const int i = std::stoi(f[1]), k = std::stoi(f[2]), j = std::stoi(f[3]);
        if (i < 0 || i >= cfg.C || k < 0 || k >= n_users || j < 0 || j >= n_sc)
            throw ConfigError("precoder file: block index out of range");
        parts[j][k][i] = read_matrix_rows(is, std::stol(f[4]), std::stol(f[5]));
    }
    for (int j = 0; j < n_sc; ++j)
        for (int k = 0; k < n_users; ++k) {
            Eigen::Index rows = 0, cols = parts[j][k][0].cols();
            for (const auto& b : parts[j][k]) {
                if (b.cols() != cols)
                    throw ConfigError("precoder file: missing or inconsistent block");
                rows += b.rows();
            }
            if (rows != cfg.M)
                throw ConfigError("precoder file: stacked rows != M");
            P.Z[j][k] = model::stack_rows(parts[j][k]);
        }
    return P;
}

void write_lcp_design(std::ostream& os, const dl::LcpDesign& d)
{
    const std::size_t N = d.U.empty() ? 0 : d.U.front().size();
    const std::size_t K = N ? d.U.front().front().size() : 0;
    os << "lcp_design,schema_version=" << kSchemaVersion << ",n_dn=" << d.V.size() << ",n_sc=" << N
       << ",n_users=" << K << ",scale=" << fmt(d.scale) << '\n';
    for (std::size_t i = 0; i < d.V.size(); ++i)
        write_matrix_block(os, "V," + std::to_string(i), d.V[i]);
    for (std::size_t i = 0; i < d.U.size(); ++i)
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t k = 0; k < K; ++k)
                write_matrix_block(os, "U," + std::to_string(i) + ',' + std::to_string(k) + ',' + std::to_string(j),
                                   d.U[i][j][k]);
}

void write_compression_design(std::ostream& os, const ul::CompressionDesign& d)
{
    os << "compression_design,schema_version=" << kSchemaVersion << ",n_dn=" << d.V.size()
       << ",n_sc=" << d.U.size() << '\n';
    for (std::size_t i = 0; i < d.V.size(); ++i)
        write_matrix_block(os, "V," + std::to_string(i), d.V[i]);
    for (std::size_t j = 0; j < d.U.size(); ++j)
        write_matrix_block(os, "U," + std::to_string(j), d.U[j]);
}

void write_trace_csv(std::ostream& os, const std::vector<ul::TraceRow>& trace)
{
    os << "schema_version,iteration,step,objective,primal,inner\n";
    for (const auto& t : trace)
        os << kSchemaVersion << ',' << t.iteration << ',' << t.step << ',' << fmt(t.objective) << ','
           << fmt(t.primal) << ',' << t.inner << '\n';
}

} // namespace dbp::io
