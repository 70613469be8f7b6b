#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dbp/dl_precode.hpp"
#include "dbp/ul_equalize.hpp"

namespace dbp::io {

inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip text for a double (%.17g).
std::string fmt(double x);

//
// Text format for complex blocks. A header line
//   <kind>,schema_version=1,key=value,...
// is followed by blocks, each introduced by a tag line such as
//   Z,dn,user,subcarrier,rows,cols
// and then `rows` lines of comma separated re,im pairs.
//
void write_precoders(std::ostream& os, const model::SystemConfig& cfg, const dl::PrecoderSet& P);
dl::PrecoderSet read_precoders(std::istream& is, const model::SystemConfig& cfg);

void write_lcp_design(std::ostream& os, const dl::LcpDesign& d);

void write_compression_design(std::ostream& os, const ul::CompressionDesign& d);

/// iteration,step,objective,primal,inner
void write_trace_csv(std::ostream& os, const std::vector<ul::TraceRow>& trace);

void write_matrix_block(std::ostream& os, const std::string& tag, const cmat& A);
cmat read_matrix_rows(std::istream& is, Eigen::Index rows, Eigen::Index cols);

} // namespace dbp::io
