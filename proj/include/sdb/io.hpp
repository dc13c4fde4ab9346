#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "sdb/debias.hpp"
#include "sdb/inference.hpp"
#include "sdb/pcr.hpp"
#include "sdb/types.hpp"
#include "sdb/vamp.hpp"

namespace sdb {

// Matrices are read from CSV (rows = samples, no header unless told
// otherwise) or a binary column-major float64 format with an 8-byte magic
// and two u64 dimensions. ".bin" selects the binary reader.
Matrix read_matrix(const std::string& path, bool header = false);
Vector read_vector(const std::string& path, bool header = false);
void write_matrix_csv(const std::string& path, const Matrix& m);
void write_vector_csv(const std::string& path, const Vector& v);
Matrix read_matrix_binary(const std::string& path);
void write_matrix_binary(const std::string& path, const Matrix& m);

nlohmann::json to_json(const DebiasResult& r);
nlohmann::json to_json(const PcrResult& r);
nlohmann::json to_json(const FixedPoint& fp);

// index, beta_u, pvalue, ci_lo, ci_hi, reject
void write_inference_csv(const std::string& path, const Vector& beta_u,
                         const Vector& pvalues, const std::vector<Interval>& intervals,
                         double alpha);

// Config files are JSON or a small TOML subset (tables, scalars, flat
// arrays); both parse to the same JSON document.
nlohmann::json load_config(const std::string& path);
nlohmann::json parse_toml_subset(const std::string& text);

} // namespace sdb
