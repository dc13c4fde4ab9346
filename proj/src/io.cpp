#include "sdb/io.hpp"

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sdb/errors.hpp"

namespace sdb {

namespace {
constexpr char kMagic[8] = {'S', 'D', 'B', 'M', 'A', 'T', '0', '1'};

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::Io, "non-numeric cell '" + cell + "' in '" + path + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorCode::Io, "ragged CSV rows in '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::Io, "empty CSV '" + path + "'");
  return rows;
}
}  // namespace

Matrix read_matrix(const std::string& path, bool header) {
  if (has_suffix(path, ".bin")) return read_matrix_binary(path);
  const auto rows = read_csv_rows(path, header);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

Vector read_vector(const std::string& path, bool header) {
  const Matrix m = read_matrix(path, header);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw Error(ErrorCode::Io, "'" + path + "' is not a vector");
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out.precision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

void write_vector_csv(const std::string& path, const Vector& v) {
  write_matrix_csv(path, v);
}

Matrix read_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  char magic[8];
  std::uint64_t n = 0, p = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&p), 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw Error(ErrorCode::Io, "'" + path + "' is not a matrix file");
  Matrix m(static_cast<Index>(n), static_cast<Index>(p));
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(n * p * sizeof(double)));
  if (!in) throw Error(ErrorCode::Io, "truncated matrix file '" + path + "'");
  return m;
}

void write_matrix_binary(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  const std::uint64_t n = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t p = static_cast<std::uint64_t>(m.cols());
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&p), 8);
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(n * p * sizeof(double)));
}

namespace {
nlohmann::json vec_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}
}  // namespace

nlohmann::json to_json(const DebiasResult& r) {
  nlohmann::json j;
  j["beta_hat"] = vec_json(r.beta_hat);
  j["beta_u"] = vec_json(r.beta_u);
  j["adj"] = r.adj;
  j["eta_star"] = r.eta_star;
  j["tau_star"] = r.tau_star;
  j["tau_dstar"] = r.tau_dstar;
  j["sigma2"] = r.sigma2;
  j["sigma2_source"] = r.sigma2_known ? "known" : "estimated";
  j["feasibility_lhs"] = r.feasibility_lhs;
  j["valid"] = r.valid;
  j["flags"] = r.flags;
  j["fit"] = {{"iterations", r.fit.iterations},
              {"kkt_residual", r.fit.kkt_residual},
              {"objective", r.fit.objective},
              {"converged", r.fit.converged}};
  return j;
}

nlohmann::json to_json(const PcrResult& r) {
  nlohmann::json j = to_json(r.complement);
  j["beta_u"] = vec_json(r.beta_pcr);
  j["beta_al"] = vec_json(r.beta_al);
  j["beta_co"] = vec_json(r.beta_co);
  j["J"] = nlohmann::json::array();
  for (Index i : r.J) j["J"].push_back(i + 1);  // 1-based in reports
  j["theta_pcr"] = vec_json(r.theta_pcr);
  j["tau_star"] = r.tau_star;
  j["omega_hat"] = r.omega_hat;
  j["omega_clamped"] = r.omega_clamped;
  j["align_pvalues"] = vec_json(r.align.pvalues);
  j["align_s"] = vec_json(r.align.s);
  j["bh_rejected"] = r.align.bh_rejected;
  j["bh_q"] = r.align.q;
  return j;
}

nlohmann::json to_json(const FixedPoint& fp) {
  return {{"gamma_star", fp.gamma_star}, {"eta_star", fp.eta_star},
          {"tau_star", fp.tau_star},     {"tau_dstar", fp.tau_dstar},
          {"residuals", {fp.residuals[0], fp.residuals[1], fp.residuals[2], fp.residuals[3]}},
          {"converged", fp.converged},   {"iterations", fp.iterations}};
}

void write_inference_csv(const std::string& path, const Vector& beta_u,
                         const Vector& pvalues, const std::vector<Interval>& intervals,
                         double alpha) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out.precision(17);
  out << "index,beta_u,pvalue,ci_lo,ci_hi,reject\n";
  for (Index i = 0; i < beta_u.size(); ++i) {
    out << (i + 1) << ',' << beta_u[i] << ',' << pvalues[i] << ',' << intervals[i].lo
        << ',' << intervals[i].hi << ',' << (pvalues[i] <= alpha ? 1 : 0) << '\n';
  }
}

// --------------------------------------------------------------------------
// TOML subset: [table] headers, key = value with strings, numbers, booleans
// and flat arrays. Enough for experiment recipes; anything fancier should be
// written as JSON.
// --------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

nlohmann::json parse_toml_scalar(const std::string& tok) {
  if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"')
    return tok.substr(1, tok.size() - 2);
  if (tok == "true") return true;
  if (tok == "false") return false;
  try {
    if (tok.find_first_of(".eE") != std::string::npos) return std::stod(tok);
    return std::stoll(tok);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Io, "TOML: cannot parse value '" + tok + "'");
  }
}

nlohmann::json parse_toml_value(const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty()) throw Error(ErrorCode::Io, "TOML: empty value");
  if (v.front() == '[') {
    if (v.back() != ']') throw Error(ErrorCode::Io, "TOML: unterminated array");
    nlohmann::json arr = nlohmann::json::array();
    std::string inner = v.substr(1, v.size() - 2);
    std::stringstream ss(inner);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (!tok.empty()) arr.push_back(parse_toml_scalar(tok));
    }
    return arr;
  }
  return parse_toml_scalar(v);
}

}  // namespace

nlohmann::json parse_toml_subset(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      // keep '#' inside quoted strings
      const auto quote = line.find('"');
      if (quote == std::string::npos || hash < quote) line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::Io, "TOML: malformed table header");
      std::string name = trim(line.substr(1, line.size() - 2));
      table = &root;
      std::stringstream ts(name);
      std::string part;
      while (std::getline(ts, part, '.')) table = &((*table)[trim(part)]);
      if (table->is_null()) *table = nlohmann::json::object();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Io, "TOML: expected key = value");
    const std::string key = trim(line.substr(0, eq));
    (*table)[key] = parse_toml_value(line.substr(eq + 1));
  }
  return root;
}

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (has_suffix(path, ".json")) return nlohmann::json::parse(text);
  if (has_suffix(path, ".toml")) return parse_toml_subset(text);
  // sniff: JSON starts with '{'
  const std::string t = trim(text.substr(0, std::min<std::size_t>(64, text.size())));
  if (!t.empty() && t.front() == '{') return nlohmann::json::parse(text);
  return parse_toml_subset(text);
}

} // namespace sdb
