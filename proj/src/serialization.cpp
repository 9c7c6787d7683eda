#include "lrhmm/serialization.hpp"

#include "lrhmm/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace lrhmm {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix<double>& mat) {
  json rows = json::array();
  for (Index i = 0; i < mat.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix<double> matrix_from_json(const json& rows, Index expect_rows, Index expect_cols, const char* what) {
  if (!rows.is_array() || static_cast<Index>(rows.size()) != expect_rows) {
    throw ModelInvalidError(std::string(what) + " has the wrong number of rows");
  }
  Matrix<double> mat(expect_rows, expect_cols);
  for (Index i = 0; i < expect_rows; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != expect_cols) {
      throw ModelInvalidError(std::string(what) + " has the wrong number of columns");
    }
    for (Index j = 0; j < expect_cols; ++j) mat(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return mat;
}

Vector<double> vector_from_json(const json& values, Index expect, const char* what) {
  if (!values.is_array() || static_cast<Index>(values.size()) != expect) {
    throw ModelInvalidError(std::string(what) + " has the wrong length");
  }
  Vector<double> v(expect);
  for (Index i = 0; i < expect; ++i) v(i) = values[static_cast<std::size_t>(i)].get<double>();
  return v;
}

double log_or_neg_inf(double p) {
  if (p < 0) throw ModelInvalidError("negative probability in model document");
  return p == 0.0 ? neg_inf<double>() : std::log(p);
}

}  // namespace

std::string model_to_json(const LrHmmModel<double>& m) {
  json doc;
  doc["n_states"] = m.n_states;
  doc["n_dims"] = m.n_dims;
  doc["band_width"] = m.band_width;
  json pi = json::array();
  for (Index i = 0; i < m.n_states; ++i) pi.push_back(std::exp(m.log_pi(i)));
  doc["pi"] = std::move(pi);
  doc["A"] = matrix_to_json(m.log_A.unaryExpr([](double v) { return std::exp(v); }));
  json states = json::array();
  for (const auto& g : m.emissions) {
    json s;
    s["mean"] = json::array();
    for (Index i = 0; i < g.dims(); ++i) s["mean"].push_back(g.mean()(i));
    s["covariance"] = matrix_to_json(g.covariance());
    states.push_back(std::move(s));
  }
  doc["states"] = std::move(states);
  return doc.dump(2) + "\n";
}

LrHmmModel<double> model_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    LrHmmModel<double> m;
    m.n_states = doc.at("n_states").get<Index>();
    m.n_dims = doc.at("n_dims").get<Index>();
    m.band_width = doc.at("band_width").get<Index>();
    if (m.n_states < 1 || m.n_dims < 1) throw ModelInvalidError("n_states and n_dims must be >= 1");
    m.log_pi = vector_from_json(doc.at("pi"), m.n_states, "pi").unaryExpr(&log_or_neg_inf);
    m.log_A = matrix_from_json(doc.at("A"), m.n_states, m.n_states, "A").unaryExpr(&log_or_neg_inf);
    const auto& states = doc.at("states");
    if (!states.is_array() || static_cast<Index>(states.size()) != m.n_states) {
      throw ModelInvalidError("states must list one emission per state");
    }
    m.emissions.reserve(states.size());
    for (const auto& s : states) {
      m.emissions.emplace_back(vector_from_json(s.at("mean"), m.n_dims, "mean"),
                               matrix_from_json(s.at("covariance"), m.n_dims, m.n_dims, "covariance"));
    }
    const auto violations = validate_model(m);
    if (!violations.empty()) {
      std::string what = "invalid model document:";
      for (const auto& v : violations) what += std::string(" [") + to_string(v.kind) + "] " + v.detail;
      throw ModelInvalidError(what);
    }
    return m;
  } catch (const json::exception& err) {
    throw ModelInvalidError(std::string("malformed model document: ") + err.what());
  } catch (const UsageError& err) {
    throw ModelInvalidError(std::string("malformed model document: ") + err.what());
  }
}

void save_model(const std::filesystem::path& path, const LrHmmModel<double>& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  out << model_to_json(m);
}

LrHmmModel<double> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace lrhmm
