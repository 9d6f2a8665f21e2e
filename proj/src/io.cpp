#include "vrhmm/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace vrhmm {

using nlohmann::json;

void write_text(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp + " for writing");
    out << content;
    if (!out.good()) throw DataError("failed writing " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("failed to move " + tmp + " into place");
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw DataError("expected a non-empty matrix");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw DataError("ragged matrix in parameter file");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

Matrix read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(field, &pos));
        while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) ++pos;
        if (pos != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw DataError("non-numeric field '" + field + "' in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("ragged row in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("no data rows in " + path);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_csv(const std::string& path, const Matrix& y, const std::string& header) {
  std::ostringstream out;
  out << std::setprecision(17);
  if (!header.empty()) out << "# " << header << "\n";
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (j) out << ',';
      out << y(i, j);
    }
    out << '\n';
  }
  write_text(path, out.str());
}

HmmParams read_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("bad JSON in " + path + ": " + e.what());
  }

  try {
    const std::string family = j.at("family").get<std::string>();
    if (family == "gaussian") {
      Matrix mean = matrix_from_json(j.at("emission").at("mean"));
      DiagGaussianEmission em(static_cast<int>(mean.rows()), static_cast<int>(mean.cols()));
      em.mean = mean;
      em.log_var = matrix_from_json(j.at("emission").at("log_var"));
      if (em.log_var.rows() != em.mean.rows() || em.log_var.cols() != em.mean.cols())
        throw DataError("mean and log_var shapes disagree in " + path);
      em.fix_variance = j.at("emission").value("fix_variance", false);

      const int n = static_cast<int>(mean.rows());
      HomogeneousTransition tr(n);
      tr.logits.eta_gamma = matrix_from_json(j.at("transition").at("eta_gamma"));
      tr.logits.eta_delta = vector_from_json(j.at("transition").at("eta_delta"));
      if (tr.logits.eta_gamma.rows() != n || tr.logits.eta_gamma.cols() != n ||
          tr.logits.eta_delta.size() != n)
        throw DataError("transition logits shape disagrees with state count in " + path);
      if (j.at("transition").contains("mask")) {
        Matrix mk = matrix_from_json(j.at("transition").at("mask"));
        if (mk.rows() != n || mk.cols() != n) throw DataError("mask shape mismatch in " + path);
        tr.logits.mask = mk.array() != 0.0;
      }
      return HmmParams{Emission{std::move(em)}, TransitionModel{std::move(tr)}};
    }
    if (family == "dive") {
      DiveEmission em;
      em.mu = vector_from_json(j.at("emission").at("mu"));
      em.rho = vector_from_json(j.at("emission").at("rho"));
      em.logit_p = vector_from_json(j.at("emission").at("logit_p"));
      if (em.mu.size() != 9 || em.rho.size() != 9 || em.logit_p.size() != 3)
        throw DataError("dive emission vectors have wrong lengths in " + path);

      DiveTransition tr;
      Matrix coarse = matrix_from_json(j.at("transition").at("coarse"));
      if (coarse.rows() != 3 || coarse.cols() != 3)
        throw DataError("coarse transition logits must be 3x3 in " + path);
      tr.coarse = coarse;
      const auto& fines = j.at("transition").at("fine");
      if (fines.size() != 3) throw DataError("expected three fine transition blocks in " + path);
      for (int b = 0; b < 3; ++b) {
        Matrix f = matrix_from_json(fines[b]);
        if (f.rows() != 3 || f.cols() != 3)
          throw DataError("fine transition logits must be 3x3 in " + path);
        tr.fine[static_cast<std::size_t>(b)] = f;
      }
      Vector d = vector_from_json(j.at("transition").at("delta"));
      if (d.size() != 3) throw DataError("dive initial logits have wrong length in " + path);
      tr.delta = d;
      return HmmParams{Emission{std::move(em)}, TransitionModel{std::move(tr)}};
    }
    throw DataError("unknown model family '" + family + "' in " + path);
  } catch (const json::exception& e) {
    throw DataError("missing or malformed key in " + path + ": " + e.what());
  }
}

void write_params(const std::string& path, const HmmParams& params) {
  json j;
  if (const auto* em = std::get_if<DiagGaussianEmission>(&params.emission)) {
    j["family"] = "gaussian";
    j["emission"] = {{"mean", matrix_to_json(em->mean)},
                     {"log_var", matrix_to_json(em->log_var)},
                     {"fix_variance", em->fix_variance}};
    const auto& tr = std::get<HomogeneousTransition>(params.transition);
    j["transition"] = {{"eta_gamma", matrix_to_json(tr.logits.eta_gamma)},
                       {"eta_delta", vector_to_json(tr.logits.eta_delta)}};
    if (tr.logits.mask.any()) {
      Matrix mk = tr.logits.mask.cast<double>();
      j["transition"]["mask"] = matrix_to_json(mk);
    }
  } else {
    const auto& em2 = std::get<DiveEmission>(params.emission);
    j["family"] = "dive";
    j["emission"] = {{"mu", vector_to_json(em2.mu)},
                     {"rho", vector_to_json(em2.rho)},
                     {"logit_p", vector_to_json(em2.logit_p)}};
    const auto& tr = std::get<DiveTransition>(params.transition);
    json fines = json::array();
    for (int b = 0; b < 3; ++b) fines.push_back(matrix_to_json(tr.fine[static_cast<std::size_t>(b)]));
    j["transition"] = {{"coarse", matrix_to_json(tr.coarse)},
                       {"fine", std::move(fines)},
                       {"delta", vector_to_json(Vector(tr.delta))}};
  }
  write_text(path, j.dump(2) + "\n");
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "# epoch,loglik,grad_norm_over_t,outer_iter,attempts,halvings\n";
  for (const auto& r : trace)
    out << r.epochs << ',' << r.loglik << ',' << r.grad_norm_over_t << ',' << r.k << ','
        << r.attempts << ',' << r.halvings << '\n';
  write_text(path, out.str());
}

}  // namespace vrhmm
