#include "bmfmc/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace bmfmc {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// std::stod raises out_of_range on subnormals; strtod just returns them
double parse_double(const std::string& cell, const std::filesystem::path& path) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) throw artifact_error("non-numeric CSV cell '" + cell + "' in " + path.string());
  return v;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw artifact_error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw artifact_error("cannot write file: " + path.string());
  out << content;
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw artifact_error("invalid JSON in " + path.string());
  return j;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_csv(const std::filesystem::path& path, const Matrix& data,
               const std::vector<std::string>& headers) {
  if (!headers.empty() && static_cast<Eigen::Index>(headers.size()) != data.cols())
    throw usage_error("write_csv: header count must match columns");
  std::ostringstream out;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    if (j) out << ',';
    if (headers.empty()) out << 'c' << j;
    else out << headers[static_cast<std::size_t>(j)];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      if (j) out << ',';
      out << format_double(data(i, j));
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

Matrix read_csv(const std::filesystem::path& path, std::vector<std::string>* headers) {
  std::ifstream in(path);
  if (!in) throw artifact_error("cannot open CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw artifact_error("empty CSV: " + path.string());
  std::vector<std::string> head;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) head.push_back(cell);
  }
  if (headers) *headers = head;

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell, path));
    if (row.size() != head.size())
      throw artifact_error("ragged CSV row in " + path.string());
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(head.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

json vec_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vec_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& x : j) v[i++] = x.get<double>();
  return v;
}

json mat_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix mat_from_json(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  if (n == 0) return Matrix(0, 0);
  const auto c = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != c)
      throw artifact_error("ragged matrix in JSON");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

json scalar_dist_to_json(const ScalarDistribution& d) {
  switch (d.kind) {
    case ScalarDistribution::Kind::Uniform:
      return {{"kind", "uniform"}, {"lo", d.a}, {"hi", d.b}};
    case ScalarDistribution::Kind::Lognormal:
      return {{"kind", "lognormal"}, {"mu", d.a}, {"sigma2", d.b}};
    case ScalarDistribution::Kind::Normal:
      return {{"kind", "normal"}, {"mu", d.a}, {"sigma2", d.b}};
  }
  throw usage_error("unreachable scalar kind");
}

ScalarDistribution scalar_dist_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "uniform")
    return ScalarDistribution::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  if (kind == "lognormal")
    return ScalarDistribution::lognormal(j.at("mu").get<double>(), j.at("sigma2").get<double>());
  if (kind == "normal")
    return ScalarDistribution::normal(j.at("mu").get<double>(), j.at("sigma2").get<double>());
  throw usage_error("unknown scalar distribution kind '" + kind + "'");
}

json field_spec_to_json(const RandomFieldSpec& s) {
  return {{"kind", "field"},
          {"grid", mat_to_json(s.grid)},
          {"mean", vec_to_json(s.mean)},
          {"amplitude", vec_to_json(s.amplitude)},
          {"length_scale", s.length_scale},
          {"jitter_rel", s.jitter_rel}};
}

RandomFieldSpec field_spec_from_json(const json& j) {
  RandomFieldSpec s;
  // grid: explicit point list or {count, lo, hi} for an equispaced 1-D grid
  const json& grid = j.at("grid");
  if (grid.is_object()) {
    s.grid = RandomFieldSpec::equispaced(grid.at("count").get<Eigen::Index>(),
                                         grid.at("lo").get<double>(),
                                         grid.at("hi").get<double>());
  } else {
    s.grid = mat_from_json(grid);
  }
  const Eigen::Index n = s.grid.rows();

  const json& mean = j.at("mean");
  if (mean.is_number()) {
    s.mean = Vector::Constant(n, mean.get<double>());
  } else if (mean.is_object() && mean.contains("parabolic")) {
    // max * 4 (g - lo)(hi - g) / (hi - lo)^2 along the first grid coordinate
    const json& p = mean.at("parabolic");
    const double mx = p.at("max").get<double>();
    const double lo = p.at("lo").get<double>();
    const double hi = p.at("hi").get<double>();
    s.mean.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double g = s.grid(i, 0);
      s.mean[i] = mx * 4.0 * (g - lo) * (hi - g) / ((hi - lo) * (hi - lo));
    }
  } else {
    s.mean = vec_from_json(mean);
  }

  const json& amp = j.at("amplitude");
  if (amp.is_number()) {
    s.amplitude = Vector::Constant(n, amp.get<double>());
  } else if (amp.is_object() && amp.contains("rel_mean")) {
    const double rel = amp.at("rel_mean").get<double>();
    s.amplitude = rel * s.mean.cwiseAbs();
  } else {
    s.amplitude = vec_from_json(amp);
  }

  s.length_scale = j.at("length_scale").get<double>();
  if (j.contains("jitter_rel")) s.jitter_rel = j.at("jitter_rel").get<double>();
  s.validate();
  return s;
}

json block_to_json(const BlockSpec& b) {
  json j = b.is_field() ? field_spec_to_json(std::get<RandomFieldSpec>(b.spec))
                        : scalar_dist_to_json(std::get<ScalarDistribution>(b.spec));
  j["name"] = b.name;
  return j;
}

BlockSpec block_from_json(const json& j) {
  BlockSpec b;
  b.name = j.at("name").get<std::string>();
  if (j.at("kind").get<std::string>() == "field") b.spec = field_spec_from_json(j);
  else b.spec = scalar_dist_from_json(j);
  return b;
}

json gp_to_json(const GaussianProcessModel& m) {
  json j;
  j["length_scale"] = m.params.length_scale;
  j["signal_var"] = m.params.signal_var;
  j["noise_var"] = m.params.noise_var;
  j["mean_mode"] = (m.mean_mode == MeanMode::Zero) ? "zero" : "lf-passthrough";
  j["deterministic"] = m.deterministic;
  j["residual_shift"] = m.residual_shift;
  j["log_marginal"] = m.log_marginal;
  j["z_train"] = mat_to_json(m.z_train);
  j["y_train"] = vec_to_json(m.y_train);
  j["content_hash"] = "";
  j["content_hash"] = json_hash(j);
  return j;
}

GaussianProcessModel gp_from_json(const json& j) {
  const MeanMode mode =
      j.at("mean_mode").get<std::string>() == "zero" ? MeanMode::Zero : MeanMode::LfPassthrough;
  const Matrix z = mat_from_json(j.at("z_train"));
  const Vector y = vec_from_json(j.at("y_train"));
  if (j.at("deterministic").get<bool>()) {
    GaussianProcessModel m;
    m.mean_mode = mode;
    m.z_train = z;
    m.y_train = y;
    m.deterministic = true;
    m.residual_shift = j.at("residual_shift").get<double>();
    m.params = KernelParams{1.0, 1.0, 0.0};
    return m;
  }
  KernelParams p{j.at("length_scale").get<double>(), j.at("signal_var").get<double>(),
                 j.at("noise_var").get<double>()};
  return gp_make(p, z, y, mode);
}

json density_to_json(const DensityPrediction& d) {
  json j;
  j["support"] = vec_to_json(d.support.points);
  j["mean"] = vec_to_json(d.mean);
  j["variance"] = vec_to_json(d.variance);
  j["n_used_mean"] = d.n_used_mean;
  j["n_used_var"] = d.n_used_var;
  j["variance_preclamp_min"] = d.variance_preclamp_min;
  return j;
}

DensityPrediction density_from_json(const json& j) {
  DensityPrediction d;
  d.support.points = vec_from_json(j.at("support"));
  d.mean = vec_from_json(j.at("mean"));
  d.variance = vec_from_json(j.at("variance"));
  d.n_used_mean = j.at("n_used_mean").get<Eigen::Index>();
  d.n_used_var = j.at("n_used_var").get<Eigen::Index>();
  d.variance_preclamp_min = j.at("variance_preclamp_min").get<double>();
  return d;
}

json kle_to_json(const KLEBasis& b) {
  return {{"eigenvalues", vec_to_json(b.eigenvalues)},
          {"n_trunc", b.n_trunc},
          {"explained", b.explained},
          {"mean", vec_to_json(b.mean)}};
}

std::string json_hash(const json& j) { return hash_hex(fnv1a64(j.dump())); }

std::vector<std::string> sample_headers(const SampleMatrix& sm) {
  std::vector<std::string> headers;
  headers.reserve(static_cast<std::size_t>(sm.dim()));
  for (const auto& b : sm.layout) {
    const std::string kind = b.field ? "field" : "uncorrelated";
    for (Eigen::Index k = 0; k < b.width; ++k)
      headers.push_back(kind + ":" + b.name + ":" + std::to_string(k));
  }
  return headers;
}

void write_sample_matrix(const std::filesystem::path& csv_path, const SampleMatrix& sm) {
  write_csv(csv_path, sm.data, sample_headers(sm));
}

}  // namespace bmfmc
